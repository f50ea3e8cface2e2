#pragma once

// Reference-less gender accuracy for translations of coreference records.
//
// The grammatical gender given to the focus entity is read off the
// translation with a per-language lexicon of masculine and feminine target
// forms. Matching is done on NFC-normalized, case-folded text; an occurrence
// of a form that lies inside an occurrence of a longer form is ignored, so
// "doctora" is not also counted as "doctor". If the surviving occurrences
// are all masculine or all feminine the prediction is that gender, otherwise
// (none, or both) it is Unknown.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gentrans/corpus.hpp"
#include "gentrans/error.hpp"
#include "gentrans/prompting.hpp"
#include "gentrans/text.hpp"

namespace gentrans {

struct GenderForms {
  std::vector<std::string> masculine;
  std::vector<std::string> feminine;
};

class GenderLexicon {
 public:
  /// Adds (lang, entity). Form lists must be non-empty and disjoint after
  /// case folding.
  void add(const std::string& lang, const std::string& entity, GenderForms forms) {
    auto clean = [](std::vector<std::string>& v) {
      std::vector<std::string> out;
      for (auto& f : v) {
        auto t = text::trim(f);
        if (!t.empty()) out.emplace_back(t);
      }
      v = std::move(out);
    };
    clean(forms.masculine);
    clean(forms.feminine);
    if (forms.masculine.empty() || forms.feminine.empty()) {
      throw Error(ErrorKind::InvalidConfig, "lexicon entry " + lang + "/" + entity + " needs both form lists");
    }
    std::set<std::string> masc_keys;
    for (const auto& f : forms.masculine) masc_keys.insert(text::match_key(f));
    for (const auto& f : forms.feminine) {
      if (masc_keys.count(text::match_key(f))) {
        throw Error(ErrorKind::InvalidConfig, "lexicon entry " + lang + "/" + entity + ": '" + f + "' is both masculine and feminine");
      }
    }
    entries_[lang][text::match_key(entity)] = std::move(forms);
  }

  const GenderForms* find(const std::string& lang, std::string_view entity) const {
    auto l = entries_.find(lang);
    if (l == entries_.end()) return nullptr;
    auto e = l->second.find(text::match_key(entity));
    return e == l->second.end() ? nullptr : &e->second;
  }

  bool contains(const std::string& lang, std::string_view entity) const { return find(lang, entity) != nullptr; }

  std::size_t size(const std::string& lang) const {
    auto l = entries_.find(lang);
    return l == entries_.end() ? 0 : l->second.size();
  }

  /// TSV with header lang, entity, masc_forms, fem_forms; forms are '|'-separated.
  static GenderLexicon parse(std::string_view content) {
    const auto table = text::parse_tsv(content);
    const auto c_lang = table.column("lang"), c_entity = table.column("entity"),
               c_masc = table.column("masc_forms"), c_fem = table.column("fem_forms");
    GenderLexicon lex;
    for (const auto& row : table.rows) {
      const auto& c = row.cells;
      try {
        lex.add(std::string(text::trim(c[c_lang])), std::string(text::trim(c[c_entity])),
                {text::split(c[c_masc], '|'), text::split(c[c_fem], '|')});
      } catch (const Error& e) {
        throw Error(e.kind(), "lexicon line " + std::to_string(row.line_no) + ": " + e.what());
      }
    }
    return lex;
  }

  static GenderLexicon load(const std::string& path) { return parse(text::read_file(path)); }

 private:
  std::map<std::string, std::map<std::string, GenderForms>> entries_;
};

enum class PredictedGender { Male, Female, Unknown };

inline std::string_view to_string(PredictedGender g) {
  switch (g) {
    case PredictedGender::Male: return "male";
    case PredictedGender::Female: return "female";
    case PredictedGender::Unknown: return "unknown";
  }
  return "unknown";
}

struct GenderPrediction {
  std::string record_id;
  PredictedGender predicted = PredictedGender::Unknown;
  std::optional<std::string> matched_form;
};

inline GenderPrediction predict_gender(std::string_view translation, std::string_view entity,
                                       const GenderLexicon& lexicon, const std::string& lang,
                                       std::string record_id = {}) {
  const auto* forms = lexicon.find(lang, entity);
  if (!forms) {
    throw Error(ErrorKind::EntityNotInLexicon, "no " + lang + " forms for '" + std::string(entity) + "'");
  }

  struct Occurrence {
    std::size_t begin, end;
    bool masculine;
    std::size_t form_index;
  };
  const auto hay = text::match_key(translation);
  std::vector<Occurrence> occ;
  auto scan = [&](const std::vector<std::string>& list, bool masculine) {
    for (std::size_t fi = 0; fi < list.size(); ++fi) {
      const auto needle = text::match_key(list[fi]);
      if (needle.empty()) continue;
      for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) {
        occ.push_back({pos, pos + needle.size(), masculine, fi});
      }
    }
  };
  scan(forms->masculine, true);
  scan(forms->feminine, false);

  const auto subsumed = [&](const Occurrence& o) {
    return std::any_of(occ.begin(), occ.end(), [&](const Occurrence& other) {
      return other.begin <= o.begin && o.end <= other.end && (other.end - other.begin) > (o.end - o.begin);
    });
  };
  std::optional<Occurrence> best_m, best_f;
  for (const auto& o : occ) {
    if (subsumed(o)) continue;
    auto& best = o.masculine ? best_m : best_f;
    // Longest wins; ties go to the earlier form in the lexicon.
    const auto len = o.end - o.begin;
    if (!best || len > best->end - best->begin ||
        (len == best->end - best->begin && o.form_index < best->form_index)) {
      best = o;
    }
  }

  GenderPrediction p;
  p.record_id = std::move(record_id);
  if (best_m.has_value() == best_f.has_value()) return p;
  const auto& win = best_m ? *best_m : *best_f;
  p.predicted = best_m ? PredictedGender::Male : PredictedGender::Female;
  p.matched_form = (best_m ? forms->masculine : forms->feminine)[win.form_index];
  return p;
}

inline bool matches_gold(PredictedGender p, Gender gold) {
  return (p == PredictedGender::Male && gold == Gender::Male) ||
         (p == PredictedGender::Female && gold == Gender::Female);
}

struct AccuracyResult {
  double accuracy = 0.0;
  double unknown_rate = 0.0;
  std::size_t n = 0;
};

/// Share of predictions equal to the gold gender; Unknown counts as wrong and
/// is also reported on its own. Predictions and records must cover the same
/// ids. An empty set yields zeros.
inline AccuracyResult gender_accuracy(const std::vector<GenderPrediction>& predictions,
                                      const std::vector<BugRecord>& records) {
  std::map<std::string_view, const BugRecord*> by_id;
  for (const auto& r : records) {
    if (!by_id.emplace(r.id, &r).second) throw Error(ErrorKind::IdMismatch, "duplicate record id '" + r.id + "'");
  }
  if (predictions.size() != records.size()) {
    throw Error(ErrorKind::IdMismatch, std::to_string(predictions.size()) + " predictions for " +
                                           std::to_string(records.size()) + " records");
  }
  std::set<std::string_view> seen;
  std::size_t correct = 0, unknown = 0;
  for (const auto& p : predictions) {
    auto it = by_id.find(p.record_id);
    if (it == by_id.end() || !seen.insert(p.record_id).second) {
      throw Error(ErrorKind::IdMismatch, "prediction for unexpected or repeated id '" + p.record_id + "'");
    }
    if (p.predicted == PredictedGender::Unknown) ++unknown;
    if (matches_gold(p.predicted, it->second->gold_gender)) ++correct;
  }
  AccuracyResult r;
  r.n = records.size();
  if (r.n == 0) return r;
  r.accuracy = static_cast<double>(correct) / static_cast<double>(r.n);
  r.unknown_rate = static_cast<double>(unknown) / static_cast<double>(r.n);
  return r;
}

struct DeltaB {
  double signed_pp = 0.0;    // (male-gold accuracy - female-gold accuracy) * 100
  double absolute_pp = 0.0;
};

inline DeltaB delta_b(double acc_male_gold, double acc_female_gold) {
  const auto in_unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (!in_unit(acc_male_gold) || !in_unit(acc_female_gold)) {
    throw Error(ErrorKind::InvalidConfig, "accuracies must lie in [0, 1]");
  }
  const double d = (acc_male_gold - acc_female_gold) * 100.0;
  return {d, std::abs(d)};
}

/// Ids whose unspecified output is non-empty and whose gender-specific output
/// is Complete.
inline std::set<std::string> evaluable_subset(const std::map<std::string, std::optional<std::string>>& unspec_run,
                                              const std::map<std::string, GenderedTranslation>& gendered_run) {
  std::set<std::string> out;
  for (const auto& [id, text] : unspec_run) {
    if (!text || text::is_blank(*text)) continue;
    auto g = gendered_run.find(id);
    if (g != gendered_run.end() && g->second.status == GenerationStatus::Complete) out.insert(id);
  }
  return out;
}

/// One report cell group: accuracy, ΔB and Unknown share of a single output
/// kind of a single system over a fixed record subset.
struct BiasRow {
  std::string lang;
  std::string system;
  std::string output_kind;
  std::size_t n = 0;
  double accuracy = 0.0;
  DeltaB delta_b;
  double unknown_rate = 0.0;
};

/// Scores `translations` (record id -> text) on `records`, which must all be
/// covered by the lexicon.
inline BiasRow evaluate_bias(const std::string& lang, const std::string& system, const std::string& output_kind,
                             const std::map<std::string, std::string>& translations,
                             const std::vector<BugRecord>& records, const GenderLexicon& lexicon) {
  std::vector<GenderPrediction> all, male, female;
  std::vector<BugRecord> male_recs, female_recs;
  for (const auto& r : records) {
    auto it = translations.find(r.id);
    if (it == translations.end()) throw Error(ErrorKind::IdMismatch, "no translation for record '" + r.id + "'");
    auto p = predict_gender(it->second, r.entity, lexicon, lang, r.id);
    (r.gold_gender == Gender::Male ? male : female).push_back(p);
    (r.gold_gender == Gender::Male ? male_recs : female_recs).push_back(r);
    all.push_back(std::move(p));
  }
  const auto total = gender_accuracy(all, records);
  BiasRow row{lang, system, output_kind, total.n, total.accuracy, {}, total.unknown_rate};
  row.delta_b = delta_b(gender_accuracy(male, male_recs).accuracy, gender_accuracy(female, female_recs).accuracy);
  return row;
}

}  // namespace gentrans
