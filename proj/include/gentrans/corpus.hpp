#pragma once

// Loading and stratification of the three dataset families: gendered
// reference sets (one row per source with masculine/feminine/neutral/generic
// references), coreference bias records, and line-aligned parallel text.

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gentrans/error.hpp"
#include "gentrans/random.hpp"
#include "gentrans/text.hpp"

namespace gentrans {

struct MhbEntry {
  std::string id;
  std::string lang;
  std::string source;
  std::optional<std::string> masc;
  std::optional<std::string> fem;
  std::optional<std::string> neutral;
  std::optional<std::string> generic;
  std::string template_key;

  bool has_gendered_pair() const { return masc.has_value() && fem.has_value(); }

  /// Present references in column order masc, fem, neutral, generic.
  std::vector<std::string> references() const {
    std::vector<std::string> out;
    for (const auto* r : {&masc, &fem, &neutral, &generic}) {
      if (r->has_value()) out.push_back(**r);
    }
    return out;
  }

  friend bool operator==(const MhbEntry&, const MhbEntry&) = default;
};

enum class Gender { Male, Female };
enum class Stereotype { Pro, Anti };

inline std::string_view to_string(Gender g) { return g == Gender::Male ? "male" : "female"; }
inline std::string_view to_string(Stereotype s) { return s == Stereotype::Pro ? "pro" : "anti"; }

struct BugRecord {
  std::string id;
  std::string source;
  std::string entity;
  Gender gold_gender = Gender::Male;
  Stereotype stereotype = Stereotype::Pro;

  friend bool operator==(const BugRecord&, const BugRecord&) = default;
};

struct ParallelPair {
  std::string id;
  std::string source;
  std::string reference;
  std::string lang;

  friend bool operator==(const ParallelPair&, const ParallelPair&) = default;
};

using StratumKey = std::pair<Gender, Stereotype>;

inline constexpr std::array<StratumKey, 4> kAllStrata = {
    StratumKey{Gender::Male, Stereotype::Pro}, StratumKey{Gender::Male, Stereotype::Anti},
    StratumKey{Gender::Female, Stereotype::Pro}, StratumKey{Gender::Female, Stereotype::Anti}};

struct BalancedSample {
  std::map<StratumKey, std::vector<std::string>> strata;
  std::size_t n_per_stratum = 0;

  /// All sampled ids, stratum by stratum in kAllStrata order.
  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    for (const auto& key : kAllStrata) {
      auto it = strata.find(key);
      if (it != strata.end()) out.insert(out.end(), it->second.begin(), it->second.end());
    }
    return out;
  }

  friend bool operator==(const BalancedSample&, const BalancedSample&) = default;
};

/// A rejected input row. Loaders never drop rows silently.
struct RowIssue {
  std::size_t line_no = 0;
  ErrorKind kind = ErrorKind::ParseError;
  std::string message;
};

template <class T>
struct LoadResult {
  std::vector<T> items;
  std::vector<RowIssue> rejected;

  void throw_if_rejected() const {
    if (rejected.empty()) return;
    const auto& first = rejected.front();
    throw Error(first.kind, "line " + std::to_string(first.line_no) + ": " + first.message +
                                (rejected.size() > 1
                                     ? " (+" + std::to_string(rejected.size() - 1) + " more)"
                                     : std::string{}));
  }
};

namespace detail {

inline std::optional<std::string> optional_cell(const std::string& cell) {
  auto t = text::trim(cell);
  if (t.empty()) return std::nullopt;
  return std::string(t);
}

/// Word tokens for occurrence checks: anything that is not an ASCII
/// letter/digit/apostrophe/hyphen separates words; non-ASCII bytes are kept.
inline std::vector<std::string> word_tokens(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    const auto c = static_cast<unsigned char>(ch);
    const bool word = c >= 0x80 || std::isalnum(c) || c == '\'' || c == '-';
    if (word) {
      cur.push_back(ch);
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace detail

/// Case-insensitive token occurrence; multi-word entities must appear as a
/// contiguous token run.
inline bool contains_token(std::string_view sentence, std::string_view entity) {
  auto hay = detail::word_tokens(text::fold_case(sentence));
  auto needle = detail::word_tokens(text::fold_case(entity));
  if (needle.empty()) return false;
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

inline constexpr std::string_view kDescriptorPlaceholder = "⟨D⟩";

/// Template identity of a source sentence: the descriptor's first occurrence
/// is replaced with ⟨D⟩, the rest is case-folded and whitespace-collapsed.
inline std::string derive_template_key(std::string_view source, std::string_view descriptor) {
  const auto pos = descriptor.empty() ? std::string_view::npos : source.find(descriptor);
  if (pos == std::string_view::npos) {
    throw Error(ErrorKind::DescriptorNotFound,
                "'" + std::string(descriptor) + "' not in '" + std::string(source) + "'");
  }
  std::string joined = text::fold_case(source.substr(0, pos));
  joined += kDescriptorPlaceholder;
  joined += text::fold_case(source.substr(pos + descriptor.size()));
  return text::collapse_whitespace(joined);
}

/// Parses gendered-reference TSV content; see load_mhb.
inline LoadResult<MhbEntry> parse_mhb(std::string_view content, std::string_view lang) {
  const auto table = text::parse_tsv(content);
  const std::size_t c_id = table.column("id"), c_lang = table.column("lang"),
                    c_src = table.column("source"), c_masc = table.column("masc"),
                    c_fem = table.column("fem"), c_neutral = table.column("neutral"),
                    c_generic = table.column("generic"), c_key = table.column("template_key");

  LoadResult<MhbEntry> result;
  for (const auto& row : table.rows) {
    const auto& c = row.cells;
    if (text::trim(c[c_lang]) != lang) continue;
    MhbEntry e;
    e.id = std::string(text::trim(c[c_id]));
    e.lang = std::string(lang);
    e.source = std::string(text::trim(c[c_src]));
    e.masc = detail::optional_cell(c[c_masc]);
    e.fem = detail::optional_cell(c[c_fem]);
    e.neutral = detail::optional_cell(c[c_neutral]);
    e.generic = detail::optional_cell(c[c_generic]);
    e.template_key = std::string(text::trim(c[c_key]));
    if (e.source.empty()) {
      result.rejected.push_back({row.line_no, ErrorKind::EmptySource, "row '" + e.id + "' has an empty source"});
      continue;
    }
    if (e.references().empty()) {
      result.rejected.push_back({row.line_no, ErrorKind::NoReference, "row '" + e.id + "' has no translation"});
      continue;
    }
    // A row without a key is its own template.
    if (e.template_key.empty()) e.template_key = text::collapse_whitespace(text::fold_case(e.source));
    result.items.push_back(std::move(e));
  }
  return result;
}

/// Loads the rows of `lang` from a TSV with header
/// id, lang, source, masc, fem, neutral, generic, template_key.
/// Empty cells are absent fields. Throws MissingColumn on a malformed header;
/// invalid rows are returned in `rejected` with their line numbers.
inline LoadResult<MhbEntry> load_mhb(const std::string& path, std::string_view lang) {
  return parse_mhb(text::read_file(path), lang);
}

/// Entries usable for gendered experiments (both masc and fem present).
inline std::vector<MhbEntry> gendered_only(const std::vector<MhbEntry>& entries) {
  std::vector<MhbEntry> out;
  std::copy_if(entries.begin(), entries.end(), std::back_inserter(out),
               [](const MhbEntry& e) { return e.has_gendered_pair(); });
  return out;
}

inline LoadResult<BugRecord> parse_bug(std::string_view content) {
  const auto table = text::parse_tsv(content);
  const std::size_t c_id = table.column("id"), c_src = table.column("source"),
                    c_entity = table.column("entity"), c_gender = table.column("gold_gender"),
                    c_stereo = table.column("stereotype");

  LoadResult<BugRecord> result;
  for (const auto& row : table.rows) {
    const auto& c = row.cells;
    BugRecord r;
    r.id = std::string(text::trim(c[c_id]));
    r.source = std::string(text::trim(c[c_src]));
    r.entity = std::string(text::trim(c[c_entity]));

    const auto gender = text::fold_case(text::trim(c[c_gender]));
    const auto stereo = text::fold_case(text::trim(c[c_stereo]));
    if (gender == "male") {
      r.gold_gender = Gender::Male;
    } else if (gender == "female") {
      r.gold_gender = Gender::Female;
    } else {
      result.rejected.push_back({row.line_no, ErrorKind::BadEnum, "gold_gender '" + gender + "'"});
      continue;
    }
    if (stereo == "pro") {
      r.stereotype = Stereotype::Pro;
    } else if (stereo == "anti") {
      r.stereotype = Stereotype::Anti;
    } else {
      result.rejected.push_back({row.line_no, ErrorKind::BadEnum, "stereotype '" + stereo + "'"});
      continue;
    }
    if (!contains_token(r.source, r.entity)) {
      result.rejected.push_back({row.line_no, ErrorKind::EntityNotInSentence,
                                 "entity '" + r.entity + "' not in '" + r.source + "'"});
      continue;
    }
    result.items.push_back(std::move(r));
  }
  return result;
}

/// Loads coreference bias records (TSV header id, source, entity,
/// gold_gender, stereotype; extra columns ignored).
inline LoadResult<BugRecord> load_bug(const std::string& path) {
  return parse_bug(text::read_file(path));
}

/// Draws the same number of records from each (gender, stereotype) stratum:
/// the size of the smallest stratum, or `cap` if that is smaller. Selection is
/// uniform without replacement with one independent stream per stratum; ids
/// keep input order inside a stratum.
inline BalancedSample sample_balanced_subsets(const std::vector<BugRecord>& records, uint64_t seed,
                                              std::optional<std::size_t> cap = std::nullopt) {
  std::map<StratumKey, std::vector<const BugRecord*>> raw;
  std::set<std::string_view> seen;
  for (const auto& r : records) {
    if (!seen.insert(r.id).second) throw Error(ErrorKind::IdMismatch, "duplicate record id '" + r.id + "'");
    raw[{r.gold_gender, r.stereotype}].push_back(&r);
  }

  std::size_t n = SIZE_MAX;
  for (const auto& key : kAllStrata) {
    auto it = raw.find(key);
    if (it == raw.end() || it->second.empty()) {
      throw Error(ErrorKind::EmptyStratum, "no records for (" + std::string(to_string(key.first)) +
                                               ", " + std::string(to_string(key.second)) + ")");
    }
    n = std::min(n, it->second.size());
  }
  if (cap) n = std::min(n, *cap);

  BalancedSample sample;
  sample.n_per_stratum = n;
  for (const auto& key : kAllStrata) {
    const auto& members = raw[key];
    auto rng = Rng::derive(seed, std::string(to_string(key.first)) + "/" + std::string(to_string(key.second)));
    auto picks = rng.sample_indices(members.size(), n);
    std::sort(picks.begin(), picks.end());
    auto& ids = sample.strata[key];
    for (auto i : picks) ids.push_back(members[i]->id);
  }
  return sample;
}

/// Pairs line i of the source text with line i of the reference text.
/// CRLF and LF are equivalent; ids are 1-based line numbers.
inline std::vector<ParallelPair> parse_parallel(std::string_view src, std::string_view ref,
                                                std::string_view lang) {
  const auto src_lines = text::split_lines(src);
  const auto ref_lines = text::split_lines(ref);
  if (src_lines.size() != ref_lines.size()) {
    throw Error(ErrorKind::LineCountMismatch, std::to_string(src_lines.size()) + " source lines vs " +
                                                  std::to_string(ref_lines.size()) + " reference lines");
  }
  std::vector<ParallelPair> pairs;
  pairs.reserve(src_lines.size());
  for (std::size_t i = 0; i < src_lines.size(); ++i) {
    auto s = text::trim(src_lines[i]);
    auto r = text::trim(ref_lines[i]);
    if (s.empty() || r.empty()) {
      throw Error(ErrorKind::EmptyLine, std::string(s.empty() ? "source" : "reference") +
                                            " line " + std::to_string(i + 1) + " is empty");
    }
    pairs.push_back({std::to_string(i + 1), std::string(s), std::string(r), std::string(lang)});
  }
  return pairs;
}

inline std::vector<ParallelPair> load_parallel(const std::string& src_path, const std::string& ref_path,
                                               std::string_view lang) {
  return parse_parallel(text::read_file(src_path), text::read_file(ref_path), lang);
}

}  // namespace gentrans
