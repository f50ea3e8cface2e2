#pragma once

// End-to-end runs: prompting a backend over a dataset (translate), then
// scoring the stored outputs into reference panels (BLEU/chrF against
// masculine, feminine and both references), gender-accuracy tables, and
// masculine/feminine convergence tables.
//
// Every report byte is a function of the manifest, the datasets and the
// stored outputs; no timestamps, absolute paths or timings are emitted.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gentrans/backends.hpp"
#include "gentrans/corpus.hpp"
#include "gentrans/digest.hpp"
#include "gentrans/error.hpp"
#include "gentrans/genderbias.hpp"
#include "gentrans/keyvalue.hpp"
#include "gentrans/metrics.hpp"
#include "gentrans/prompting.hpp"
#include "gentrans/report.hpp"
#include "gentrans/text.hpp"

namespace gentrans {

enum class ExperimentKind { MhbPanel, BugBias, FloresDelta };

inline std::string_view to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::MhbPanel: return "mhb_panel";
    case ExperimentKind::BugBias: return "bug_bias";
    case ExperimentKind::FloresDelta: return "flores_delta";
  }
  return "mhb_panel";
}

inline ExperimentKind parse_experiment(std::string_view s) {
  if (s == "mhb_panel") return ExperimentKind::MhbPanel;
  if (s == "bug_bias") return ExperimentKind::BugBias;
  if (s == "flores_delta") return ExperimentKind::FloresDelta;
  throw Error(ErrorKind::InvalidConfig, "unknown experiment '" + std::string(s) + "'");
}

inline std::string default_language_name(std::string_view code) {
  static const std::map<std::string, std::string, std::less<>> names = {
      {"arb", "Arabic"},  {"cat", "Catalan"},   {"ces", "Czech"},    {"deu", "German"},
      {"fra", "French"},  {"ita", "Italian"},   {"nld", "Dutch"},    {"por", "Portuguese"},
      {"ron", "Romanian"}, {"rus", "Russian"},  {"slv", "Slovenian"}, {"spa", "Spanish"},
      {"swe", "Swedish"}, {"ukr", "Ukrainian"}};
  auto it = names.find(code);
  return it == names.end() ? std::string() : it->second;
}

struct BackendSettings {
  std::string kind = "replay";  // replay | http
  std::string store;            // replay store path
  ReplayMode mode = ReplayMode::Replay;
  std::string endpoint;         // endpoint config path (http, or upstream when recording)
  std::size_t parallelism = 4;
  std::size_t max_tokens = 256;
  double temperature = 0.0;
  std::size_t max_requests = 0;
};

struct MetricSettings {
  TokenizationScheme tokenization = TokenizationScheme::Whitespace;
  BleuConfig bleu;
  ChrfConfig chrf;
};

/// A declarative run description; see README for the full key list.
struct RunManifest {
  ExperimentKind experiment = ExperimentKind::MhbPanel;
  std::vector<std::string> langs;
  std::map<std::string, std::string> lang_names;
  uint64_t seed = 0;
  uint64_t sample_seed = 0;
  std::size_t n_ices = 8;
  std::optional<std::size_t> n_per_stratum;

  std::string mhb_path;
  std::string bug_path;
  std::string lexicon_path;
  std::string templates_path;
  std::map<std::string, std::string> flores_src;
  std::map<std::string, std::string> flores_ref;
  std::map<std::string, std::string> nmt_outputs;
  std::string output_dir;

  BackendSettings backend;
  MetricSettings metrics;

  std::string digest;    // SHA-256 of the manifest bytes
  std::string base_dir;  // relative paths resolve against this

  std::string resolve(const std::string& path) const {
    if (path.empty()) return path;
    std::filesystem::path p(path);
    if (p.is_absolute() || base_dir.empty()) return p.lexically_normal().string();
    return (std::filesystem::path(base_dir) / p).lexically_normal().string();
  }

  std::string language_name(const std::string& lang) const {
    auto it = lang_names.find(lang);
    if (it != lang_names.end()) return it->second;
    auto name = default_language_name(lang);
    if (name.empty()) throw Error(ErrorKind::InvalidConfig, "no display name for language '" + lang + "'");
    return name;
  }

  static RunManifest parse(std::string_view content, std::string base_dir = {}) {
    const auto doc = KeyValueDoc::parse(content);
    RunManifest m;
    m.digest = sha256_hex(content);
    m.base_dir = std::move(base_dir);
    m.experiment = parse_experiment(doc.require("experiment"));
    m.langs = doc.get_list("langs");
    if (m.langs.empty()) throw Error(ErrorKind::InvalidConfig, "manifest lists no languages");
    m.lang_names = doc.with_prefix("lang_names.");
    if (!doc.has("seed")) throw Error(ErrorKind::InvalidConfig, "manifest must set 'seed'");
    m.seed = doc.get_uint("seed", 0);
    m.n_ices = doc.get_uint("n_ices", 8);
    m.output_dir = doc.require("output_dir");

    m.mhb_path = doc.get_or("data.mhb", "");
    m.bug_path = doc.get_or("data.bug", "");
    m.lexicon_path = doc.get_or("data.lexicon", "");
    m.templates_path = doc.get_or("data.templates", "");
    m.flores_src = doc.with_prefix("data.flores_src.");
    m.flores_ref = doc.with_prefix("data.flores_ref.");
    m.nmt_outputs = doc.with_prefix("data.nmt.");

    m.backend.kind = doc.get_or("backend.kind", "replay");
    m.backend.store = doc.get_or("backend.store", "");
    m.backend.mode = parse_replay_mode(doc.get_or("backend.mode", "replay"));
    m.backend.endpoint = doc.get_or("backend.endpoint", "");
    m.backend.parallelism = doc.get_uint("backend.parallelism", 4);
    m.backend.max_tokens = doc.get_uint("backend.max_tokens", 256);
    m.backend.temperature = doc.get_double("backend.temperature", 0.0);
    m.backend.max_requests = doc.get_uint("backend.max_requests", 0);

    m.metrics.tokenization = parse_tokenization(doc.get_or("metrics.tokenization", "whitespace"));
    m.metrics.bleu.max_order = doc.get_uint("metrics.bleu_max_order", 4);
    m.metrics.bleu.smoothing_k = doc.get_double("metrics.bleu_smoothing_k", 1.0);
    m.metrics.chrf.char_order = doc.get_uint("metrics.chrf_char_order", 6);
    m.metrics.chrf.beta = doc.get_double("metrics.chrf_beta", 2.0);

    if (m.experiment == ExperimentKind::BugBias) {
      if (!doc.has("bias.sample_seed")) throw Error(ErrorKind::InvalidConfig, "bug_bias manifests must set bias.sample_seed");
      m.sample_seed = doc.get_uint("bias.sample_seed", 0);
      if (doc.has("bias.n_per_stratum")) m.n_per_stratum = doc.get_uint("bias.n_per_stratum", 0);
    }
    if (m.mhb_path.empty()) throw Error(ErrorKind::InvalidConfig, "data.mhb is required (queries or in-context examples)");
    if (m.experiment == ExperimentKind::BugBias && m.bug_path.empty()) {
      throw Error(ErrorKind::InvalidConfig, "bug_bias manifests need data.bug");
    }
    if (m.experiment == ExperimentKind::FloresDelta) {
      for (const auto& l : m.langs) {
        if (!m.flores_src.count(l) || !m.flores_ref.count(l)) {
          throw Error(ErrorKind::InvalidConfig, "flores_delta manifests need data.flores_src/ref for '" + l + "'");
        }
      }
    }
    for (const auto& l : m.langs) m.language_name(l);
    return m;
  }

  static RunManifest load(const std::string& path) {
    return parse(text::read_file(path), std::filesystem::path(path).parent_path().string());
  }

  PromptTemplates templates() const {
    return templates_path.empty() ? PromptTemplates{} : load_templates(resolve(templates_path));
  }
};

// ---------------------------------------------------------------------------
// Raw outputs

/// Outputs of one language: the unspecified translation and the parsed
/// gender-specific pair per query id, in dataset order.
struct LangOutputs {
  std::vector<std::string> order;
  std::map<std::string, std::optional<std::string>> unspec;
  std::map<std::string, GenderedTranslation> gendered;
};

/// JSON lines {id, kind, text, status}; kind is unsp, masc or fem; text is
/// null when absent. Gendered lines carry the pair's status.
inline std::string serialize_outputs(const LangOutputs& outs) {
  std::string out;
  auto line = [&](const std::string& id, const char* kind, const std::optional<std::string>& text,
                  GenerationStatus status) {
    nlohmann::json j;
    j["id"] = id;
    j["kind"] = kind;
    j["text"] = text ? nlohmann::json(*text) : nlohmann::json(nullptr);
    j["status"] = std::string(to_string(status));
    out += j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
  };
  for (const auto& id : outs.order) {
    const auto& u = outs.unspec.at(id);
    line(id, "unsp", u, u ? GenerationStatus::Complete : GenerationStatus::Empty);
    const auto& g = outs.gendered.at(id);
    line(id, "masc", g.masc, g.status);
    line(id, "fem", g.fem, g.status);
  }
  return out;
}

inline LangOutputs parse_outputs(std::string_view content) {
  LangOutputs outs;
  std::map<std::string, std::pair<std::optional<std::string>, std::optional<std::string>>> pairs;
  std::size_t line_no = 0;
  for (const auto& line : text::split_lines(content)) {
    ++line_no;
    if (text::is_blank(line)) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::ParseError, "outputs line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.contains("id") || !j.contains("kind") || !j.contains("text") || !j["id"].is_string() ||
        !j["kind"].is_string()) {
      throw Error(ErrorKind::ParseError, "outputs line " + std::to_string(line_no) + ": expected {id, kind, text, status}");
    }
    const auto id = j["id"].get<std::string>();
    const auto kind = j["kind"].get<std::string>();
    std::optional<std::string> txt;
    if (j["text"].is_string()) txt = j["text"].get<std::string>();
    if (!outs.unspec.count(id) && !pairs.count(id)) outs.order.push_back(id);
    if (kind == "unsp") {
      outs.unspec[id] = txt;
    } else if (kind == "masc") {
      pairs[id].first = txt;
    } else if (kind == "fem") {
      pairs[id].second = txt;
    } else {
      throw Error(ErrorKind::ParseError, "outputs line " + std::to_string(line_no) + ": unknown kind '" + kind + "'");
    }
  }
  for (const auto& id : outs.order) {
    outs.unspec.try_emplace(id, std::nullopt);
    auto& p = pairs[id];
    outs.gendered[id] = GenderedTranslation::from(p.first, p.second);
  }
  return outs;
}

inline std::string outputs_path(const RunManifest& m, const std::string& lang) {
  return (std::filesystem::path(m.resolve(m.output_dir)) / ("outputs." + lang + ".jsonl")).string();
}

inline std::string meta_path(const RunManifest& m) {
  return (std::filesystem::path(m.resolve(m.output_dir)) / "translation_meta.json").string();
}

// ---------------------------------------------------------------------------
// Datasets

inline std::string file_fingerprint(const RunManifest& m, const std::string& path) {
  return path + "@sha256:" + sha256_hex(text::read_file(m.resolve(path))).substr(0, 16);
}

inline LoadResult<MhbEntry> load_pool(const RunManifest& m, const std::string& lang) {
  return load_mhb(m.resolve(m.mhb_path), lang);
}

/// BUG records in file order restricted to the balanced sample.
struct SampledRecords {
  LoadResult<BugRecord> loaded;
  BalancedSample sample;
  std::vector<BugRecord> records;
};

inline SampledRecords load_sampled_records(const RunManifest& m) {
  SampledRecords s;
  s.loaded = load_bug(m.resolve(m.bug_path));
  s.sample = sample_balanced_subsets(s.loaded.items, m.sample_seed, m.n_per_stratum);
  const auto ids = s.sample.ids();
  const std::set<std::string> chosen(ids.begin(), ids.end());
  for (const auto& r : s.loaded.items) {
    if (chosen.count(r.id)) s.records.push_back(r);
  }
  return s;
}

inline std::vector<Query> queries_for(const RunManifest& m, const std::string& lang,
                                      const std::vector<MhbEntry>& pool) {
  std::vector<Query> qs;
  switch (m.experiment) {
    case ExperimentKind::MhbPanel:
      for (const auto& e : gendered_only(pool)) qs.push_back(Query::of(e));
      break;
    case ExperimentKind::BugBias:
      for (const auto& r : load_sampled_records(m).records) qs.push_back({r.id, r.source, std::nullopt});
      break;
    case ExperimentKind::FloresDelta:
      for (const auto& p : load_parallel(m.resolve(m.flores_src.at(lang)), m.resolve(m.flores_ref.at(lang)), lang)) {
        qs.push_back({p.id, p.source, std::nullopt});
      }
      break;
  }
  return qs;
}

// ---------------------------------------------------------------------------
// Translation

struct TranslationRun {
  std::string backend_id;
  std::map<std::string, LangOutputs> outputs;
  std::map<std::string, std::size_t> rejected_pool_rows;
};

/// Prompts `backend` with both templates for every query of every language,
/// fanning out with bounded parallelism. Results are re-associated by index.
inline TranslationRun translate(const RunManifest& m, CompletionBackend& backend) {
  const auto tmpl = m.templates();
  TranslationRun run;
  run.backend_id = backend.id();
  for (const auto& lang : m.langs) {
    const auto pool = load_pool(m, lang);
    run.rejected_pool_rows[lang] = pool.rejected.size();
    const auto queries = queries_for(m, lang, pool.items);

    PromptConfig standard{m.n_ices, m.seed, lang, m.language_name(lang), TemplateKind::Standard};
    PromptConfig gendered = standard;
    gendered.template_kind = TemplateKind::GenderSpecific;

    std::vector<CompletionRequest> requests;
    requests.reserve(queries.size() * 2);
    for (const auto& q : queries) {
      for (const auto* cfg : {&standard, &gendered}) {
        const auto ices = select_ices(pool.items, q, *cfg);
        const auto prompt = cfg->template_kind == TemplateKind::Standard ? render_standard(ices, q, *cfg, tmpl)
                                                                         : render_gender_specific(ices, q, *cfg, tmpl);
        requests.push_back({prompt.text, m.backend.max_tokens, m.backend.temperature, stop_sequences(tmpl)});
      }
    }

    std::vector<std::string> completions(requests.size());
    run_bounded(requests.size(), m.backend.parallelism,
                [&](std::size_t i) { completions[i] = backend.complete(requests[i]).text; });

    LangOutputs outs;
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
      const auto& id = queries[qi].id;
      outs.order.push_back(id);
      outs.unspec[id] = parse_standard_output(completions[2 * qi], standard);
      outs.gendered[id] = parse_gendered_output(completions[2 * qi + 1], gendered, tmpl);
    }
    run.outputs[lang] = std::move(outs);
  }
  return run;
}

inline void write_translation(const RunManifest& m, const TranslationRun& run) {
  std::filesystem::create_directories(m.resolve(m.output_dir));
  nlohmann::json meta;
  meta["backend"] = run.backend_id;
  meta["manifest_sha256"] = m.digest;
  meta["langs"] = m.langs;
  for (const auto& [lang, outs] : run.outputs) {
    text::write_file(outputs_path(m, lang), serialize_outputs(outs));
    meta["rejected_pool_rows"][lang] = run.rejected_pool_rows.at(lang);
  }
  text::write_file(meta_path(m), meta.dump(2) + "\n");
}

inline LangOutputs read_outputs(const RunManifest& m, const std::string& lang) {
  const auto path = outputs_path(m, lang);
  try {
    return parse_outputs(text::read_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::IoError) {
      throw Error(ErrorKind::IoError, "no outputs for '" + lang + "' at " + path + "; run translate first");
    }
    throw;
  }
}

inline std::string recorded_backend(const RunManifest& m) {
  try {
    auto j = nlohmann::json::parse(text::read_file(meta_path(m)));
    return j.value("backend", std::string("unknown"));
  } catch (const std::exception&) {
    return "unknown";
  }
}

// ---------------------------------------------------------------------------
// Reports

namespace detail {

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline std::string lang_list(const RunManifest& m) {
  std::string s;
  for (const auto& l : m.langs) s += (s.empty() ? "" : ",") + l;
  return s;
}

inline std::vector<std::pair<std::string, std::string>> base_header(const RunManifest& m) {
  std::vector<std::pair<std::string, std::string>> h;
  h.emplace_back("experiment", std::string(to_string(m.experiment)));
  h.emplace_back("manifest_sha256", m.digest);
  h.emplace_back("backend", recorded_backend(m));
  if (m.backend.kind == "replay" && !m.backend.store.empty() &&
      std::filesystem::exists(m.resolve(m.backend.store))) {
    h.emplace_back("replay_store", file_fingerprint(m, m.backend.store));
  }
  h.emplace_back("langs", lang_list(m));
  h.emplace_back("seed", std::to_string(m.seed));
  h.emplace_back("n_ices", std::to_string(m.n_ices));
  h.emplace_back("tokenization", std::string(to_string(m.metrics.tokenization)));
  h.emplace_back("bleu", "max_order=" + std::to_string(m.metrics.bleu.max_order) +
                             " smoothing=add-k k=" + format_fixed(m.metrics.bleu.smoothing_k) + " (orders>=2)");
  h.emplace_back("chrf", "char_order=" + std::to_string(m.metrics.chrf.char_order) +
                             " beta=" + format_fixed(m.metrics.chrf.beta));
  h.emplace_back("data.mhb", file_fingerprint(m, m.mhb_path));
  return h;
}

inline std::vector<std::string> read_nmt_lines(const RunManifest& m, const std::string& lang, std::size_t expected) {
  const auto lines = text::split_lines(text::read_file(m.resolve(m.nmt_outputs.at(lang))));
  if (lines.size() != expected) {
    throw Error(ErrorKind::LineCountMismatch, "NMT outputs for '" + lang + "' have " + std::to_string(lines.size()) +
                                                  " lines, dataset has " + std::to_string(expected));
  }
  return lines;
}

struct Exclusions {
  std::size_t partial = 0, empty = 0, unspec_missing = 0;
};

inline Exclusions count_exclusions(const std::vector<std::string>& ids, const LangOutputs& outs) {
  Exclusions x;
  for (const auto& id : ids) {
    auto g = outs.gendered.find(id);
    auto u = outs.unspec.find(id);
    const auto status = g == outs.gendered.end() ? GenerationStatus::Empty : g->second.status;
    if (status == GenerationStatus::Partial) ++x.partial;
    if (status == GenerationStatus::Empty) ++x.empty;
    if (u == outs.unspec.end() || !u->second || text::is_blank(*u->second)) ++x.unspec_missing;
  }
  return x;
}

/// Evaluable ids among `ids`, in `ids` order.
inline std::vector<std::string> evaluable_in_order(const std::vector<std::string>& ids, const LangOutputs& outs) {
  std::map<std::string, std::optional<std::string>> u;
  std::map<std::string, GenderedTranslation> g;
  for (const auto& id : ids) {
    auto ui = outs.unspec.find(id);
    u[id] = ui == outs.unspec.end() ? std::nullopt : ui->second;
    auto gi = outs.gendered.find(id);
    if (gi != outs.gendered.end()) g[id] = gi->second;
  }
  const auto subset = evaluable_subset(u, g);
  std::vector<std::string> out;
  for (const auto& id : ids) {
    if (subset.count(id)) out.push_back(id);
  }
  return out;
}

inline std::string exclusion_note(const std::string& lang, std::size_t evaluated, std::size_t total,
                                  const Exclusions& x) {
  return lang + ": " + std::to_string(evaluated) + " of " + std::to_string(total) +
         " segments evaluated; " + std::to_string(x.partial) + " partial and " + std::to_string(x.empty) +
         " empty gender-specific outputs, " + std::to_string(x.unspec_missing) + " empty unspecified outputs";
}

}  // namespace detail

/// Marks control cells (masc output vs fem reference, fem output vs masc
/// reference) and best-value directions of a reference panel table with
/// columns lang, system, output_kind, masc, fem, both.
inline void decorate_panel_table(ReportTable& t) {
  const auto kind = t.column("output_kind");
  const auto masc = t.column("masc");
  const auto fem = t.column("fem");
  for (auto& row : t.rows) {
    const auto k = row[kind].render();
    if (k == "masc") row[fem].control = true;
    if (k == "fem") row[masc].control = true;
  }
  t.better.assign(t.columns.size(), Better::None);
  for (const char* c : {"masc", "fem", "both"}) t.better[t.column(c)] = Better::Higher;
  t.group_column = t.column("lang");
}

inline void decorate_bias_table(ReportTable& t) {
  t.better.assign(t.columns.size(), Better::None);
  t.better[t.column("accuracy")] = Better::Higher;
  t.better[t.column("delta_b")] = Better::LowerAbs;
  t.group_column = t.column("lang");
}

inline void decorate_delta_table(ReportTable& t) {
  t.better.assign(t.columns.size(), Better::None);
  t.group_column.reset();
}

inline void decorate(ExperimentReport& r, ExperimentKind kind) {
  for (auto& t : r.tables) {
    switch (kind) {
      case ExperimentKind::MhbPanel: decorate_panel_table(t); break;
      case ExperimentKind::BugBias: decorate_bias_table(t); break;
      case ExperimentKind::FloresDelta: decorate_delta_table(t); break;
    }
  }
}

/// Reference panels (BLEU and chrF) per language plus an average block.
inline ExperimentReport score_mhb(const RunManifest& m) {
  ExperimentReport report;
  report.title = "Gendered reference panel";
  report.header = detail::base_header(m);

  ReportTable bleu{"BLEU", {"lang", "system", "output_kind", "masc", "fem", "both"}, {}, {}, std::nullopt};
  ReportTable chrf_t{"chrF", bleu.columns, {}, {}, std::nullopt};
  // (system, kind) -> per-language cell triples, for the average block
  std::vector<std::pair<std::string, std::string>> row_keys;
  std::map<std::pair<std::string, std::string>, std::vector<std::array<double, 3>>> bleu_acc, chrf_acc;

  auto add_rows = [&](const std::string& lang, const std::string& system, const char* kind,
                      const std::optional<RefTriple<BleuScore>>& b, const std::optional<RefTriple<double>>& c) {
    if (!b || !c) return;
    bleu.rows.push_back({Cell::text(lang), Cell::text(system), Cell::text(kind), Cell::number(b->masc.score),
                         Cell::number(b->fem.score), Cell::number(b->both.score)});
    chrf_t.rows.push_back({Cell::text(lang), Cell::text(system), Cell::text(kind), Cell::number(c->masc),
                           Cell::number(c->fem), Cell::number(c->both)});
    const std::pair<std::string, std::string> key{system, kind};
    if (!bleu_acc.count(key)) row_keys.push_back(key);
    bleu_acc[key].push_back({b->masc.score, b->fem.score, b->both.score});
    chrf_acc[key].push_back({c->masc, c->fem, c->both});
  };

  for (const auto& lang : m.langs) {
    const auto pool = load_pool(m, lang);
    const auto entries = gendered_only(pool.items);
    if (!pool.rejected.empty()) {
      report.footnotes.push_back(lang + ": " + std::to_string(pool.rejected.size()) + " dataset rows rejected on load");
    }
    const auto outs = read_outputs(m, lang);

    std::vector<std::string> ids;
    for (const auto& e : entries) ids.push_back(e.id);
    const auto keep = detail::evaluable_in_order(ids, outs);
    report.footnotes.push_back(
        detail::exclusion_note(lang, keep.size(), ids.size(), detail::count_exclusions(ids, outs)));
    if (keep.empty()) continue;

    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < entries.size(); ++i) index[entries[i].id] = i;

    const auto tok = [&](const std::string& s) { return tokenize(s, m.metrics.tokenization); };
    Corpus masc_ref, fem_ref, unsp, masc_out, fem_out;
    TextCorpus masc_ref_t, fem_ref_t, unsp_t, masc_out_t, fem_out_t;
    for (const auto& id : keep) {
      const auto& e = entries[index[id]];
      const auto& g = outs.gendered.at(id);
      masc_ref_t.push_back(*e.masc);
      fem_ref_t.push_back(*e.fem);
      unsp_t.push_back(*outs.unspec.at(id));
      masc_out_t.push_back(*g.masc);
      fem_out_t.push_back(*g.fem);
    }
    for (const auto& p : {std::pair{&masc_ref_t, &masc_ref}, std::pair{&fem_ref_t, &fem_ref}, std::pair{&unsp_t, &unsp},
                    std::pair{&masc_out_t, &masc_out}, std::pair{&fem_out_t, &fem_out}}) {
      for (const auto& s : *p.first) p.second->push_back(tok(s));
    }

    if (m.nmt_outputs.count(lang)) {
      const auto lines = detail::read_nmt_lines(m, lang, entries.size());
      Corpus nmt;
      TextCorpus nmt_t;
      for (const auto& id : keep) {
        nmt_t.push_back(std::string(text::trim(lines[index[id]])));
        nmt.push_back(tok(nmt_t.back()));
      }
      const auto b = bleu_panel(nmt, std::nullopt, std::nullopt, masc_ref, fem_ref, m.metrics.bleu);
      const auto c = chrf_panel(nmt_t, std::nullopt, std::nullopt, masc_ref_t, fem_ref_t, m.metrics.chrf);
      add_rows(lang, "ingested-nmt", "unsp", b.unspec, c.unspec);
    }
    const auto b = bleu_panel(unsp, masc_out, fem_out, masc_ref, fem_ref, m.metrics.bleu);
    const auto c = chrf_panel(unsp_t, masc_out_t, fem_out_t, masc_ref_t, fem_ref_t, m.metrics.chrf);
    add_rows(lang, "llm-standard", "unsp", b.unspec, c.unspec);
    add_rows(lang, "llm-gendered", "masc", b.masc_out, c.masc_out);
    add_rows(lang, "llm-gendered", "fem", b.fem_out, c.fem_out);
  }

  for (const auto& key : row_keys) {
    for (const auto& pair : {std::pair{&bleu, &bleu_acc}, std::pair{&chrf_t, &chrf_acc}}) {
      const auto& cells = pair.second->at(key);
      std::array<std::vector<double>, 3> cols;
      for (const auto& c : cells) {
        for (int i = 0; i < 3; ++i) cols[i].push_back(c[i]);
      }
      pair.first->rows.push_back({Cell::text("avg"), Cell::text(key.first), Cell::text(key.second),
                                  Cell::number(detail::mean(cols[0])), Cell::number(detail::mean(cols[1])),
                                  Cell::number(detail::mean(cols[2]))});
    }
  }
  decorate_panel_table(bleu);
  decorate_panel_table(chrf_t);
  report.tables = {std::move(bleu), std::move(chrf_t)};
  report.footnotes.push_back("Parenthesized cells score an output against the opposite gender's reference.");
  return report;
}

/// Gender accuracy, ΔB and Unknown share per language, system and output kind,
/// on the stratum-balanced sample restricted to the shared evaluable subset.
inline ExperimentReport score_bias(const RunManifest& m, const GenderLexicon& lexicon) {
  ExperimentReport report;
  report.title = "Gender accuracy on coreference records";
  report.header = detail::base_header(m);
  report.header.emplace_back("data.bug", file_fingerprint(m, m.bug_path));
  report.header.emplace_back("sample_seed", std::to_string(m.sample_seed));

  const auto sampled = load_sampled_records(m);
  report.header.emplace_back("n_per_stratum", std::to_string(sampled.sample.n_per_stratum));
  if (!sampled.loaded.rejected.empty()) {
    report.footnotes.push_back(std::to_string(sampled.loaded.rejected.size()) + " coreference records rejected on load");
  }

  ReportTable t{"Gender accuracy",
                {"lang", "system", "output_kind", "n", "accuracy", "delta_b", "unknown_rate"},
                {}, {}, std::nullopt};

  for (const auto& lang : m.langs) {
    const auto outs = read_outputs(m, lang);
    std::vector<std::string> ids;
    for (const auto& r : sampled.records) ids.push_back(r.id);
    const auto keep = detail::evaluable_in_order(ids, outs);
    const std::set<std::string> keep_set(keep.begin(), keep.end());

    std::vector<BugRecord> eval;
    std::size_t missing_lex = 0;
    for (const auto& r : sampled.records) {
      if (!keep_set.count(r.id)) continue;
      if (!lexicon.contains(lang, r.entity)) {
        ++missing_lex;
        continue;
      }
      eval.push_back(r);
    }
    const auto x = detail::count_exclusions(ids, outs);
    std::map<StratumKey, std::size_t> per_stratum;
    for (const auto& r : eval) ++per_stratum[{r.gold_gender, r.stereotype}];
    std::string strata;
    for (const auto& key : kAllStrata) {
      strata += (strata.empty() ? "" : ", ") + std::string(to_string(key.first)) + "/" +
                std::string(to_string(key.second)) + " " + std::to_string(per_stratum[key]);
    }
    report.footnotes.push_back(detail::exclusion_note(lang, eval.size(), ids.size(), x) + ", " +
                               std::to_string(missing_lex) + " entities missing from the lexicon; per stratum: " + strata);

    auto add = [&](const std::string& system, const char* kind, const std::map<std::string, std::string>& tr) {
      const auto row = evaluate_bias(lang, system, kind, tr, eval, lexicon);
      t.rows.push_back({Cell::text(lang), Cell::text(system), Cell::text(kind),
                        Cell::integer(static_cast<int64_t>(row.n)), Cell::number(row.accuracy * 100.0),
                        Cell::number(row.delta_b.signed_pp), Cell::number(row.unknown_rate * 100.0)});
    };
    if (m.nmt_outputs.count(lang)) {
      const auto lines = detail::read_nmt_lines(m, lang, sampled.loaded.items.size());
      std::map<std::string, std::string> tr;
      for (std::size_t i = 0; i < sampled.loaded.items.size(); ++i) {
        tr[sampled.loaded.items[i].id] = std::string(text::trim(lines[i]));
      }
      add("ingested-nmt", "unsp", tr);
    }
    std::map<std::string, std::string> unsp, masc, fem;
    for (const auto& r : eval) {
      unsp[r.id] = *outs.unspec.at(r.id);
      masc[r.id] = *outs.gendered.at(r.id).masc;
      fem[r.id] = *outs.gendered.at(r.id).fem;
    }
    add("llm-standard", "unsp", unsp);
    add("llm-gendered", "masc", masc);
    add("llm-gendered", "fem", fem);
  }
  decorate_bias_table(t);
  report.tables = {std::move(t)};
  report.footnotes.push_back(
      "accuracy and unknown_rate are percentages; Unknown predictions count as errors. "
      "delta_b is male-gold minus female-gold accuracy in percentage points.");
  return report;
}

/// BLEU of each output against the single reference, and the masculine minus
/// feminine difference, per language with an average column.
inline ExperimentReport score_delta(const RunManifest& m) {
  ExperimentReport report;
  report.title = "Masculine/feminine convergence on general-domain text";
  report.header = detail::base_header(m);
  for (const auto& lang : m.langs) {
    report.header.emplace_back("data.flores." + lang, file_fingerprint(m, m.flores_ref.at(lang)));
  }

  ReportTable t{"BLEU", {"system", "output_kind"}, {}, {}, std::nullopt};
  for (const auto& l : m.langs) t.columns.push_back(l);
  t.columns.push_back("avg");

  std::map<std::string, double> nmt, unsp, masc, fem;
  for (const auto& lang : m.langs) {
    const auto pairs = load_parallel(m.resolve(m.flores_src.at(lang)), m.resolve(m.flores_ref.at(lang)), lang);
    const auto outs = read_outputs(m, lang);
    std::vector<std::string> ids;
    for (const auto& p : pairs) ids.push_back(p.id);
    const auto keep = detail::evaluable_in_order(ids, outs);
    report.footnotes.push_back(
        detail::exclusion_note(lang, keep.size(), ids.size(), detail::count_exclusions(ids, outs)));
    if (keep.empty()) continue;

    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < pairs.size(); ++i) index[pairs[i].id] = i;
    const auto tok = [&](const std::string& s) { return tokenize(s, m.metrics.tokenization); };
    Corpus refs, u, mo, fo;
    for (const auto& id : keep) {
      refs.push_back(tok(pairs[index[id]].reference));
      u.push_back(tok(*outs.unspec.at(id)));
      mo.push_back(tok(*outs.gendered.at(id).masc));
      fo.push_back(tok(*outs.gendered.at(id).fem));
    }
    if (m.nmt_outputs.count(lang)) {
      const auto lines = detail::read_nmt_lines(m, lang, pairs.size());
      Corpus n;
      for (const auto& id : keep) n.push_back(tok(lines[index[id]]));
      nmt[lang] = corpus_bleu(n, refs, m.metrics.bleu).score;
    }
    unsp[lang] = corpus_bleu(u, refs, m.metrics.bleu).score;
    masc[lang] = corpus_bleu(mo, refs, m.metrics.bleu).score;
    fem[lang] = corpus_bleu(fo, refs, m.metrics.bleu).score;
  }

  std::map<std::string, double> df;
  for (const auto& [lang, v] : masc) df[lang] = delta_f(v, fem.at(lang));

  auto add = [&](const char* system, const char* kind, const std::map<std::string, double>& values) {
    if (values.empty()) return;
    std::vector<Cell> row{Cell::text(system), Cell::text(kind)};
    std::vector<double> present;
    for (const auto& l : m.langs) {
      auto it = values.find(l);
      row.push_back(it == values.end() ? Cell::empty() : Cell::number(it->second));
      if (it != values.end()) present.push_back(it->second);
    }
    row.push_back(Cell::number(detail::mean(present)));
    t.rows.push_back(std::move(row));
  };
  add("ingested-nmt", "unsp", nmt);
  add("llm-standard", "unsp", unsp);
  add("llm-gendered", "masc", masc);
  add("llm-gendered", "fem", fem);
  add("llm-gendered", "delta_f", df);

  if (!df.empty()) {
    std::vector<double> mv, fv;
    for (const auto& [l, v] : masc) mv.push_back(v);
    for (const auto& [l, v] : fem) fv.push_back(v);
    report.footnotes.push_back("delta_f avg is the mean of per-language differences; the difference of the "
                               "averaged masc and fem rows is " +
                               format_fixed(delta_f(detail::mean(mv), detail::mean(fv))) +
                               " (the two agree up to rounding)");
  }
  decorate_delta_table(t);
  report.tables = {std::move(t)};
  return report;
}

inline ExperimentReport score(const RunManifest& m, const GenderLexicon* lexicon = nullptr) {
  switch (m.experiment) {
    case ExperimentKind::MhbPanel: return score_mhb(m);
    case ExperimentKind::BugBias:
      if (!lexicon) throw Error(ErrorKind::InvalidConfig, "bias scoring needs a lexicon");
      return score_bias(m, *lexicon);
    case ExperimentKind::FloresDelta: return score_delta(m);
  }
  throw Error(ErrorKind::InvalidConfig, "unknown experiment");
}

inline std::string report_basename(ExperimentKind k) { return std::string(to_string(k)); }

/// Writes <output_dir>/<experiment>.csv and .md.
inline void write_report(const RunManifest& m, const ExperimentReport& report) {
  const auto dir = std::filesystem::path(m.resolve(m.output_dir));
  std::filesystem::create_directories(dir);
  const auto base = report_basename(m.experiment);
  text::write_file((dir / (base + ".csv")).string(), emit_report(report, ReportFormat::Csv));
  text::write_file((dir / (base + ".md")).string(), emit_report(report, ReportFormat::Markdown));
}

inline ExperimentReport run_mhb_panel(const RunManifest& m, CompletionBackend& backend) {
  write_translation(m, translate(m, backend));
  return score_mhb(m);
}

inline ExperimentReport run_bug_bias(const RunManifest& m, CompletionBackend& backend, const GenderLexicon& lexicon) {
  write_translation(m, translate(m, backend));
  return score_bias(m, lexicon);
}

inline ExperimentReport run_flores_delta(const RunManifest& m, CompletionBackend& backend) {
  write_translation(m, translate(m, backend));
  return score_delta(m);
}

}  // namespace gentrans
