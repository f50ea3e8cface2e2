#pragma once

// Few-shot prompt construction for standard and gender-specific translation,
// and parsing of raw completions back into translations.
//
// Template strings use {name} placeholders: {src}, {tgt}, {masc}, {fem},
// {lang_name}. "{{" and "}}" render literal braces; any other brace use is a
// BadTemplate error. Labels (source/masculine/feminine) are templates too and
// are what the parsers look for.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gentrans/corpus.hpp"
#include "gentrans/error.hpp"
#include "gentrans/random.hpp"
#include "gentrans/text.hpp"

namespace gentrans {

enum class TemplateKind { Standard, GenderSpecific };

struct PromptConfig {
  std::size_t n_ices = 8;
  uint64_t seed = 0;
  std::string target_lang;
  std::string target_lang_name;
  TemplateKind template_kind = TemplateKind::GenderSpecific;
};

struct RenderedPrompt {
  std::string text;
  std::string query_id;
  std::vector<std::string> ice_ids;
};

enum class GenerationStatus { Complete, Partial, Empty };

inline std::string_view to_string(GenerationStatus s) {
  switch (s) {
    case GenerationStatus::Complete: return "Complete";
    case GenerationStatus::Partial: return "Partial";
    case GenerationStatus::Empty: return "Empty";
  }
  return "Empty";
}

inline std::optional<GenerationStatus> parse_status(std::string_view s) {
  if (s == "Complete") return GenerationStatus::Complete;
  if (s == "Partial") return GenerationStatus::Partial;
  if (s == "Empty") return GenerationStatus::Empty;
  return std::nullopt;
}

struct GenderedTranslation {
  std::optional<std::string> masc;
  std::optional<std::string> fem;
  GenerationStatus status = GenerationStatus::Empty;

  static GenderedTranslation from(std::optional<std::string> masc, std::optional<std::string> fem) {
    GenderedTranslation t{std::move(masc), std::move(fem), GenerationStatus::Empty};
    const int present = int(t.masc.has_value()) + int(t.fem.has_value());
    t.status = present == 2 ? GenerationStatus::Complete
               : present == 1 ? GenerationStatus::Partial
                              : GenerationStatus::Empty;
    return t;
  }

  friend bool operator==(const GenderedTranslation&, const GenderedTranslation&) = default;
};

/// What a prompt is asked about. MHB entries carry a template key; queries
/// from other datasets have none and exclude nothing but themselves.
struct Query {
  std::string id;
  std::string source;
  std::optional<std::string> template_key;

  static Query of(const MhbEntry& e) { return {e.id, e.source, e.template_key}; }
};

struct PromptTemplates {
  std::string source_label = "English:";
  std::string masculine_label = "{lang_name} (masculine):";
  std::string feminine_label = "{lang_name} (feminine):";
  std::string standard_label = "{lang_name}:";
  std::string standard_ice = "English: {src}\n{lang_name}: {tgt}\n\n";
  std::string standard_query = "English: {src}\n{lang_name}:";
  std::string gendered_ice =
      "English: {src}\n{lang_name} (masculine): {masc}\n{lang_name} (feminine): {fem}\n\n";
  std::string gendered_query = "English: {src}\n{lang_name} (masculine):";
};

struct TemplateVars {
  std::string_view src;
  std::string_view tgt;
  std::string_view masc;
  std::string_view fem;
  std::string_view lang_name;
};

inline std::string render_template(std::string_view tmpl, const TemplateVars& v) {
  std::string out;
  out.reserve(tmpl.size() + 64);
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    const char c = tmpl[i];
    if (c == '}') {
      if (i + 1 < tmpl.size() && tmpl[i + 1] == '}') {
        out.push_back('}');
        ++i;
        continue;
      }
      throw Error(ErrorKind::BadTemplate, "unmatched '}' in template");
    }
    if (c != '{') {
      out.push_back(c);
      continue;
    }
    if (i + 1 < tmpl.size() && tmpl[i + 1] == '{') {
      out.push_back('{');
      ++i;
      continue;
    }
    const auto close = tmpl.find('}', i);
    if (close == std::string_view::npos) throw Error(ErrorKind::BadTemplate, "unterminated placeholder");
    const auto name = tmpl.substr(i + 1, close - i - 1);
    if (name == "src") out += v.src;
    else if (name == "tgt") out += v.tgt;
    else if (name == "masc") out += v.masc;
    else if (name == "fem") out += v.fem;
    else if (name == "lang_name") out += v.lang_name;
    else throw Error(ErrorKind::BadTemplate, "unknown placeholder {" + std::string(name) + "}");
    i = close;
  }
  return out;
}

namespace detail {

inline std::string unescape_template_value(std::string_view v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] != '\\' || i + 1 == v.size()) {
      out.push_back(v[i]);
      continue;
    }
    switch (v[++i]) {
      case 'n': out.push_back('\n'); break;
      case 't': out.push_back('\t'); break;
      case 's': out.push_back(' '); break;
      case '\\': out.push_back('\\'); break;
      default: throw Error(ErrorKind::BadTemplate, std::string("unknown escape \\") + v[i]);
    }
  }
  return out;
}

}  // namespace detail

/// Parses a template override file. Grammar, one entry per line:
///   key = value        (value escapes: \n newline, \t tab, \s space, \\ backslash)
///   # comment / blank lines ignored
/// Keys: source_label, masculine_label, feminine_label, standard_label,
/// standard_ice, standard_query, gendered_ice, gendered_query. Unset keys keep
/// their defaults; values are validated by rendering them once.
inline PromptTemplates parse_templates(std::string_view content) {
  PromptTemplates t;
  for (const auto& raw : text::split_lines(content)) {
    const auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw Error(ErrorKind::BadTemplate, "expected key = value: " + std::string(line));
    const auto key = text::trim(line.substr(0, eq));
    auto value = detail::unescape_template_value(text::trim(line.substr(eq + 1)));
    std::string* slot = key == "source_label"      ? &t.source_label
                        : key == "masculine_label" ? &t.masculine_label
                        : key == "feminine_label"  ? &t.feminine_label
                        : key == "standard_label"  ? &t.standard_label
                        : key == "standard_ice"    ? &t.standard_ice
                        : key == "standard_query"  ? &t.standard_query
                        : key == "gendered_ice"    ? &t.gendered_ice
                        : key == "gendered_query"  ? &t.gendered_query
                                                   : nullptr;
    if (!slot) throw Error(ErrorKind::BadTemplate, "unknown template key '" + std::string(key) + "'");
    *slot = std::move(value);
  }
  const TemplateVars probe{"s", "t", "m", "f", "L"};
  for (const auto* s : {&t.source_label, &t.masculine_label, &t.feminine_label, &t.standard_label,
                        &t.standard_ice, &t.standard_query, &t.gendered_ice, &t.gendered_query}) {
    render_template(*s, probe);
  }
  if (text::is_blank(t.source_label) || text::is_blank(t.feminine_label)) {
    throw Error(ErrorKind::BadTemplate, "source and feminine labels must be non-blank");
  }
  return t;
}

inline PromptTemplates load_templates(const std::string& path) {
  return parse_templates(text::read_file(path));
}

inline void validate(const PromptConfig& config) {
  if (text::is_blank(config.target_lang_name)) {
    throw Error(ErrorKind::InvalidConfig, "target language name is empty");
  }
}

/// Picks config.n_ices in-context examples for `query`, never one sharing its
/// template key (nor the query itself). Uniform without replacement, in draw
/// order, seeded by (config.seed, query id).
inline std::vector<MhbEntry> select_ices(const std::vector<MhbEntry>& pool, const Query& query,
                                         const PromptConfig& config) {
  validate(config);
  std::vector<const MhbEntry*> eligible;
  for (const auto& e : pool) {
    if (e.id == query.id) continue;
    if (query.template_key && e.template_key == *query.template_key) continue;
    if (config.template_kind == TemplateKind::GenderSpecific && !e.has_gendered_pair()) continue;
    if (e.references().empty()) continue;
    eligible.push_back(&e);
  }
  if (eligible.size() < config.n_ices) {
    throw Error(ErrorKind::InsufficientPool, "need " + std::to_string(config.n_ices) + " examples for '" +
                                                 query.id + "', " + std::to_string(eligible.size()) +
                                                 " available");
  }
  auto rng = Rng::derive(config.seed, "ice/" + query.id);
  std::vector<MhbEntry> out;
  out.reserve(config.n_ices);
  for (auto i : rng.sample_indices(eligible.size(), config.n_ices)) out.push_back(*eligible[i]);
  return out;
}

inline std::vector<MhbEntry> select_ices(const std::vector<MhbEntry>& pool, const MhbEntry& query,
                                         const PromptConfig& config) {
  return select_ices(pool, Query::of(query), config);
}

/// Standard few-shot prompt. Each example shows one of its references, chosen
/// uniformly (seeded by config.seed and the query id).
inline RenderedPrompt render_standard(const std::vector<MhbEntry>& ices, const Query& query,
                                      const PromptConfig& config, const PromptTemplates& tmpl = {}) {
  validate(config);
  RenderedPrompt p;
  p.query_id = query.id;
  auto rng = Rng::derive(config.seed, "ref/" + query.id);
  for (const auto& ice : ices) {
    const auto refs = ice.references();
    if (refs.empty()) throw Error(ErrorKind::NoReference, "example '" + ice.id + "' has no reference");
    const auto& ref = refs.size() == 1 ? refs[0] : refs[rng.below(refs.size())];
    p.text += render_template(tmpl.standard_ice, {ice.source, ref, "", "", config.target_lang_name});
    p.ice_ids.push_back(ice.id);
  }
  p.text += render_template(tmpl.standard_query, {query.source, "", "", "", config.target_lang_name});
  return p;
}

inline RenderedPrompt render_standard(const std::vector<MhbEntry>& ices, const MhbEntry& query,
                                      const PromptConfig& config, const PromptTemplates& tmpl = {}) {
  return render_standard(ices, Query::of(query), config, tmpl);
}

/// Gender-specific few-shot prompt: every example shows both the masculine and
/// the feminine translation; the query ends at the masculine label.
inline RenderedPrompt render_gender_specific(const std::vector<MhbEntry>& ices, const Query& query,
                                             const PromptConfig& config, const PromptTemplates& tmpl = {}) {
  validate(config);
  RenderedPrompt p;
  p.query_id = query.id;
  for (const auto& ice : ices) {
    if (!ice.has_gendered_pair()) {
      throw Error(ErrorKind::MissingGenderReference, "example '" + ice.id + "' lacks a masculine or feminine reference");
    }
    p.text += render_template(tmpl.gendered_ice, {ice.source, "", *ice.masc, *ice.fem, config.target_lang_name});
    p.ice_ids.push_back(ice.id);
  }
  p.text += render_template(tmpl.gendered_query, {query.source, "", "", "", config.target_lang_name});
  return p;
}

inline RenderedPrompt render_gender_specific(const std::vector<MhbEntry>& ices, const MhbEntry& query,
                                             const PromptConfig& config, const PromptTemplates& tmpl = {}) {
  return render_gender_specific(ices, Query::of(query), config, tmpl);
}

/// Stop sequences requested from a backend for either template.
inline std::vector<std::string> stop_sequences(const PromptTemplates& tmpl = {}) {
  return {"\n\n", render_template(tmpl.source_label, {"", "", "", "", ""})};
}

namespace detail {

inline std::optional<std::string> non_blank(const std::string& s) {
  auto t = text::trim(s);
  if (t.empty()) return std::nullopt;
  return std::string(t);
}

inline void append_line(std::string& acc, std::string_view line) {
  auto t = text::trim(line);
  if (t.empty()) return;
  if (!acc.empty()) acc.push_back(' ');
  acc += t;
}

}  // namespace detail

/// Splits the continuation of a gender-specific prompt (the text following the
/// final masculine label) into its masculine and feminine parts.
///
/// The masculine part runs up to the feminine label line; the feminine part
/// runs up to a blank line, a source-label line, a masculine-label line or the
/// end. Lines inside a part are joined with a space. Never throws on content.
inline GenderedTranslation parse_gendered_output(std::string_view completion, const PromptConfig& config,
                                                 const PromptTemplates& tmpl = {}) {
  const TemplateVars vars{"", "", "", "", config.target_lang_name};
  const auto source_label = render_template(tmpl.source_label, vars);
  const auto masc_label = text::collapse_whitespace(render_template(tmpl.masculine_label, vars));
  const auto fem_label = text::collapse_whitespace(render_template(tmpl.feminine_label, vars));

  const auto is_marker = [&](std::string_view trimmed, std::string_view label) {
    return !label.empty() && text::starts_with(trimmed, label);
  };

  std::string masc;
  std::string fem;
  bool in_fem = false;
  const auto lines = text::split_lines(completion);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto t = text::trim(lines[i]);
    if (i > 0 && t.empty()) break;
    if (is_marker(t, source_label) || (i > 0 && is_marker(t, masc_label))) break;
    if (is_marker(t, fem_label)) {
      if (in_fem) break;
      in_fem = true;
      detail::append_line(fem, t.substr(fem_label.size()));
      continue;
    }
    detail::append_line(in_fem ? fem : masc, t);
  }
  return GenderedTranslation::from(detail::non_blank(masc), in_fem ? detail::non_blank(fem) : std::nullopt);
}

/// First line of a standard-template continuation, trimmed; blank -> absent.
inline std::optional<std::string> parse_standard_output(std::string_view completion,
                                                        const PromptConfig& /*config*/) {
  const auto nl = completion.find('\n');
  return detail::non_blank(std::string(completion.substr(0, nl)));
}

}  // namespace gentrans
