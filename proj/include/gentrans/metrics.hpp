#pragma once

// Corpus BLEU (multi-reference, add-k smoothing on orders >= 2) and chrF,
// plus the masculine/feminine/both reference panel used to compare gendered
// outputs.
//
// BLEU, for hypotheses h_i with reference sets R_i and orders n = 1..N:
//   m_n  = sum_i sum_g min(count_h(g), max_{r in R_i} count_r(g))
//   l_n  = sum_i max(0, |h_i| - n + 1)
//   p_1  = m_1 / l_1,   p_n = (m_n + k) / (l_n + k) for n >= 2
//   c    = sum_i |h_i|,  r = sum_i |closest r in R_i|  (length ties -> shorter)
//   BP   = exp(1 - r / c) if c < r else 1
//   BLEU = 100 * BP * exp(mean_n log p_n)   (0 if c = 0 or some p_n = 0)

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <unicode/uchar.h>

#include "gentrans/error.hpp"
#include "gentrans/text.hpp"

namespace gentrans {

enum class TokenizationScheme { Whitespace, Char, Pretokenized };

inline std::string_view to_string(TokenizationScheme s) {
  switch (s) {
    case TokenizationScheme::Whitespace: return "whitespace";
    case TokenizationScheme::Char: return "char";
    case TokenizationScheme::Pretokenized: return "pretokenized";
  }
  return "whitespace";
}

inline TokenizationScheme parse_tokenization(std::string_view s) {
  if (s == "whitespace") return TokenizationScheme::Whitespace;
  if (s == "char") return TokenizationScheme::Char;
  if (s == "pretokenized") return TokenizationScheme::Pretokenized;
  throw Error(ErrorKind::InvalidConfig, "unknown tokenization '" + std::string(s) + "'");
}

inline bool is_unicode_space(char32_t c) { return u_isUWhiteSpace(static_cast<UChar32>(c)); }

/// Pretokenized text (e.g. subword pieces produced by an external model) is
/// split on whitespace exactly like the whitespace scheme; the distinction is
/// recorded in reports.
inline std::vector<std::string> tokenize(std::string_view sentence, TokenizationScheme scheme) {
  if (scheme != TokenizationScheme::Char) return text::split_whitespace(sentence);
  std::vector<std::string> out;
  for (char32_t c : text::decode_utf8(sentence)) {
    if (!is_unicode_space(c)) out.push_back(text::encode_utf8(std::u32string_view(&c, 1)));
  }
  return out;
}

template <class Token>
using NgramCounts = std::map<std::vector<Token>, std::size_t>;

/// Sliding-window n-gram multiset; total count is max(0, |tokens| - n + 1).
template <class Token>
NgramCounts<Token> ngram_counts(std::span<const Token> tokens, std::size_t n) {
  if (n < 1) throw Error(ErrorKind::InvalidConfig, "n-gram order must be >= 1");
  NgramCounts<Token> counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[std::vector<Token>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

template <class Token>
NgramCounts<Token> ngram_counts(const std::vector<Token>& tokens, std::size_t n) {
  return ngram_counts(std::span<const Token>(tokens), n);
}

struct BleuConfig {
  std::size_t max_order = 4;
  double smoothing_k = 1.0;
};

/// Corpus-level sufficient statistics.
struct BleuStats {
  std::vector<std::size_t> matches;
  std::vector<std::size_t> totals;
  std::size_t hyp_len = 0;
  std::size_t ref_len = 0;

  explicit BleuStats(std::size_t max_order = 4) : matches(max_order, 0), totals(max_order, 0) {}

  BleuStats& operator+=(const BleuStats& o) {
    for (std::size_t n = 0; n < matches.size(); ++n) {
      matches[n] += o.matches[n];
      totals[n] += o.totals[n];
    }
    hyp_len += o.hyp_len;
    ref_len += o.ref_len;
    return *this;
  }
};

struct BleuScore {
  double score = 0.0;
  std::vector<double> precisions;
  double brevity_penalty = 0.0;
  std::size_t hyp_len = 0;
  std::size_t ref_len = 0;
  BleuStats stats;
};

/// Length of the reference closest to `hyp_len`; ties go to the shorter one.
inline std::size_t closest_ref_len(std::size_t hyp_len, std::span<const std::size_t> ref_lens) {
  std::size_t best = ref_lens.front();
  for (auto len : ref_lens) {
    const auto d = len > hyp_len ? len - hyp_len : hyp_len - len;
    const auto bd = best > hyp_len ? best - hyp_len : hyp_len - best;
    if (d < bd || (d == bd && len < best)) best = len;
  }
  return best;
}

template <class Token>
BleuStats segment_bleu_stats(const std::vector<Token>& hyp, const std::vector<std::vector<Token>>& refs,
                             std::size_t max_order) {
  if (refs.empty()) throw Error(ErrorKind::EmptyReference, "segment has no reference");
  BleuStats s(max_order);
  s.hyp_len = hyp.size();
  std::vector<std::size_t> ref_lens;
  ref_lens.reserve(refs.size());
  for (const auto& r : refs) ref_lens.push_back(r.size());
  s.ref_len = closest_ref_len(hyp.size(), ref_lens);

  for (std::size_t n = 1; n <= max_order; ++n) {
    const auto hyp_counts = ngram_counts(hyp, n);
    NgramCounts<Token> max_ref;
    for (const auto& r : refs) {
      for (const auto& [g, c] : ngram_counts(r, n)) {
        auto& slot = max_ref[g];
        slot = std::max(slot, c);
      }
    }
    std::size_t matched = 0;
    for (const auto& [g, c] : hyp_counts) {
      auto it = max_ref.find(g);
      if (it != max_ref.end()) matched += std::min(c, it->second);
    }
    s.matches[n - 1] = matched;
    s.totals[n - 1] = hyp.size() >= n ? hyp.size() - n + 1 : 0;
  }
  return s;
}

inline BleuScore bleu_from_stats(const BleuStats& stats, const BleuConfig& cfg = {}) {
  const std::size_t order = cfg.max_order;
  BleuScore out;
  out.stats = stats;
  out.hyp_len = stats.hyp_len;
  out.ref_len = stats.ref_len;
  out.precisions.assign(order, 0.0);
  if (stats.hyp_len == 0) return out;

  bool any_zero = false;
  double log_sum = 0.0;
  for (std::size_t n = 0; n < order; ++n) {
    const double k = n == 0 ? 0.0 : cfg.smoothing_k;
    const double num = static_cast<double>(stats.matches[n]) + k;
    const double den = static_cast<double>(stats.totals[n]) + k;
    const double p = den > 0.0 ? num / den : 0.0;
    out.precisions[n] = p;
    if (p <= 0.0) {
      any_zero = true;
    } else {
      log_sum += std::log(p);
    }
  }
  const auto c = static_cast<double>(stats.hyp_len);
  const auto r = static_cast<double>(stats.ref_len);
  out.brevity_penalty = c < r ? std::exp(1.0 - r / c) : 1.0;
  out.score = any_zero ? 0.0 : 100.0 * out.brevity_penalty * std::exp(log_sum / static_cast<double>(order));
  return out;
}

/// Multi-reference corpus BLEU. refs[i] holds every reference of segment i.
template <class Token>
BleuScore corpus_bleu(const std::vector<std::vector<Token>>& hyps,
                      const std::vector<std::vector<std::vector<Token>>>& refs, const BleuConfig& cfg = {}) {
  if (cfg.max_order < 1) throw Error(ErrorKind::InvalidConfig, "max_order must be >= 1");
  if (!(cfg.smoothing_k >= 0.0)) throw Error(ErrorKind::InvalidConfig, "smoothing_k must be >= 0");
  if (hyps.empty() || hyps.size() != refs.size()) {
    throw Error(ErrorKind::LengthMismatch, std::to_string(hyps.size()) + " hypotheses vs " +
                                               std::to_string(refs.size()) + " reference sets");
  }
  BleuStats total(cfg.max_order);
  for (std::size_t i = 0; i < hyps.size(); ++i) total += segment_bleu_stats(hyps[i], refs[i], cfg.max_order);
  return bleu_from_stats(total, cfg);
}

/// Single-reference convenience overload.
template <class Token>
BleuScore corpus_bleu(const std::vector<std::vector<Token>>& hyps, const std::vector<std::vector<Token>>& refs,
                      const BleuConfig& cfg = {}) {
  std::vector<std::vector<std::vector<Token>>> wrapped;
  wrapped.reserve(refs.size());
  for (const auto& r : refs) wrapped.push_back({r});
  return corpus_bleu(hyps, wrapped, cfg);
}

struct ChrfConfig {
  std::size_t char_order = 6;
  double beta = 2.0;
};

/// Per-order character n-gram statistics of one segment or a whole corpus.
struct ChrfStats {
  std::vector<std::size_t> matches;
  std::vector<std::size_t> hyp_totals;
  std::vector<std::size_t> ref_totals;

  explicit ChrfStats(std::size_t order = 6) : matches(order, 0), hyp_totals(order, 0), ref_totals(order, 0) {}

  ChrfStats& operator+=(const ChrfStats& o) {
    for (std::size_t n = 0; n < matches.size(); ++n) {
      matches[n] += o.matches[n];
      hyp_totals[n] += o.hyp_totals[n];
      ref_totals[n] += o.ref_totals[n];
    }
    return *this;
  }
};

inline std::u32string strip_whitespace(std::string_view s) {
  std::u32string out;
  for (char32_t c : text::decode_utf8(s)) {
    if (!is_unicode_space(c)) out.push_back(c);
  }
  return out;
}

inline ChrfStats segment_chrf_stats(std::string_view hyp, std::string_view ref, std::size_t order) {
  const auto h = strip_whitespace(hyp);
  const auto r = strip_whitespace(ref);
  ChrfStats s(order);
  for (std::size_t n = 1; n <= order; ++n) {
    std::map<std::u32string, std::size_t> hc;
    std::map<std::u32string, std::size_t> rc;
    for (std::size_t i = 0; i + n <= h.size(); ++i) ++hc[h.substr(i, n)];
    for (std::size_t i = 0; i + n <= r.size(); ++i) ++rc[r.substr(i, n)];
    std::size_t m = 0;
    for (const auto& [g, c] : hc) {
      auto it = rc.find(g);
      if (it != rc.end()) m += std::min(c, it->second);
    }
    s.matches[n - 1] = m;
    s.hyp_totals[n - 1] = h.size() >= n ? h.size() - n + 1 : 0;
    s.ref_totals[n - 1] = r.size() >= n ? r.size() - n + 1 : 0;
  }
  return s;
}

/// Macro-average over orders of the per-order F_beta, times 100. An order
/// contributes 0 when either side has no n-grams of that order or nothing
/// matches, so corpora shorter than char_order characters score below 100
/// even when identical.
inline double chrf_from_stats(const ChrfStats& s, const ChrfConfig& cfg = {}) {
  const double b2 = cfg.beta * cfg.beta;
  double sum = 0.0;
  for (std::size_t n = 0; n < s.matches.size(); ++n) {
    if (s.matches[n] == 0 || s.hyp_totals[n] == 0 || s.ref_totals[n] == 0) continue;
    const double p = static_cast<double>(s.matches[n]) / static_cast<double>(s.hyp_totals[n]);
    const double r = static_cast<double>(s.matches[n]) / static_cast<double>(s.ref_totals[n]);
    sum += (1.0 + b2) * p * r / (b2 * p + r);
  }
  return 100.0 * sum / static_cast<double>(cfg.char_order);
}

inline void validate(const ChrfConfig& cfg) {
  if (cfg.char_order < 1) throw Error(ErrorKind::InvalidConfig, "char_order must be >= 1");
  if (!(cfg.beta > 0.0)) throw Error(ErrorKind::InvalidConfig, "beta must be > 0");
}

inline double chrf(const std::vector<std::string>& hyps, const std::vector<std::string>& refs,
                   const ChrfConfig& cfg = {}) {
  validate(cfg);
  if (hyps.empty() || hyps.size() != refs.size()) {
    throw Error(ErrorKind::LengthMismatch,
                std::to_string(hyps.size()) + " hypotheses vs " + std::to_string(refs.size()) + " references");
  }
  ChrfStats total(cfg.char_order);
  for (std::size_t i = 0; i < hyps.size(); ++i) total += segment_chrf_stats(hyps[i], refs[i], cfg.char_order);
  return chrf_from_stats(total, cfg);
}

/// Multi-reference chrF: each segment contributes the statistics of its
/// best-scoring reference (first one on ties).
inline double chrf_multi(const std::vector<std::string>& hyps, const std::vector<std::vector<std::string>>& refs,
                         const ChrfConfig& cfg = {}) {
  validate(cfg);
  if (hyps.empty() || hyps.size() != refs.size()) {
    throw Error(ErrorKind::LengthMismatch,
                std::to_string(hyps.size()) + " hypotheses vs " + std::to_string(refs.size()) + " reference sets");
  }
  ChrfStats total(cfg.char_order);
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    if (refs[i].empty()) throw Error(ErrorKind::EmptyReference, "segment has no reference");
    std::optional<ChrfStats> best;
    double best_score = -1.0;
    for (const auto& r : refs[i]) {
      auto s = segment_chrf_stats(hyps[i], r, cfg.char_order);
      const double v = chrf_from_stats(s, cfg);
      if (v > best_score) {
        best_score = v;
        best = std::move(s);
      }
    }
    total += *best;
  }
  return chrf_from_stats(total, cfg);
}

/// Scores of one output against the masculine, feminine and combined references.
template <class Score>
struct RefTriple {
  Score masc{};
  Score fem{};
  Score both{};
};

/// The reference grid for one system. For gendered outputs the cell against
/// the opposite gender's reference is the swapped control.
template <class Score>
struct Panel {
  std::optional<RefTriple<Score>> unspec;
  std::optional<RefTriple<Score>> masc_out;
  std::optional<RefTriple<Score>> fem_out;
};

using Corpus = std::vector<std::vector<std::string>>;

/// BLEU grid over segment-aligned corpora. Outputs may be absent (e.g. an NMT
/// system only has an unspecified output).
inline Panel<BleuScore> bleu_panel(const std::optional<Corpus>& unspec, const std::optional<Corpus>& masc_out,
                                   const std::optional<Corpus>& fem_out, const Corpus& masc_ref,
                                   const Corpus& fem_ref, const BleuConfig& cfg = {}) {
  if (masc_ref.size() != fem_ref.size()) {
    throw Error(ErrorKind::LengthMismatch, "masculine and feminine reference corpora differ in length");
  }
  std::vector<std::vector<std::vector<std::string>>> both;
  both.reserve(masc_ref.size());
  for (std::size_t i = 0; i < masc_ref.size(); ++i) both.push_back({masc_ref[i], fem_ref[i]});

  auto triple = [&](const Corpus& hyp) {
    return RefTriple<BleuScore>{corpus_bleu(hyp, masc_ref, cfg), corpus_bleu(hyp, fem_ref, cfg),
                                corpus_bleu(hyp, both, cfg)};
  };
  Panel<BleuScore> p;
  if (unspec) p.unspec = triple(*unspec);
  if (masc_out) p.masc_out = triple(*masc_out);
  if (fem_out) p.fem_out = triple(*fem_out);
  return p;
}

using TextCorpus = std::vector<std::string>;

inline Panel<double> chrf_panel(const std::optional<TextCorpus>& unspec, const std::optional<TextCorpus>& masc_out,
                                const std::optional<TextCorpus>& fem_out, const TextCorpus& masc_ref,
                                const TextCorpus& fem_ref, const ChrfConfig& cfg = {}) {
  if (masc_ref.size() != fem_ref.size()) {
    throw Error(ErrorKind::LengthMismatch, "masculine and feminine reference corpora differ in length");
  }
  std::vector<std::vector<std::string>> both;
  both.reserve(masc_ref.size());
  for (std::size_t i = 0; i < masc_ref.size(); ++i) both.push_back({masc_ref[i], fem_ref[i]});

  auto triple = [&](const TextCorpus& hyp) {
    return RefTriple<double>{chrf(hyp, masc_ref, cfg), chrf(hyp, fem_ref, cfg), chrf_multi(hyp, both, cfg)};
  };
  Panel<double> p;
  if (unspec) p.unspec = triple(*unspec);
  if (masc_out) p.masc_out = triple(*masc_out);
  if (fem_out) p.fem_out = triple(*fem_out);
  return p;
}

/// Signed masculine-minus-feminine score difference.
inline double delta_f(double masc_score, double fem_score) { return masc_score - fem_score; }

}  // namespace gentrans
