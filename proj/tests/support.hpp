#pragma once

// Shared test helpers: fixture paths, scratch directories, random input
// generators, and brute-force metric oracles written independently of the
// library (no shared counting code, no maps, no logarithms).

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "gentrans/text.hpp"

namespace testing_support {

inline std::string data_path(const std::string& rel) { return std::string(GENTRANS_DATA_DIR) + "/" + rel; }

/// Fresh directory under the build tree, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& name) {
    path_ = std::filesystem::path(GENTRANS_SCRATCH_DIR) / name;
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string str() const { return path_.string(); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

// ---------------------------------------------------------------------------
// Generators

class Gen {
 public:
  explicit Gen(uint64_t seed) : eng_(seed) {}

  std::size_t size(std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(eng_); }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(eng_); }

  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[size(0, v.size() - 1)];
  }

  /// Sentence of `lo`..`hi` tokens over a small vocabulary, so n-grams collide.
  std::vector<std::string> tokens(std::size_t lo, std::size_t hi) {
    static const std::vector<std::string> vocab = {"a", "b", "c", "d", "e", "the", "cat", "niña"};
    std::vector<std::string> out(size(lo, hi));
    for (auto& t : out) t = pick(vocab);
    return out;
  }

  /// Short string over letters, accented letters and a few Unicode spaces.
  std::string chars(std::size_t lo, std::size_t hi) {
    static const std::vector<std::string> alphabet = {"a", "b", "c", "d", "e", "é", "ñ", "ß", "中",
                                                      " ", "\t", "\xC2\xA0", "\xE3\x80\x80"};
    std::string out;
    for (std::size_t i = size(lo, hi); i > 0; --i) out += pick(alphabet);
    return out;
  }

  /// Arbitrary valid UTF-8, biased towards the structural markers a parser sees.
  std::string utf8(std::size_t max_pieces) {
    static const std::vector<std::string> pieces = {
        "Spanish (feminine):", "Spanish (masculine):", "English:", "\n", "\n\n", "\r\n", " ", "\t", "Hola",
        "todos.", "¿", "é", "ğ", "中文", "🙂", "\xE2\x80\x8B", ":", "(", ")", "feminine", "\xEF\xBB\xBF"};
    std::string out;
    for (std::size_t i = size(0, max_pieces); i > 0; --i) {
      if (coin(0.2)) {
        char32_t cp;
        do {
          cp = static_cast<char32_t>(size(1, 0x10FFFF));
        } while (cp >= 0xD800 && cp <= 0xDFFF);
        out += gentrans::text::encode_utf8(std::u32string(1, cp));
      } else {
        out += pick(pieces);
      }
    }
    return out;
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

// ---------------------------------------------------------------------------
// Oracles

using Sent = std::vector<std::string>;

inline Sent slice(const Sent& s, std::size_t at, std::size_t n) { return Sent(s.begin() + at, s.begin() + at + n); }

inline std::size_t occurrences(const Sent& s, const Sent& gram) {
  std::size_t c = 0;
  for (std::size_t i = 0; i + gram.size() <= s.size(); ++i) {
    if (slice(s, i, gram.size()) == gram) ++c;
  }
  return c;
}

/// Corpus BLEU transcribed directly from its definition: clipped n-gram
/// matches, p1 unsmoothed, add-k on higher orders, closest reference length
/// (shorter on ties), brevity penalty, geometric mean.
inline double oracle_bleu(const std::vector<Sent>& hyps, const std::vector<std::vector<Sent>>& refs,
                          std::size_t max_order = 4, double k = 1.0) {
  std::vector<double> match(max_order, 0.0), total(max_order, 0.0);
  double c = 0.0, r = 0.0;
  for (std::size_t s = 0; s < hyps.size(); ++s) {
    const Sent& h = hyps[s];
    c += static_cast<double>(h.size());
    std::size_t best = refs[s][0].size();
    for (const auto& ref : refs[s]) {
      const auto d = [&](std::size_t len) { return len > h.size() ? len - h.size() : h.size() - len; };
      if (d(ref.size()) < d(best) || (d(ref.size()) == d(best) && ref.size() < best)) best = ref.size();
    }
    r += static_cast<double>(best);
    for (std::size_t n = 1; n <= max_order; ++n) {
      if (h.size() < n) continue;
      total[n - 1] += static_cast<double>(h.size() - n + 1);
      std::vector<Sent> seen;
      for (std::size_t i = 0; i + n <= h.size(); ++i) {
        const Sent gram = slice(h, i, n);
        bool dup = false;
        for (const auto& g : seen) dup = dup || g == gram;
        if (dup) continue;
        seen.push_back(gram);
        std::size_t max_ref = 0;
        for (const auto& ref : refs[s]) max_ref = std::max(max_ref, occurrences(ref, gram));
        match[n - 1] += static_cast<double>(std::min(occurrences(h, gram), max_ref));
      }
    }
  }
  if (c == 0.0) return 0.0;
  double product = 1.0;
  for (std::size_t n = 0; n < max_order; ++n) {
    const double kk = n == 0 ? 0.0 : k;
    if (total[n] + kk == 0.0) return 0.0;
    const double p = (match[n] + kk) / (total[n] + kk);
    if (p == 0.0) return 0.0;
    product *= p;
  }
  const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
  return 100.0 * bp * std::pow(product, 1.0 / static_cast<double>(max_order));
}

inline bool oracle_is_space(char32_t c) {
  static const char32_t spaces[] = {0x09, 0x0A, 0x0B, 0x0C, 0x0D, 0x20, 0x85, 0xA0, 0x1680, 0x2000, 0x2001,
                                    0x2002, 0x2003, 0x2004, 0x2005, 0x2006, 0x2007, 0x2008, 0x2009, 0x200A,
                                    0x2028, 0x2029, 0x202F, 0x205F, 0x3000};
  for (char32_t s : spaces) {
    if (s == c) return true;
  }
  return false;
}

/// Minimal UTF-8 decoder for well-formed input.
inline std::u32string oracle_decode(const std::string& s) {
  std::u32string out;
  for (std::size_t i = 0; i < s.size();) {
    const auto b = static_cast<unsigned char>(s[i]);
    const int len = b < 0x80 ? 1 : b < 0xE0 ? 2 : b < 0xF0 ? 3 : 4;
    char32_t cp = len == 1 ? b : len == 2 ? (b & 0x1F) : len == 3 ? (b & 0x0F) : (b & 0x07);
    for (int j = 1; j < len; ++j) cp = (cp << 6) | (static_cast<unsigned char>(s[i + j]) & 0x3F);
    out.push_back(cp);
    i += static_cast<std::size_t>(len);
  }
  return out;
}

/// Corpus chrF: per order, clipped character n-gram matches summed over
/// segments (whitespace removed), F_beta per order, averaged over orders.
inline double oracle_chrf(const std::vector<std::string>& hyps, const std::vector<std::string>& refs,
                          std::size_t order = 6, double beta = 2.0) {
  auto strip = [](const std::string& s) {
    std::u32string out;
    for (char32_t c : oracle_decode(s)) {
      if (!oracle_is_space(c)) out.push_back(c);
    }
    return out;
  };
  auto count = [](const std::u32string& s, const std::u32string& g) {
    std::size_t c = 0;
    for (std::size_t i = 0; i + g.size() <= s.size(); ++i) c += s.compare(i, g.size(), g) == 0;
    return c;
  };
  double f_sum = 0.0;
  for (std::size_t n = 1; n <= order; ++n) {
    double m = 0.0, th = 0.0, tr = 0.0;
    for (std::size_t s = 0; s < hyps.size(); ++s) {
      const auto h = strip(hyps[s]);
      const auto r = strip(refs[s]);
      if (h.size() >= n) th += static_cast<double>(h.size() - n + 1);
      if (r.size() >= n) tr += static_cast<double>(r.size() - n + 1);
      std::vector<std::u32string> seen;
      for (std::size_t i = 0; i + n <= h.size(); ++i) {
        const auto g = h.substr(i, n);
        bool dup = false;
        for (const auto& x : seen) dup = dup || x == g;
        if (dup) continue;
        seen.push_back(g);
        m += static_cast<double>(std::min(count(h, g), count(r, g)));
      }
    }
    if (m == 0.0 || th == 0.0 || tr == 0.0) continue;
    const double p = m / th, rc = m / tr, b2 = beta * beta;
    f_sum += (1 + b2) * p * rc / (b2 * p + rc);
  }
  return 100.0 * f_sum / static_cast<double>(order);
}

}  // namespace testing_support
