#include <gtest/gtest.h>

#include <algorithm>

#include "gentrans/metrics.hpp"
#include "support.hpp"

using namespace gentrans;
using testing_support::Sent;

namespace {

Sent ws(const std::string& s) { return tokenize(s, TokenizationScheme::Whitespace); }

}  // namespace

TEST(Ngrams, HandCounts) {
  const auto c = ngram_counts(Sent{"a", "b", "a", "b"}, 2);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c.at(Sent{"a", "b"}), 2u);
  EXPECT_EQ(c.at(Sent{"b", "a"}), 1u);
  EXPECT_TRUE(ngram_counts(Sent{"a"}, 2).empty());
  std::size_t total = 0;
  for (const auto& [g, n] : ngram_counts(Sent{"x", "y", "x", "z", "x"}, 1)) total += n;
  EXPECT_EQ(total, 5u);
}

TEST(Tokenize, Schemes) {
  EXPECT_EQ(tokenize("  a  b\tc ", TokenizationScheme::Whitespace), (Sent{"a", "b", "c"}));
  EXPECT_EQ(tokenize("ñ b", TokenizationScheme::Char), (Sent{"ñ", "b"}));
  EXPECT_EQ(tokenize("▁la ▁niña", TokenizationScheme::Pretokenized), (Sent{"▁la", "▁niña"}));
}

TEST(Bleu, Identity) {
  const std::vector<Sent> h = {ws("the cat sat on the mat"), ws("a b c d e")};
  const auto s = corpus_bleu(h, h);
  EXPECT_EQ(s.score, 100.0);
  EXPECT_EQ(s.brevity_penalty, 1.0);
  for (double p : s.precisions) EXPECT_EQ(p, 1.0);
}

TEST(Bleu, ExtraReferenceDominatedByClipping) {
  const std::vector<Sent> h = {ws("a b c d")};
  const std::vector<std::vector<Sent>> both = {{ws("a b c d"), ws("e f g h")}};
  const std::vector<std::vector<Sent>> one = {{ws("a b c d")}};
  EXPECT_EQ(corpus_bleu(h, both).score, corpus_bleu(h, one).score);
}

TEST(Bleu, GoldenValueFromBruteForceOracle) {
  // Frozen from an independent brute-force counter: p = 1/2, 1/2, 1/3, 1/2; BP = 1.
  const auto s = corpus_bleu(std::vector<Sent>{ws("the the the cat")}, std::vector<Sent>{ws("the cat sat")});
  EXPECT_NEAR(s.score, 45.18010018049224, 1e-12);
  EXPECT_DOUBLE_EQ(s.precisions[0], 0.5);
  EXPECT_DOUBLE_EQ(s.precisions[2], 1.0 / 3.0);
  EXPECT_EQ(s.brevity_penalty, 1.0);
}

TEST(Bleu, DisjointUnigramsScoreZero) {
  EXPECT_EQ(corpus_bleu(std::vector<Sent>{ws("a b c")}, std::vector<Sent>{ws("x y z")}).score, 0.0);
}

TEST(Bleu, BrevityPenaltyTiesGoToShorterReference) {
  const std::size_t lens[] = {3, 5};
  EXPECT_EQ(closest_ref_len(4, lens), 3u);
  const std::size_t lens2[] = {6, 2, 4};
  EXPECT_EQ(closest_ref_len(5, lens2), 4u);
  const auto s = corpus_bleu(std::vector<Sent>{ws("a b")}, std::vector<Sent>{ws("a b c d")});
  EXPECT_NEAR(s.brevity_penalty, std::exp(1.0 - 2.0), 1e-15);
}

TEST(Bleu, Errors) {
  EXPECT_THROW(corpus_bleu(std::vector<Sent>{ws("a")}, std::vector<Sent>{}), Error);
  EXPECT_THROW(corpus_bleu(std::vector<Sent>{}, std::vector<Sent>{}), Error);
  try {
    corpus_bleu(std::vector<Sent>{ws("a")}, std::vector<std::vector<Sent>>{{}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyReference);
  }
}

TEST(Bleu, MatchesOracleOnRandomCorpora) {
  testing_support::Gen g(1234);
  for (int trial = 0; trial < 300; ++trial) {
    const auto n = g.size(1, 5);
    std::vector<Sent> hyps;
    std::vector<std::vector<Sent>> refs(n);
    for (std::size_t i = 0; i < n; ++i) {
      hyps.push_back(g.tokens(0, 8));
      for (auto r = g.size(1, 3); r > 0; --r) refs[i].push_back(g.tokens(0, 8));
    }
    EXPECT_NEAR(corpus_bleu(hyps, refs).score, testing_support::oracle_bleu(hyps, refs), 1e-9);
  }
}

TEST(Chrf, IdentityDisjointGolden) {
  EXPECT_EQ(chrf({"the cat sat"}, {"the cat sat"}), 100.0);
  EXPECT_EQ(chrf({"abcd"}, {"wxyz"}), 0.0);
  // Frozen from an independent brute-force character n-gram counter.
  EXPECT_NEAR(chrf({"abcd"}, {"abce"}), 31.944444444444443, 1e-12);
}

TEST(Chrf, WhitespaceIsIgnored) {
  EXPECT_EQ(chrf({"a b c d e f"}, {"abcdef"}), 100.0);
  EXPECT_EQ(chrf({"ab\xC2\xA0" "cdef"}, {"abcdef"}), 100.0);
}

TEST(Chrf, MultiReferenceUsesBestReference) {
  EXPECT_EQ(chrf_multi({"abcdefg"}, {{"zzzzzzz", "abcdefg"}}), 100.0);
  EXPECT_GE(chrf_multi({"abcdefg"}, {{"abcdxyz", "abcdefq"}}), chrf({"abcdefg"}, {"abcdxyz"}));
}

TEST(Chrf, MatchesOracleOnRandomPairs) {
  testing_support::Gen g(99);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::string> h, r;
    for (auto n = g.size(1, 3); n > 0; --n) {
      h.push_back(g.chars(0, 14));
      r.push_back(g.chars(0, 14));
    }
    EXPECT_NEAR(chrf(h, r), testing_support::oracle_chrf(h, r), 1e-9);
  }
}

TEST(Panel, MatchedIdentityAndSwappedBound) {
  const Corpus masc = {ws("Tengo un amigo alto."), ws("Mi vecino es sordo.")};
  const Corpus fem = {ws("Tengo una amiga alta."), ws("Mi vecina es sorda.")};
  const auto p = bleu_panel(std::nullopt, masc, fem, masc, fem);
  EXPECT_EQ(p.masc_out->masc.score, 100.0);
  EXPECT_EQ(p.fem_out->fem.score, 100.0);
  EXPECT_LT(p.masc_out->fem.score, 100.0);
  EXPECT_LT(p.fem_out->masc.score, 100.0);
  for (std::size_t n = 0; n < 4; ++n) {
    EXPECT_GE(p.masc_out->both.stats.matches[n], p.masc_out->masc.stats.matches[n]);
    EXPECT_GE(p.masc_out->both.stats.matches[n], p.masc_out->fem.stats.matches[n]);
  }
  EXPECT_FALSE(p.unspec.has_value());
}

TEST(DeltaF, PublishedColumns) {
  EXPECT_NEAR(delta_f(46.06, 43.83), 2.23, 1e-9);
  EXPECT_NEAR(delta_f(47.90, 47.63), 0.27, 1e-9);
  EXPECT_EQ(delta_f(41.5, 41.5), 0.0);
}
