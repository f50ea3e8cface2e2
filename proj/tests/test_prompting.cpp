#include <gtest/gtest.h>

#include <set>

#include "gentrans/prompting.hpp"
#include "support.hpp"

using namespace gentrans;

namespace {

MhbEntry entry(const std::string& id, const std::string& key, bool gendered = true) {
  MhbEntry e;
  e.id = id;
  e.lang = "spa";
  e.source = "Source " + id + ".";
  e.masc = "Masc " + id + ".";
  if (gendered) e.fem = "Fem " + id + ".";
  e.template_key = key;
  return e;
}

PromptConfig spanish(TemplateKind kind = TemplateKind::GenderSpecific, std::size_t n = 8, uint64_t seed = 1) {
  return {n, seed, "spa", "Spanish", kind};
}

std::size_t count_lines_starting(const std::string& s, const std::string& prefix) {
  std::size_t n = 0;
  for (const auto& line : text::split_lines(s)) n += text::starts_with(line, prefix);
  return n;
}

}  // namespace

TEST(SelectIces, ExcludesSharedTemplate) {
  std::vector<MhbEntry> pool;
  for (int i = 0; i < 20; ++i) pool.push_back(entry("e" + std::to_string(i), i < 5 ? "shared" : "k" + std::to_string(i)));
  const Query q{"q", "Query.", std::string("shared")};
  const auto ices = select_ices(pool, q, spanish());
  ASSERT_EQ(ices.size(), 8u);
  std::set<std::string> ids;
  for (const auto& e : ices) {
    EXPECT_NE(e.template_key, "shared");
    ids.insert(e.id);
  }
  EXPECT_EQ(ids.size(), 8u);
}

TEST(SelectIces, ZeroShotAndDeterminism) {
  std::vector<MhbEntry> pool;
  for (int i = 0; i < 9; ++i) pool.push_back(entry("e" + std::to_string(i), "k" + std::to_string(i)));
  const Query q{"q", "Query.", std::nullopt};
  EXPECT_TRUE(select_ices(pool, q, spanish(TemplateKind::GenderSpecific, 0)).empty());
  EXPECT_EQ(select_ices(pool, q, spanish()), select_ices(pool, q, spanish()));
  EXPECT_EQ(select_ices(pool, q, spanish(TemplateKind::GenderSpecific, 8, 2)).size(), 8u);
}

TEST(SelectIces, InsufficientPoolReportsCount) {
  std::vector<MhbEntry> pool;
  for (int i = 0; i < 6; ++i) pool.push_back(entry("e" + std::to_string(i), "k" + std::to_string(i), i % 2 == 0));
  try {
    select_ices(pool, Query{"q", "Q.", std::nullopt}, spanish(TemplateKind::GenderSpecific, 4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientPool);
    EXPECT_NE(std::string(e.what()).find("3 available"), std::string::npos);
  }
}

TEST(SelectIces, NeverSharesQueryTemplateProperty) {
  testing_support::Gen g(5);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<MhbEntry> pool;
    const auto n = g.size(10, 40);
    for (std::size_t i = 0; i < n; ++i) pool.push_back(entry("e" + std::to_string(i), "k" + std::to_string(g.size(0, 5))));
    const auto& query = pool[g.size(0, n - 1)];
    const auto cfg = spanish(TemplateKind::GenderSpecific, g.size(0, 4), g.size(0, 1000));
    std::vector<MhbEntry> ices;
    try {
      ices = select_ices(pool, query, cfg);
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::InsufficientPool);
      continue;
    }
    EXPECT_EQ(ices.size(), cfg.n_ices);
    for (const auto& e : ices) {
      EXPECT_NE(e.template_key, query.template_key);
      EXPECT_NE(e.id, query.id);
    }
  }
}

TEST(RenderStandard, Structure) {
  const Query q{"q", "Good morning.", std::nullopt};
  EXPECT_EQ(render_standard({}, q, spanish(TemplateKind::Standard, 0)).text, "English: Good morning.\nSpanish:");

  MhbEntry only_masc = entry("m", "k", false);
  only_masc.masc = "Hola a todos.";
  const auto p = render_standard({only_masc}, q, spanish(TemplateKind::Standard, 1));
  EXPECT_EQ(p.text, "English: Source m.\nSpanish: Hola a todos.\n\nEnglish: Good morning.\nSpanish:");

  std::vector<MhbEntry> ices;
  for (int i = 0; i < 8; ++i) ices.push_back(entry("e" + std::to_string(i), "k"));
  const auto eight = render_standard(ices, q, spanish(TemplateKind::Standard));
  EXPECT_EQ(count_lines_starting(eight.text, "English:"), 9u);
  EXPECT_EQ(eight.ice_ids.size(), 8u);
}

TEST(RenderStandard, ChoosesAmongReferences) {
  std::vector<MhbEntry> ices;
  for (int i = 0; i < 8; ++i) ices.push_back(entry("e" + std::to_string(i), "k"));
  std::set<std::string> seen;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const auto p = render_standard(ices, Query{"q", "Q.", std::nullopt}, spanish(TemplateKind::Standard, 8, seed));
    seen.insert(p.text);
    EXPECT_EQ(p.text, render_standard(ices, Query{"q", "Q.", std::nullopt}, spanish(TemplateKind::Standard, 8, seed)).text);
  }
  EXPECT_GT(seen.size(), 1u);
}

TEST(RenderGenderSpecific, Structure) {
  std::vector<MhbEntry> ices;
  for (int i = 0; i < 8; ++i) ices.push_back(entry("e" + std::to_string(i), "k"));
  const auto p = render_gender_specific(ices, Query{"q", "Hello everyone.", std::nullopt}, spanish());
  EXPECT_TRUE(p.text.ends_with("English: Hello everyone.\nSpanish (masculine):"));
  EXPECT_TRUE(text::starts_with(p.text, "English: Source e0.\nSpanish (masculine): Masc e0.\nSpanish (feminine): Fem e0.\n\n"));
  EXPECT_EQ(count_lines_starting(p.text, "English:"), 9u);

  ices[3].fem.reset();
  try {
    render_gender_specific(ices, Query{"q", "Q.", std::nullopt}, spanish());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MissingGenderReference);
  }
}

TEST(Templates, CustomFileAndErrors) {
  const auto t = parse_templates(
      "source_label = Source:\n"
      "standard_query = Source: {src}\\n{lang_name}:\n"
      "gendered_ice = Source: {src}\\n{lang_name} (masculine): {masc}\\n{lang_name} (feminine): {fem}\\n\\n\n");
  EXPECT_EQ(render_template(t.standard_query, {"Hi.", "", "", "", "French"}), "Source: Hi.\nFrench:");
  EXPECT_EQ(stop_sequences(t), (std::vector<std::string>{"\n\n", "Source:"}));
  EXPECT_THROW(parse_templates("standard_query = {nope}\n"), Error);
  EXPECT_EQ(render_template("{{x}} {src}", {"a", "", "", "", ""}), "{x} a");
}

TEST(ParseGendered, CanonicalCases) {
  const auto cfg = spanish();
  auto g = parse_gendered_output(" Hola a todos.\nSpanish (feminine): Hola a todas.\n\nEnglish: …", cfg);
  EXPECT_EQ(g.status, GenerationStatus::Complete);
  EXPECT_EQ(*g.masc, "Hola a todos.");
  EXPECT_EQ(*g.fem, "Hola a todas.");

  g = parse_gendered_output(" Hola a todos.\n\n", cfg);
  EXPECT_EQ(g.status, GenerationStatus::Partial);
  EXPECT_EQ(*g.masc, "Hola a todos.");
  EXPECT_FALSE(g.fem.has_value());

  g = parse_gendered_output("", cfg);
  EXPECT_EQ(g.status, GenerationStatus::Empty);
}

TEST(ParseGendered, DegenerateShapes) {
  const auto cfg = spanish();
  auto g = parse_gendered_output("\nSpanish (feminine): Hola a todas.", cfg);
  EXPECT_EQ(g.status, GenerationStatus::Partial);
  EXPECT_FALSE(g.masc.has_value());
  EXPECT_EQ(*g.fem, "Hola a todas.");

  g = parse_gendered_output(" A\nSpanish (feminine):   \nEnglish: x", cfg);
  EXPECT_EQ(g.status, GenerationStatus::Partial);

  g = parse_gendered_output(" A\r\nSpanish (feminine): B\r\nSpanish (masculine): C", cfg);
  EXPECT_EQ(g.status, GenerationStatus::Complete);
  EXPECT_EQ(*g.fem, "B");

  g = parse_gendered_output("   \n\n", cfg);
  EXPECT_EQ(g.status, GenerationStatus::Empty);
}

TEST(ParseGendered, RoundTripsRenderedContinuation) {
  testing_support::Gen gen(17);
  const auto cfg = spanish();
  for (int i = 0; i < 500; ++i) {
    std::string masc = gen.chars(1, 20), fem = gen.chars(1, 20);
    for (auto* s : {&masc, &fem}) {
      for (auto& c : *s) {
        if (c == '\t') c = 'x';
      }
      *s = std::string(text::trim(*s));
      if (s->empty()) *s = "z";
    }
    // The ICE block minus its leading "English: ...\nSpanish (masculine):" prefix.
    const auto block = render_template(PromptTemplates{}.gendered_ice, {"src", "", masc, fem, "Spanish"});
    const auto cont = block.substr(block.find("(masculine):") + 12);
    const auto g = parse_gendered_output(cont, cfg);
    ASSERT_EQ(g.status, GenerationStatus::Complete) << cont;
    EXPECT_EQ(*g.masc, text::trim(masc));
    EXPECT_EQ(*g.fem, text::trim(fem));
  }
}

TEST(ParseStandard, FirstLineOnly) {
  const auto cfg = spanish(TemplateKind::Standard);
  EXPECT_EQ(parse_standard_output(" Bonjour.\nEnglish: …", cfg), "Bonjour.");
  EXPECT_EQ(parse_standard_output("\n\n", cfg), std::nullopt);
  EXPECT_EQ(parse_standard_output(" Bonjour.", cfg), "Bonjour.");
}

TEST(GenderedTranslation, StatusInvariants) {
  EXPECT_EQ(GenderedTranslation::from("a", "b").status, GenerationStatus::Complete);
  EXPECT_EQ(GenderedTranslation::from("a", std::nullopt).status, GenerationStatus::Partial);
  EXPECT_EQ(GenderedTranslation::from(std::nullopt, "b").status, GenerationStatus::Partial);
  EXPECT_EQ(GenderedTranslation::from(std::nullopt, std::nullopt).status, GenerationStatus::Empty);
}
