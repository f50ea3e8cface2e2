#include <gtest/gtest.h>

#include <filesystem>

#include "gentrans/backend_factory.hpp"
#include "gentrans/experiments.hpp"
#include "support.hpp"

using namespace gentrans;

namespace {

RunManifest fixture_manifest(const std::string& name, const testing_support::ScratchDir& out) {
  auto m = RunManifest::load(testing_support::data_path("fixtures/" + name + ".toml"));
  m.output_dir = out.str();
  return m;
}

ExperimentReport run(const RunManifest& m) {
  auto stack = BackendStack::from_manifest(m);
  write_translation(m, translate(m, stack.get()));
  const auto lex = m.lexicon_path.empty() ? GenderLexicon{} : GenderLexicon::load(m.resolve(m.lexicon_path));
  return score(m, &lex);
}

bool has_note(const ExperimentReport& r, const std::string& prefix) {
  for (const auto& f : r.footnotes) {
    if (text::starts_with(f, prefix)) return true;
  }
  return false;
}

const std::vector<Cell>& find_row(const ReportTable& t, const std::vector<std::string>& key) {
  for (const auto& row : t.rows) {
    bool ok = true;
    for (std::size_t i = 0; i < key.size(); ++i) ok = ok && row[i].render() == key[i];
    if (ok) return row;
  }
  throw std::runtime_error("row not found");
}

double num(const Cell& c) { return c.numeric().value(); }

ExperimentReport reference(const std::string& name, ExperimentKind kind) {
  auto r = parse_report_csv(text::read_file(testing_support::data_path("reference_scores/" + name + ".csv")));
  decorate(r, kind);
  return r;
}

const std::string kManifest =
    "experiment = \"mhb_panel\"\nlangs = [\"spa\"]\nseed = 1\noutput_dir = out\n[data]\nmhb = m.tsv\n";

}  // namespace

TEST(Manifest, ParsesAndResolvesRelativePaths) {
  const auto m = RunManifest::parse(kManifest, "/base");
  EXPECT_EQ(m.experiment, ExperimentKind::MhbPanel);
  EXPECT_EQ(m.langs, std::vector<std::string>{"spa"});
  EXPECT_EQ(m.n_ices, 8u);
  EXPECT_EQ(m.resolve(m.mhb_path), "/base/m.tsv");
  EXPECT_EQ(m.language_name("spa"), "Spanish");
  EXPECT_EQ(m.digest, sha256_hex(kManifest));
  EXPECT_NE(RunManifest::parse(kManifest + "n_ices = 4\n").digest, m.digest);
}

TEST(Manifest, RejectsIncompleteDescriptions) {
  EXPECT_THROW(RunManifest::parse("experiment = \"mhb_panel\"\nlangs = [spa]\noutput_dir = o\n[data]\nmhb = m\n"),
               Error);
  EXPECT_THROW(RunManifest::parse("experiment = \"other\"\nlangs = [spa]\nseed = 1\noutput_dir = o\n"), Error);
  EXPECT_THROW(RunManifest::parse("experiment = \"bug_bias\"\nlangs = [spa]\nseed = 1\noutput_dir = o\n"
                                  "[data]\nmhb = m\nbug = b\n"),
               Error);
  EXPECT_THROW(RunManifest::parse("experiment = \"flores_delta\"\nlangs = [spa]\nseed = 1\noutput_dir = o\n"
                                  "[data]\nmhb = m\n"),
               Error);
  EXPECT_THROW(RunManifest::parse("experiment = \"mhb_panel\"\nlangs = [xyz]\nseed = 1\noutput_dir = o\n"
                                  "[data]\nmhb = m\n"),
               Error);
}

TEST(Outputs, JsonLinesRoundTrip) {
  LangOutputs o;
  o.order = {"a", "b", "c"};
  o.unspec = {{"a", "Hola."}, {"b", std::nullopt}, {"c", "x\"y\\z"}};
  o.gendered = {{"a", GenderedTranslation::from("Todos.", "Todas.")},
                {"b", GenderedTranslation::from("M", std::nullopt)},
                {"c", GenderedTranslation::from(std::nullopt, std::nullopt)}};
  const auto back = parse_outputs(serialize_outputs(o));
  EXPECT_EQ(back.order, o.order);
  EXPECT_EQ(back.unspec, o.unspec);
  for (const auto& id : o.order) {
    EXPECT_EQ(back.gendered.at(id).masc, o.gendered.at(id).masc);
    EXPECT_EQ(back.gendered.at(id).fem, o.gendered.at(id).fem);
    EXPECT_EQ(back.gendered.at(id).status, o.gendered.at(id).status);
  }
  EXPECT_EQ(serialize_outputs(back), serialize_outputs(o));
  EXPECT_THROW(parse_outputs("{\"id\":\"a\"}\n"), Error);
  EXPECT_THROW(parse_outputs("not json\n"), Error);
}

TEST(Pipeline, ReferencePanelOnShippedFixture) {
  testing_support::ScratchDir out("exp_mhb");
  const auto r = run(fixture_manifest("mhb_panel", out));
  EXPECT_TRUE(has_note(r, "spa: 57 of 61 segments evaluated; 2 partial and 1 empty")) << r.footnotes[0];
  EXPECT_TRUE(has_note(r, "ita: 58 of 60 segments evaluated"));
  for (const auto& name : {"BLEU", "chrF"}) {
    const auto& t = r.table(name);
    for (const char* lang : {"spa", "ita"}) {
      const auto& masc = find_row(t, {lang, "llm-gendered", "masc"});
      const auto& fem = find_row(t, {lang, "llm-gendered", "fem"});
      EXPECT_EQ(num(masc[3]), 100.0);
      EXPECT_EQ(num(fem[4]), 100.0);
      EXPECT_LT(num(masc[4]), 100.0);
      EXPECT_LT(num(fem[3]), 100.0);
      EXPECT_TRUE(masc[4].control);
      EXPECT_TRUE(fem[3].control);
    }
  }
  EXPECT_LT(num(find_row(r.table("BLEU"), {"spa", "llm-gendered", "masc"})[4]), 60.0);
  EXPECT_NO_THROW(find_row(r.table("BLEU"), {"avg", "ingested-nmt", "unsp"}));
}

TEST(Pipeline, BiasRowsShareOneSubsetPerLanguage) {
  testing_support::ScratchDir out("exp_bias");
  const auto r = run(fixture_manifest("bug_bias", out));
  const auto& t = r.table("Gender accuracy");
  std::map<std::string, std::set<std::string>> n_by_lang;
  for (const auto& row : t.rows) n_by_lang[row[0].render()].insert(row[3].render());
  ASSERT_EQ(n_by_lang.size(), 2u);
  for (const auto& [lang, ns] : n_by_lang) EXPECT_EQ(ns.size(), 1u) << lang;
  EXPECT_EQ(*n_by_lang["spa"].begin(), "20");
  for (const auto& row : t.rows) {
    EXPECT_GE(num(row[4]), 0.0);
    EXPECT_LE(num(row[4]), 100.0);
  }
}

TEST(Pipeline, DeltaRowIsMascMinusFem) {
  testing_support::ScratchDir out("exp_delta");
  const auto r = run(fixture_manifest("flores_delta", out));
  const auto& t = r.table("BLEU");
  const auto& masc = find_row(t, {"llm-gendered", "masc"});
  const auto& fem = find_row(t, {"llm-gendered", "fem"});
  const auto& df = find_row(t, {"llm-gendered", "delta_f"});
  for (const char* lang : {"spa", "ita"}) {
    const auto c = t.column(lang);
    EXPECT_NEAR(num(df[c]), num(masc[c]) - num(fem[c]), 1e-12);
  }
  EXPECT_TRUE(has_note(r, "spa: 11 of 12 segments evaluated"));
}

TEST(Pipeline, ReplayIsDeterministic) {
  testing_support::ScratchDir a("exp_det_a"), b("exp_det_b");
  const auto ma = fixture_manifest("mhb_panel", a);
  const auto mb = fixture_manifest("mhb_panel", b);
  EXPECT_EQ(emit_csv(run(ma)), emit_csv(run(mb)));
  EXPECT_EQ(text::read_file(outputs_path(ma, "spa")), text::read_file(outputs_path(mb, "spa")));
}

TEST(Pipeline, MissingOutputsPointAtTranslate) {
  testing_support::ScratchDir out("exp_missing");
  try {
    score_mhb(fixture_manifest("mhb_panel", out));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::IoError);
    EXPECT_NE(std::string(e.what()).find("run translate first"), std::string::npos);
  }
}

TEST(ReferenceScores, PanelAveragesRenderWithControlsAndBest) {
  const auto md = emit_markdown(reference("mhb_panel", ExperimentKind::MhbPanel));
  EXPECT_NE(md.find("| avg | nllb | unsp | 40.07 | 28.67 | 40.41 |"), std::string::npos) << md;
  EXPECT_NE(md.find("| avg | llama | unsp | 41.57 | 30.92 | 42.43 |"), std::string::npos);
  EXPECT_NE(md.find("| avg | llama | masc | **41.63** | (30.12) | 42.08 |"), std::string::npos);
  EXPECT_NE(md.find("| avg | llama | fem | (31.84) | **39.55** | **43.37** |"), std::string::npos);
}

TEST(ReferenceScores, BiasTableRendersBestAccuracyAndSmallestGap) {
  const auto md = emit_markdown(reference("bug_bias", ExperimentKind::BugBias));
  EXPECT_NE(md.find("| ces | nllb | unsp |  | 59.30 | **6.50** |  |"), std::string::npos) << md;
  EXPECT_NE(md.find("| ces | llama | masc |  | **61.70** | 10.10 |  |"), std::string::npos);
  EXPECT_NE(md.find("| spa | nllb | unsp |  | **52.50** | **10.10** |  |"), std::string::npos);
  EXPECT_NE(md.find("| ukr | llama | fem |  | 39.00 | **1.00** |  |"), std::string::npos);
}

TEST(ReferenceScores, DeltaColumnsAreDifferences) {
  const auto r = reference("flores_delta", ExperimentKind::FloresDelta);
  const auto& t = r.table("BLEU");
  const auto& masc = find_row(t, {"llama", "masc"});
  const auto& fem = find_row(t, {"llama", "fem"});
  const auto& df = find_row(t, {"llama", "delta_f"});
  EXPECT_NEAR(delta_f(num(masc[t.column("cat")]), num(fem[t.column("cat")])), 2.23, 1e-9);
  EXPECT_NEAR(delta_f(num(masc[t.column("swe")]), num(fem[t.column("swe")])), 0.27, 1e-9);
  std::vector<double> per_lang;
  for (std::size_t c = 2; c + 1 < t.columns.size(); ++c) {
    EXPECT_NEAR(num(df[c]), num(masc[c]) - num(fem[c]), 1e-9) << t.columns[c];
    per_lang.push_back(num(df[c]));
  }
  const auto avg = t.column("avg");
  EXPECT_NEAR(num(df[avg]), 1.39, 1e-9);
  // Mean of per-language differences vs difference of the averaged rows.
  EXPECT_NEAR(detail::mean(per_lang), num(df[avg]), 0.0051);
  EXPECT_NEAR(num(df[avg]), num(masc[avg]) - num(fem[avg]), 0.05);
  EXPECT_EQ(format_fixed(num(masc[avg]) - num(fem[avg])), "1.38");
}
