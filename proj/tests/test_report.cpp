#include <gtest/gtest.h>

#include "gentrans/report.hpp"

using namespace gentrans;

namespace {

ExperimentReport sample() {
  ExperimentReport r;
  r.title = "Sample";
  r.header = {{"seed", "7"}, {"note with, comma", "x"}};
  ReportTable t{"T", {"lang", "system", "masc", "fem"}, {}, {}, std::nullopt};
  t.rows.push_back({Cell::text("spa"), Cell::text("a, \"quoted\""), Cell::number(41.625), Cell::number(30.1, true)});
  t.rows.push_back({Cell::text("spa"), Cell::text("b"), Cell::number(40.0), Cell::number(39.55)});
  t.rows.push_back({Cell::text("ita"), Cell::text("a"), Cell::integer(3), Cell::empty()});
  t.better = {Better::None, Better::None, Better::Higher, Better::Higher};
  t.group_column = 0;
  r.tables.push_back(t);
  r.footnotes = {"first", "second"};
  return r;
}

}  // namespace

TEST(Report, FormatFixed) {
  EXPECT_EQ(format_fixed(41.625), "41.62");
  EXPECT_EQ(format_fixed(2.0), "2.00");
  EXPECT_EQ(format_fixed(-0.001), "0.00");
  EXPECT_EQ(format_fixed(-1.5), "-1.50");
}

TEST(Report, EmptyRowsGiveHeaderOnlyTables) {
  ExperimentReport r;
  r.title = "Empty";
  r.tables.push_back({"T", {"a", "b"}, {}, {}, std::nullopt});
  EXPECT_EQ(emit_csv(r), "# title: Empty\n\n# table: T\na,b\n");
  EXPECT_EQ(emit_markdown(r), "# Empty\n\n\n## T\n\n| a | b |\n|---|---|\n");
}

TEST(Report, EmissionIsStable) {
  EXPECT_EQ(emit_csv(sample()), emit_csv(sample()));
  EXPECT_EQ(emit_markdown(sample()), emit_markdown(sample()));
}

TEST(Report, CsvRoundTrip) {
  const auto csv = emit_csv(sample());
  const auto back = parse_report_csv(csv);
  EXPECT_EQ(back.title, "Sample");
  EXPECT_EQ(back.header, sample().header);
  ASSERT_EQ(back.tables.size(), 1u);
  EXPECT_EQ(back.tables[0].rows[0][1].render(), "a, \"quoted\"");
  EXPECT_EQ(back.tables[0].rows[2][2].render(), "3");
  EXPECT_EQ(back.footnotes, sample().footnotes);
  EXPECT_EQ(emit_csv(back), csv);
}

TEST(Report, MarkdownBoldsBestAndParenthesizesControls) {
  const auto md = emit_markdown(sample());
  EXPECT_NE(md.find("| spa | a, \"quoted\" | **41.62** | (30.10) |"), std::string::npos) << md;
  EXPECT_NE(md.find("| spa | b | 40.00 | **39.55** |"), std::string::npos) << md;
  EXPECT_NE(md.find("| ita | a | **3** |  |"), std::string::npos) << md;
  EXPECT_NE(md.find("- first\n- second\n"), std::string::npos);
}

TEST(Report, LowerAbsAndDisplayTies) {
  ReportTable t{"T", {"g", "d"}, {}, {Better::None, Better::LowerAbs}, std::size_t{0}};
  t.rows = {{Cell::text("x"), Cell::number(-1.001)}, {Cell::text("x"), Cell::number(0.999)},
            {Cell::text("x"), Cell::number(-3.0)}};
  const auto best = detail::best_cells(t);
  EXPECT_TRUE(best[0][1]);
  EXPECT_TRUE(best[1][1]);
  EXPECT_FALSE(best[2][1]);
}

TEST(Report, MalformedCsv) {
  EXPECT_THROW(parse_report_csv("a,b\n"), Error);
  EXPECT_THROW(parse_report_csv("# table: T\na,b\n1\n"), Error);
  EXPECT_THROW(parse_report_csv("# table: T\na,b\n\"x,1\n"), Error);
}
