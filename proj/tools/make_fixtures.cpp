// Rebuilds the shipped replay store from an answers table, standing in for a
// live model: for every request of every manifest, the answer for (language,
// source) is rendered the way a completion model would continue the prompt.
//
//   make_fixtures --answers answers.tsv --out replay.jsonl m1.toml [m2.toml ...]
//
// answers.tsv columns: lang, source, unsp, masc, fem. An empty fem cell yields
// a continuation with only the masculine line; empty masc and fem yield no
// output at all.

#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "gentrans/backends.hpp"
#include "gentrans/experiments.hpp"

namespace {

using namespace gentrans;

struct Answer {
  std::string unsp, masc, fem;
};

using AnswerTable = std::map<std::pair<std::string, std::string>, Answer>;

AnswerTable load_answers(const std::string& path) {
  const auto table = text::parse_tsv(text::read_file(path));
  const auto c_lang = table.column("lang"), c_src = table.column("source"), c_unsp = table.column("unsp"),
             c_masc = table.column("masc"), c_fem = table.column("fem");
  AnswerTable out;
  for (const auto& row : table.rows) {
    const auto& c = row.cells;
    Answer a{c[c_unsp], c[c_masc], c[c_fem]};
    auto [it, inserted] = out.emplace(std::pair{c[c_lang], c[c_src]}, a);
    if (!inserted && (it->second.unsp != a.unsp || it->second.masc != a.masc || it->second.fem != a.fem)) {
      throw Error(ErrorKind::DigestConflict, "conflicting answers for '" + c[c_src] + "' (line " +
                                                 std::to_string(row.line_no) + ")");
    }
  }
  return out;
}

/// Continuation a model would produce for `prompt`, ending the way models
/// do when not stopped (the caller truncates at the stop sequences).
std::string respond(const AnswerTable& answers, const RunManifest& m, const std::string& prompt) {
  const auto lines = text::split_lines(prompt);
  std::string source;
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    if (text::starts_with(*it, "English: ")) {
      source = it->substr(9);
      break;
    }
  }
  const auto& last = lines.back();
  for (const auto& lang : m.langs) {
    const auto name = m.language_name(lang);
    const bool gendered = last == name + " (masculine):";
    if (!gendered && last != name + ":") continue;
    auto a = answers.find({lang, source});
    if (a == answers.end()) throw Error(ErrorKind::MissingFixture, "no answer for " + lang + " '" + source + "'");
    const auto& ans = a->second;
    if (!gendered) return ans.unsp.empty() ? "\n" : " " + ans.unsp + "\n\nEnglish: ...";
    if (ans.masc.empty()) return "\n";
    if (ans.fem.empty()) return " " + ans.masc + "\n\nEnglish: ...";
    return " " + ans.masc + "\n" + name + " (feminine): " + ans.fem + "\n\nEnglish: ...";
  }
  throw Error(ErrorKind::MissingFixture, "unrecognized prompt ending '" + last + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regenerate the replay store used by tests and examples"};
  std::string answers_path, out_path;
  std::vector<std::string> manifests;
  app.add_option("--answers", answers_path, "Answers TSV")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out_path, "Replay store to write (replaced)")->required();
  app.add_option("manifests", manifests, "Run manifests")->required()->check(CLI::ExistingFile);
  CLI11_PARSE(app, argc, argv);

  try {
    const auto answers = load_answers(answers_path);
    std::filesystem::remove(out_path);
    auto store = ReplayStore::open(out_path, ReplayMode::RecordMissing);
    for (const auto& path : manifests) {
      const auto m = RunManifest::load(path);
      auto model = std::make_shared<FunctionBackend>(
          "fixture-answers", [&answers, &m](const CompletionRequest& r) { return respond(answers, m, r.prompt); });
      ReplayBackend backend(store, model);
      translate(m, backend);
    }
    store->compact();
    std::cerr << store->size() << " completions -> " << out_path << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
