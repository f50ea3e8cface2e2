// gentrans: translate with a completion backend and score the outputs.
//
//   gentrans translate   --manifest m.toml
//   gentrans score-mhb   --manifest m.toml
//   gentrans score-bias  --manifest m.toml --lexicon lex.tsv
//   gentrans score-delta --manifest m.toml
//   gentrans record      --manifest m.toml --endpoint cfg.toml --out store.jsonl
//   gentrans render      --scores table.csv --kind mhb_panel [--format md]
//   gentrans bleu        --hyp h.txt --ref r1.txt [--ref r2.txt ...]
//   gentrans chrf        --hyp h.txt --ref r1.txt [--ref r2.txt ...]

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gentrans/backend_factory.hpp"
#include "gentrans/experiments.hpp"

namespace {

using namespace gentrans;

void report_rejections(const RunManifest& m) {
  for (const auto& lang : m.langs) {
    const auto pool = load_pool(m, lang);
    for (const auto& issue : pool.rejected) {
      std::cerr << "warning: " << m.mhb_path << ":" << issue.line_no << ": " << issue.message << "\n";
    }
  }
}

void run_translate(const RunManifest& m, CompletionBackend& backend) {
  report_rejections(m);
  const auto run = translate(m, backend);
  write_translation(m, run);
  for (const auto& [lang, outs] : run.outputs) {
    std::size_t partial = 0, empty = 0;
    for (const auto& [id, g] : outs.gendered) {
      if (g.status == GenerationStatus::Partial) ++partial;
      if (g.status == GenerationStatus::Empty) ++empty;
    }
    std::cerr << lang << ": " << outs.order.size() << " queries, " << partial << " partial, " << empty
              << " empty gender-specific outputs -> " << outputs_path(m, lang) << "\n";
  }
}

void print_score(double v) { std::printf("%.2f\n", v); }

std::vector<std::string> read_segments(const std::string& path) { return text::split_lines(text::read_file(path)); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gender-specific translation with completion backends: prompting, replay and scoring"};
  app.require_subcommand(1);

  std::string manifest_path, lexicon_path, endpoint_path, out_path, scores_path, kind = "mhb_panel",
                                                                             format = "md";
  std::string hyp_path, tokenization = "whitespace", output_dir;
  std::vector<std::string> ref_paths;
  std::size_t max_order = 4, char_order = 6;
  double smooth_k = 1.0, beta = 2.0;

  auto* translate_cmd = app.add_subcommand("translate", "Prompt the backend and write raw outputs");
  auto* mhb_cmd = app.add_subcommand("score-mhb", "Reference panels (BLEU and chrF)");
  auto* bias_cmd = app.add_subcommand("score-bias", "Gender accuracy and delta_b");
  auto* delta_cmd = app.add_subcommand("score-delta", "Masculine vs feminine BLEU on parallel text");
  auto* record_cmd = app.add_subcommand("record", "Populate a replay store from a live endpoint");
  for (auto* c : {translate_cmd, mhb_cmd, bias_cmd, delta_cmd, record_cmd}) {
    c->add_option("--manifest", manifest_path, "Run manifest")->required()->check(CLI::ExistingFile);
  }
  for (auto* c : {translate_cmd, mhb_cmd, bias_cmd, delta_cmd, record_cmd}) {
    c->add_option("--output-dir", output_dir, "Override the manifest's output_dir");
  }
  bias_cmd->add_option("--lexicon", lexicon_path, "Gender lexicon TSV (defaults to data.lexicon)");
  record_cmd->add_option("--endpoint", endpoint_path, "Endpoint config")->required()->check(CLI::ExistingFile);
  record_cmd->add_option("--out", out_path, "Replay store to create or extend")->required();

  auto* render_cmd = app.add_subcommand("render", "Re-emit a score CSV, e.g. as Markdown");
  render_cmd->add_option("--scores", scores_path, "Score CSV")->required()->check(CLI::ExistingFile);
  render_cmd->add_option("--kind", kind, "mhb_panel | bug_bias | flores_delta");
  render_cmd->add_option("--format", format, "md | csv");

  auto* bleu_cmd = app.add_subcommand("bleu", "Corpus BLEU of a hypothesis file");
  auto* chrf_cmd = app.add_subcommand("chrf", "Corpus chrF of a hypothesis file");
  for (auto* c : {bleu_cmd, chrf_cmd}) {
    c->add_option("--hyp", hyp_path, "One segment per line")->required()->check(CLI::ExistingFile);
    c->add_option("--ref", ref_paths, "Reference file(s), line-aligned")->required()->check(CLI::ExistingFile);
  }
  bleu_cmd->add_option("--tokenize", tokenization, "whitespace | char | pretokenized");
  bleu_cmd->add_option("--max-order", max_order, "Highest n-gram order");
  bleu_cmd->add_option("--smooth-k", smooth_k, "Add-k constant for orders >= 2");
  chrf_cmd->add_option("--char-order", char_order, "Highest character n-gram order");
  chrf_cmd->add_option("--beta", beta, "Recall weight");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*bleu_cmd || *chrf_cmd) {
      const auto hyps = read_segments(hyp_path);
      std::vector<std::vector<std::string>> refs(hyps.size());
      for (const auto& p : ref_paths) {
        const auto lines = read_segments(p);
        if (lines.size() != hyps.size()) {
          throw Error(ErrorKind::LengthMismatch, p + " has " + std::to_string(lines.size()) + " lines, hypothesis has " +
                                                     std::to_string(hyps.size()));
        }
        for (std::size_t i = 0; i < lines.size(); ++i) refs[i].push_back(lines[i]);
      }
      if (*chrf_cmd) {
        print_score(chrf_multi(hyps, refs, ChrfConfig{char_order, beta}));
        return 0;
      }
      const auto scheme = parse_tokenization(tokenization);
      std::vector<std::vector<std::string>> h;
      std::vector<std::vector<std::vector<std::string>>> r(hyps.size());
      for (std::size_t i = 0; i < hyps.size(); ++i) {
        h.push_back(tokenize(hyps[i], scheme));
        for (const auto& ref : refs[i]) r[i].push_back(tokenize(ref, scheme));
      }
      const auto s = corpus_bleu(h, r, BleuConfig{max_order, smooth_k});
      std::printf("%.2f", s.score);
      std::printf(" BP=%.4f ratio=%.4f hyp_len=%zu ref_len=%zu\n", s.brevity_penalty,
                  s.ref_len ? static_cast<double>(s.hyp_len) / static_cast<double>(s.ref_len) : 0.0, s.hyp_len,
                  s.ref_len);
      return 0;
    }

    if (*render_cmd) {
      auto report = parse_report_csv(text::read_file(scores_path));
      decorate(report, parse_experiment(kind));
      if (format != "md" && format != "csv") throw Error(ErrorKind::InvalidConfig, "format must be md or csv");
      std::cout << emit_report(report, format == "md" ? ReportFormat::Markdown : ReportFormat::Csv);
      return 0;
    }

    auto manifest = RunManifest::load(manifest_path);
    if (!output_dir.empty()) manifest.output_dir = std::filesystem::absolute(output_dir).string();
    if (*translate_cmd) {
      auto stack = BackendStack::from_manifest(manifest);
      run_translate(manifest, stack.get());
      return 0;
    }
    if (*record_cmd) {
      auto stack = BackendStack::replay(manifest, out_path, ReplayMode::RecordMissing, endpoint_path);
      run_translate(manifest, stack.get());
      ReplayStore::open(out_path, ReplayMode::RecordMissing)->compact();
      return 0;
    }

    ExperimentReport report;
    if (*mhb_cmd) {
      if (manifest.experiment != ExperimentKind::MhbPanel) throw Error(ErrorKind::InvalidConfig, "manifest is not an mhb_panel run");
      report = score_mhb(manifest);
    } else if (*bias_cmd) {
      if (manifest.experiment != ExperimentKind::BugBias) throw Error(ErrorKind::InvalidConfig, "manifest is not a bug_bias run");
      const auto lex_path = lexicon_path.empty() ? manifest.resolve(manifest.lexicon_path) : lexicon_path;
      if (lex_path.empty()) throw Error(ErrorKind::InvalidConfig, "no lexicon: pass --lexicon or set data.lexicon");
      report = score_bias(manifest, GenderLexicon::load(lex_path));
    } else {
      if (manifest.experiment != ExperimentKind::FloresDelta) throw Error(ErrorKind::InvalidConfig, "manifest is not a flores_delta run");
      report = score_delta(manifest);
    }
    write_report(manifest, report);
    std::cout << emit_report(report, ReportFormat::Markdown);
    return 0;
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.kind()) << "]: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
