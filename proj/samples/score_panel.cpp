// Scores a masculine and a feminine output against both references and
// prints the reference panel, control cells in parentheses.

#include <iostream>

#include "gentrans/metrics.hpp"
#include "gentrans/report.hpp"

using namespace gentrans;

int main() {
  const auto tok = [](const char* s) { return tokenize(s, TokenizationScheme::Whitespace); };
  const Corpus masc_ref = {tok("Tengo amigos que son sordos ."), tok("¿ Qué piensas de los niños altos ?")};
  const Corpus fem_ref = {tok("Tengo amigas que son sordas ."), tok("¿ Qué piensas de las niñas altas ?")};
  const Corpus masc_out = {tok("Tengo amigos que son sordos ."), tok("¿ Qué opinas de los niños altos ?")};
  const Corpus fem_out = {tok("Tengo amigas que son sordas ."), tok("¿ Qué piensas de las niñas altas ?")};

  const auto p = bleu_panel(std::nullopt, masc_out, fem_out, masc_ref, fem_ref);
  ExperimentReport r;
  r.title = "BLEU panel";
  ReportTable t{"BLEU", {"output", "masc", "fem", "both"}, {}, {}, std::nullopt};
  t.rows.push_back({Cell::text("masc"), Cell::number(p.masc_out->masc.score), Cell::number(p.masc_out->fem.score, true),
                    Cell::number(p.masc_out->both.score)});
  t.rows.push_back({Cell::text("fem"), Cell::number(p.fem_out->masc.score, true), Cell::number(p.fem_out->fem.score),
                    Cell::number(p.fem_out->both.score)});
  t.better = {Better::None, Better::Higher, Better::Higher, Better::Higher};
  r.tables.push_back(t);
  std::cout << emit_markdown(r);
}
