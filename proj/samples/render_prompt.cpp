// Prints the gender-specific prompt built for the first Spanish query of a
// gendered corpus TSV (default: the shipped fixture).

#include <iostream>

#include "gentrans/corpus.hpp"
#include "gentrans/prompting.hpp"

using namespace gentrans;

int main(int argc, char** argv) {
  const std::string path = argc > 1 ? argv[1] : GENTRANS_DATA_DIR "/fixtures/mhb.tsv";
  try {
    const auto pool = load_mhb(path, "spa");
    const auto entries = gendered_only(pool.items);
    if (entries.empty()) throw Error(ErrorKind::InsufficientPool, "no gendered Spanish rows in " + path);
    const PromptConfig cfg{8, 20240101, "spa", "Spanish", TemplateKind::GenderSpecific};
    const auto q = Query::of(entries.front());
    const auto prompt = render_gender_specific(select_ices(pool.items, q, cfg), q, cfg);
    std::cout << prompt.text << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
