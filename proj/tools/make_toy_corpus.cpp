// Generates a small synthetic corpus for smoke runs and demos.

#include "toy_corpus.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Write a synthetic three-class radiograph corpus"};
  std::string out;
  cxr::toy::ToyCorpusOptions options;
  app.add_option("--out", out, "Corpus root to create")->required();
  app.add_option("--per-class", options.per_class, "Images per class")->check(CLI::PositiveNumber);
  app.add_option("--side", options.side, "Image side in pixels")->check(CLI::Range(16, 4096));
  app.add_option("--seed", options.seed, "Generator seed");
  CLI11_PARSE(app, argc, argv);

  cxr::toy::write_toy_corpus(out, options);
  std::cout << "wrote " << 3 * options.per_class << " images under " << out << "\n";
  return 0;
}
