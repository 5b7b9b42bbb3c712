// Writes a synthetic 32x32 BMP corpus and multimedia decoy files.

#include <iostream>

#include <CLI11.hpp>

#include "gencarve/error.hpp"
#include "gencarve/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Synthetic corpus and decoy generator"};
  std::string images_dir, decoys_dir;
  std::size_t count = 100, per_format = 8, decoy_size = 16384;
  std::uint64_t seed = 1;
  app.add_option("--images", images_dir, "Output directory for BMP images");
  app.add_option("--count", count, "Number of images");
  app.add_option("--decoys", decoys_dir, "Output directory for decoy files");
  app.add_option("--per-format", per_format, "Decoy files per format");
  app.add_option("--decoy-size", decoy_size, "Bytes per decoy file");
  app.add_option("--seed", seed);
  CLI11_PARSE(app, argc, argv);

  try {
    if (!images_dir.empty()) gencarve::synth::write_corpus(images_dir, count, seed);
    if (!decoys_dir.empty()) gencarve::synth::write_decoys(decoys_dir, per_format, seed ^ 0x5DEECE66DULL, decoy_size);
  } catch (const gencarve::Error& e) {
    std::cerr << "gencarve-synth: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
