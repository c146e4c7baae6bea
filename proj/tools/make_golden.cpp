// Regenerates tests/data/golden_seg.ncaw: the default-size contracting segmentation model.
// Only needed when the wire format version changes.

#include <iostream>

#include "nca/demo_models.hpp"
#include "nca/model_io.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_golden <output.ncaw>\n";
    return 2;
  }
  const auto spec = nca::demo::default_contracting_model(nca::TaskTag::segmentation);
  nca::io::save_model(argv[1], spec);
  std::cout << "wrote " << argv[1] << " (" << nca::io::size_report(spec).total << " bytes)\n";
  return 0;
}
