#pragma once

#include "gencarve/fragmenter.hpp"
#include "gencarve/io.hpp"

namespace gencarve {

/// The five views of one prediction, each a complete BMP of the original's
/// geometry. Bytes outside a panel's region are zero (black); the header is
/// always taken from the original so every panel stays viewable.
struct ReconstructionPanels {
  Bytes input;          // input fragment only
  Bytes predicted;      // predicted region only
  Bytes real;           // real continuation only
  Bytes reconstructed;  // input ++ predicted
  Bytes original;
};

ReconstructionPanels reconstruction_panels(const FragmentRecord& record, ByteView predicted);

}  // namespace gencarve
