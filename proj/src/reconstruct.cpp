#include "gencarve/reconstruct.hpp"

#include <algorithm>

#include "gencarve/bmp.hpp"
#include "gencarve/error.hpp"

namespace gencarve {

ReconstructionPanels reconstruction_panels(const FragmentRecord& record, ByteView predicted) {
  const std::size_t size = record.full_bytes.size();
  if (predicted.size() != size - record.cut) throw Error(Errc::LengthMismatch, "prediction length differs from real fragment");
  const std::size_t header = std::min(bmp::kHeaderSize, size);

  auto with_region = [&](ByteView head, ByteView tail) {
    Bytes out(size, 0);
    std::copy(head.begin(), head.end(), out.begin());
    std::copy(tail.begin(), tail.end(), out.begin() + static_cast<std::ptrdiff_t>(record.cut));
    std::copy_n(record.full_bytes.begin(), header, out.begin());
    return out;
  };

  ReconstructionPanels p;
  p.input = with_region(record.input_fragment(), {});
  p.predicted = with_region({}, predicted);
  p.real = with_region({}, record.real_fragment());
  p.reconstructed.assign(record.input_fragment().begin(), record.input_fragment().end());
  p.reconstructed.insert(p.reconstructed.end(), predicted.begin(), predicted.end());
  p.original = record.full_bytes;
  return p;
}

}  // namespace gencarve
