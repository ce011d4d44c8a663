#include "gpcca/layout.hpp"

#include "gpcca/error.hpp"

#include <algorithm>
#include <string>

namespace gpcca {

BlockLayout::BlockLayout(std::vector<Index> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.empty()) {
    throw InputError("layout needs at least one block");
  }
  offsets_.reserve(sizes_.size());
  for (Index s : sizes_) {
    if (s < 0) {
      throw InputError("block sizes must be non-negative");
    }
    offsets_.push_back(total_);
    total_ += s;
  }
}

Index BlockLayout::min_size() const { return *std::min_element(sizes_.begin(), sizes_.end()); }

Index BlockLayout::block_of(Index row) const {
  if (row < 0 || row >= total_) {
    throw InputError("row " + std::to_string(row) + " outside layout of " + std::to_string(total_) + " rows");
  }
  auto it = std::upper_bound(offsets_.begin(), offsets_.end(), row);
  return static_cast<Index>(it - offsets_.begin()) - 1;
}

ModalityLayout::ModalityLayout(std::vector<Index> sizes) : BlockLayout(std::move(sizes)) {
  if (blocks() < 2) {
    throw InputError("R ≥ 2 required: got " + std::to_string(blocks()) + " modality");
  }
  for (Index r = 0; r < blocks(); ++r) {
    if (size(r) < 1) {
      throw InputError("modality " + std::to_string(r + 1) + " is empty");
    }
  }
}

}  // namespace gpcca
