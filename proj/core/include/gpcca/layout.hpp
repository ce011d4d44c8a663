#pragma once

#include <Eigen/Core>

#include <vector>

namespace gpcca {

using Index = Eigen::Index;

/// Partition of a stacked feature axis into contiguous blocks.
///
/// Blocks may be empty; this is what the restriction of a block covariance
/// to a sample's observed rows produces when a whole modality is missing.
class BlockLayout {
 public:
  explicit BlockLayout(std::vector<Index> sizes);

  Index blocks() const noexcept { return static_cast<Index>(sizes_.size()); }
  Index size(Index r) const { return sizes_.at(static_cast<std::size_t>(r)); }
  Index offset(Index r) const { return offsets_.at(static_cast<std::size_t>(r)); }
  Index total() const noexcept { return total_; }
  Index min_size() const;

  const std::vector<Index>& sizes() const noexcept { return sizes_; }
  const std::vector<Index>& offsets() const noexcept { return offsets_; }

  /// Block containing stacked row `row`.
  Index block_of(Index row) const;

  friend bool operator==(const BlockLayout& a, const BlockLayout& b) { return a.sizes_ == b.sizes_; }

 private:
  std::vector<Index> sizes_;
  std::vector<Index> offsets_;
  Index total_ = 0;
};

/// Layout of R >= 2 modalities, each with at least one feature.
class ModalityLayout : public BlockLayout {
 public:
  explicit ModalityLayout(std::vector<Index> sizes);

  Index modalities() const noexcept { return blocks(); }
};

}  // namespace gpcca
