#pragma once

#include "gpcca/layout.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

namespace gpcca {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
/// Observation mask: 1 = observed, 0 = missing.
using Mask = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Stacked multi-modality data, features as rows and samples as columns.
///
/// Values at unobserved positions are stored as 0 and never carry meaning;
/// every algorithm consults the mask.
class ObservedDataset {
 public:
  const Matrix& values() const noexcept { return values_; }
  const Mask& mask() const noexcept { return mask_; }
  const ModalityLayout& layout() const noexcept { return layout_; }

  Index features() const noexcept { return values_.rows(); }
  Index samples() const noexcept { return values_.cols(); }

  bool observed(Index i, Index k) const { return mask_(i, k) != 0; }
  Index observed_count(Index k) const { return observed_counts_[static_cast<std::size_t>(k)]; }
  bool complete() const noexcept { return complete_; }

  Matrix block_values(Index r) const;
  Mask block_mask(Index r) const;

  /// Dataset whose column j is column perm[j] of this one.
  ObservedDataset permute_samples(std::span<const Index> perm) const;

 private:
  ObservedDataset(Matrix values, Mask mask, ModalityLayout layout);

  friend ObservedDataset validate_dataset(Matrix values, Mask mask, ModalityLayout layout);

  Matrix values_;
  Mask mask_;
  ModalityLayout layout_;
  std::vector<Index> observed_counts_;
  bool complete_ = false;
};

/// Checks shapes, mask, and coverage; zeroes unobserved positions.
/// Throws InputError naming the offending sample or feature (1-based).
ObservedDataset validate_dataset(Matrix values, Mask mask, ModalityLayout layout);

/// Row-concatenates R >= 2 modality blocks sharing a sample axis.
ObservedDataset stack_modalities(std::span<const Matrix> blocks, std::span<const Mask> masks);

/// All-observed mask of the given shape.
Mask full_mask(Index rows, Index cols);

}  // namespace gpcca
