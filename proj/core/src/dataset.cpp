#include "gpcca/dataset.hpp"

#include "gpcca/error.hpp"

#include <cmath>
#include <string>

namespace gpcca {

ObservedDataset::ObservedDataset(Matrix values, Mask mask, ModalityLayout layout)
    : values_(std::move(values)), mask_(std::move(mask)), layout_(std::move(layout)) {
  observed_counts_.resize(static_cast<std::size_t>(values_.cols()));
  Index total = 0;
  for (Index k = 0; k < values_.cols(); ++k) {
    Index c = 0;
    for (Index i = 0; i < values_.rows(); ++i) c += mask_(i, k);
    observed_counts_[static_cast<std::size_t>(k)] = c;
    total += c;
  }
  complete_ = total == values_.size();
}

Matrix ObservedDataset::block_values(Index r) const {
  return values_.middleRows(layout_.offset(r), layout_.size(r));
}

Mask ObservedDataset::block_mask(Index r) const {
  return mask_.middleRows(layout_.offset(r), layout_.size(r));
}

ObservedDataset ObservedDataset::permute_samples(std::span<const Index> perm) const {
  if (static_cast<Index>(perm.size()) != samples()) {
    throw InputError("permutation length does not match sample count");
  }
  Matrix v(features(), samples());
  Mask m(features(), samples());
  for (Index j = 0; j < samples(); ++j) {
    const Index src = perm[static_cast<std::size_t>(j)];
    if (src < 0 || src >= samples()) throw InputError("permutation index out of range");
    v.col(j) = values_.col(src);
    m.col(j) = mask_.col(src);
  }
  return validate_dataset(std::move(v), std::move(m), layout_);
}

ObservedDataset validate_dataset(Matrix values, Mask mask, ModalityLayout layout) {
  if (values.rows() != mask.rows() || values.cols() != mask.cols()) {
    throw InputError("values are " + std::to_string(values.rows()) + "x" + std::to_string(values.cols()) +
                     " but mask is " + std::to_string(mask.rows()) + "x" + std::to_string(mask.cols()));
  }
  if (layout.total() != values.rows()) {
    throw InputError("layout covers " + std::to_string(layout.total()) + " features but data has " +
                     std::to_string(values.rows()));
  }
  if (values.cols() < 2) {
    throw InputError("at least 2 samples required");
  }
  for (Index k = 0; k < values.cols(); ++k) {
    Index observed = 0;
    for (Index i = 0; i < values.rows(); ++i) {
      const auto o = mask(i, k);
      if (o > 1) {
        throw InputError("mask entry (" + std::to_string(i + 1) + "," + std::to_string(k + 1) + ") is not 0/1");
      }
      if (o == 0) {
        values(i, k) = 0.0;
        continue;
      }
      if (!std::isfinite(values(i, k))) {
        throw InputError("non-finite observed value at feature " + std::to_string(i + 1) + ", sample " +
                         std::to_string(k + 1));
      }
      ++observed;
    }
    if (observed == 0) {
      throw InputError("sample " + std::to_string(k + 1) + " has no observed entries");
    }
  }
  for (Index i = 0; i < values.rows(); ++i) {
    Index observed = 0;
    for (Index k = 0; k < values.cols(); ++k) observed += mask(i, k);
    if (observed < 2) {
      throw InputError("feature " + std::to_string(i + 1) + " has " + std::to_string(observed) +
                       " observed entries; at least 2 required");
    }
  }
  return ObservedDataset(std::move(values), std::move(mask), std::move(layout));
}

ObservedDataset stack_modalities(std::span<const Matrix> blocks, std::span<const Mask> masks) {
  if (blocks.size() < 2) {
    throw InputError("R ≥ 2 required");
  }
  if (masks.size() != blocks.size()) {
    throw InputError("one mask per modality block required");
  }
  const Index n = blocks.front().cols();
  std::vector<Index> sizes;
  Index m = 0;
  for (std::size_t r = 0; r < blocks.size(); ++r) {
    if (blocks[r].cols() != n) {
      throw InputError("sample count mismatch: modality 1 has " + std::to_string(n) + " samples, modality " +
                       std::to_string(r + 1) + " has " + std::to_string(blocks[r].cols()));
    }
    if (masks[r].rows() != blocks[r].rows() || masks[r].cols() != n) {
      throw InputError("mask shape mismatch for modality " + std::to_string(r + 1));
    }
    sizes.push_back(blocks[r].rows());
    m += blocks[r].rows();
  }
  ModalityLayout layout(sizes);
  Matrix values(m, n);
  Mask mask(m, n);
  for (std::size_t r = 0; r < blocks.size(); ++r) {
    const auto ri = static_cast<Index>(r);
    values.middleRows(layout.offset(ri), layout.size(ri)) = blocks[r];
    mask.middleRows(layout.offset(ri), layout.size(ri)) = masks[r];
  }
  return validate_dataset(std::move(values), std::move(mask), std::move(layout));
}

Mask full_mask(Index rows, Index cols) { return Mask::Ones(rows, cols); }

}  // namespace gpcca
