#pragma once

#include "gpcca/dataset.hpp"
#include "gpcca/layout.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <vector>

namespace gpcca {

/// Block-diagonal symmetric positive-definite matrix with cached Cholesky
/// factors, one per block. Empty blocks are allowed.
///
/// Construction throws NumericalError("covariance degenerate") if any block
/// is asymmetric beyond 1e-10 (relative to its largest entry) or fails the
/// Cholesky factorization.
class BlockSpd {
 public:
  BlockSpd(BlockLayout layout, std::vector<Matrix> blocks);

  /// Diagonal-by-block extraction of a dense matrix (off-block entries ignored).
  static BlockSpd from_dense(const Matrix& dense, const BlockLayout& layout);
  static BlockSpd identity(const BlockLayout& layout);

  const BlockLayout& layout() const noexcept { return layout_; }
  Index blocks() const noexcept { return layout_.blocks(); }
  Index dim() const noexcept { return layout_.total(); }
  const Matrix& block(Index r) const { return blocks_[static_cast<std::size_t>(r)]; }
  const Eigen::LLT<Matrix>& factor(Index r) const { return factors_[static_cast<std::size_t>(r)]; }
  const std::vector<Matrix>& block_list() const noexcept { return blocks_; }

  /// Assembled m x m matrix.
  Matrix dense() const;
  Vector diagonal() const;

  /// Sub-matrix on the given sorted stacked rows; keeps per-block structure.
  BlockSpd restrict_to(const std::vector<Index>& rows) const;

 private:
  BlockLayout layout_;
  std::vector<Matrix> blocks_;
  std::vector<Eigen::LLT<Matrix>> factors_;
};

/// Psi^{-1} * rhs by per-block Cholesky solves.
Matrix block_solve(const BlockSpd& psi, const Matrix& rhs);

/// ln|Psi| from the cached factors.
double block_logdet(const BlockSpd& psi);

/// Posterior covariance M = (I + W' Psi^{-1} W)^{-1} and the reusable
/// projection M W' Psi^{-1} (d x m_k).
struct WoodburyPosterior {
  Matrix m;
  Matrix half;
};

WoodburyPosterior woodbury_posterior(const Matrix& w_partial, const BlockSpd& psi_partial);

/// Keeps only within-block entries of `g` and symmetrizes: (B + B') / 2.
Matrix bdiag_project(const Matrix& g, const BlockLayout& layout);

/// Same projection returned as the list of diagonal blocks.
std::vector<Matrix> bdiag_blocks(const Matrix& g, const BlockLayout& layout);

/// Inverse of an SPD matrix through its Cholesky factor.
Matrix spd_inverse(const Eigen::LLT<Matrix>& llt);

/// Sum of log of the diagonal of L, doubled.
double llt_logdet(const Eigen::LLT<Matrix>& llt);

}  // namespace gpcca
