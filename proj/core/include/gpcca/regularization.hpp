#pragma once

#include "gpcca/block_linalg.hpp"

namespace gpcca {

/// Ridge strength. lambda = 1 is the unpenalized limit; the penalty weight
/// is c = n (1 - lambda).
struct RidgeSpec {
  double lambda = 0.5;

  explicit RidgeSpec(double lambda);
  double penalty_weight(Index samples) const;
  /// Diagonal inflation factor 1/lambda - 1.
  double inflation() const noexcept { return 1.0 / lambda - 1.0; }
};

/// Psi = D^{1/2} R D^{1/2} with D = diag(Psi).
struct CorrelationSplit {
  Vector variances;
  BlockSpd correlation;
};

CorrelationSplit correlation_decompose(const BlockSpd& psi);

/// lambda R + (1 - lambda) I.
Matrix ridge_correlation(const Matrix& r_hat, double lambda);

/// Psi + (1/lambda - 1) diag(Psi), block by block.
BlockSpd ridge_covariance(const BlockSpd& psi_hat, double lambda);

/// In-place diagonal inflation of one (possibly singular) block.
void inflate_diagonal(Matrix& block, double lambda);

/// -(c/2) tr(R^{-1}).
double ridge_penalty(const BlockSpd& correlation, double c);

/// Penalty of a covariance through its correlation matrix.
double covariance_ridge_penalty(const BlockSpd& psi, double c);

}  // namespace gpcca
