#pragma once

#include "gpcca/block_linalg.hpp"
#include "gpcca/dataset.hpp"
#include "gpcca/layout.hpp"

#include <vector>

namespace gpcca {

/// Parameters of the stacked model x = W z + mu + e, z ~ N(0, I_d),
/// e ~ N(0, Psi) with Psi block diagonal by modality.
class ModelParams {
 public:
  /// Validates 1 <= d <= min_r m_r, lambda in (0, 1], and shapes against the
  /// layout of `psi`. Symmetry and definiteness are checked by BlockSpd.
  ModelParams(Matrix loadings, Vector means, BlockSpd psi, double ridge_lambda);

  const Matrix& loadings() const noexcept { return loadings_; }
  const Vector& means() const noexcept { return means_; }
  const BlockSpd& psi() const noexcept { return psi_; }
  const BlockLayout& layout() const noexcept { return psi_.layout(); }
  Index latent_dim() const noexcept { return loadings_.cols(); }
  Index features() const noexcept { return loadings_.rows(); }
  double ridge_lambda() const noexcept { return ridge_lambda_; }

  /// W W' + Psi, assembled. Rotation-invariant summary used for comparisons.
  Matrix implied_covariance() const;

 private:
  Matrix loadings_;
  Vector means_;
  BlockSpd psi_;
  double ridge_lambda_;
};

/// Posterior of the latent factors: column k of `means` is E(z_k | x~_k),
/// `covariances[k]` is M~_k.
struct LatentPosterior {
  Matrix means;
  std::vector<Matrix> covariances;
};

struct FitReport {
  /// Penalized observed-data log-likelihood, one entry per E-step.
  std::vector<double> loglik_trace;
  /// Same, without the ridge penalty.
  std::vector<double> unpenalized_trace;
  int iterations = 0;
  bool converged = false;
  ModelParams final_params;
  LatentPosterior posterior;
};

/// Relative-change stopping rule |l_t - l_{t-1}| / (|l_{t-1}| + 1).
double relative_change(double previous, double current);

}  // namespace gpcca
