#pragma once

#include "gpcca/dataset.hpp"
#include "gpcca/model.hpp"

#include <cstdint>
#include <vector>

namespace gpcca {

enum class InitStrategy {
  RandomOrthonormal,  ///< seeded Gaussian, orthonormalized, rows scaled by feature sd
  MeanImputedSvd,     ///< top-d SVD of the mean-imputed centered data
};

/// Order of the M-step updates.
enum class MStepOrder {
  /// mu from W_t, then W from the fresh mu, then Psi from both fresh values.
  Conditional,
  /// Every update uses the previous iterate (mu_t, W_t), as the update
  /// equations are printed.
  Literal,
};

struct EmConfig {
  int max_iterations = 1000;
  double rel_tolerance = 1e-6;
  double ridge_lambda = 0.5;
  std::uint64_t seed = 0;
  InitStrategy init_strategy = InitStrategy::RandomOrthonormal;
  MStepOrder m_step_order = MStepOrder::Conditional;
  /// Worker threads for the per-sample E-step; <= 0 means default_thread_count().
  /// Results do not depend on this value.
  int threads = 1;

  void validate() const;
};

/// Conditional moments of the missing part of one sample.
///
/// Given z, the missing entries satisfy x_u = loading z + offset + eta with
/// eta ~ N(0, S) independent of z; S is block diagonal over the modalities
/// that have missing rows. `rows` is sorted and grouped by modality.
struct SampleMissing {
  struct Block {
    Index modality = 0;
    Index begin = 0;  ///< first position in `rows`
    Index count = 0;
    Matrix covariance;  ///< S restricted to this modality
  };

  std::vector<Index> rows;
  Matrix loading;
  std::vector<Block> blocks;
};

/// Per-sample E-step output. The five expectation families are available
/// through accessors built from compact per-sample storage.
struct EStepBuffers {
  Matrix posterior_means;           ///< d x n, E(z_k | x~_k)
  std::vector<Matrix> posterior_covs;  ///< M~_k
  Matrix completed;                 ///< m x n, E(x_k | x~_k)
  std::vector<SampleMissing> missing;

  Index samples() const noexcept { return posterior_means.cols(); }
  Index latent_dim() const noexcept { return posterior_means.rows(); }
  Index features() const noexcept { return completed.rows(); }

  /// E(z_k z_k' | x~_k).
  Matrix second_moment_z(Index k) const;
  /// E(x_k z_k' | x~_k), m x d.
  Matrix cross_moment(Index k) const;
  /// E(x_k x_k' | x~_k), full m x m.
  Matrix second_moment_x(Index k) const;
  /// E(x_k x_k' | x~_k) on the diagonal block of one modality.
  Matrix second_moment_x_block(Index k, const BlockLayout& layout, Index r) const;

  LatentPosterior posterior() const;
};

struct LogLikelihood {
  double observed = 0.0;  ///< sum_k log N(x~_k; mu~_k, W~_k W~_k' + Psi~_k)
  double penalty = 0.0;   ///< -(c/2) tr(R^{-1}), c = n (1 - lambda)

  double penalized() const noexcept { return observed + penalty; }
};

struct EStepResult {
  EStepBuffers buffers;
  LogLikelihood loglik;
};

/// Per-feature observed means, observed variances (floored at 1e-6) on the
/// diagonal of Psi, and loadings per config.init_strategy.
ModelParams init_params(const ObservedDataset& data, Index d, const EmConfig& config);

EStepResult e_step(const ObservedDataset& data, const ModelParams& params, int threads = 1);

/// E-step specialised to an all-observed mask: one shared posterior
/// covariance and batched products. Throws InputError on incomplete data.
EStepResult e_step_complete(const ObservedDataset& data, const ModelParams& params);

ModelParams m_step(const ObservedDataset& data, const EStepBuffers& buffers, const ModelParams& params, double lambda,
                   MStepOrder order = MStepOrder::Conditional);

FitReport fit(const ObservedDataset& data, Index d, const EmConfig& config);
/// EM from explicit starting parameters (warm start); lambda from config.
FitReport fit_from(const ObservedDataset& data, const ModelParams& start, const EmConfig& config);

/// Complete-data fast path, numerically equivalent to fit().
FitReport fit_complete(const ObservedDataset& data, Index d, const EmConfig& config);
FitReport fit_complete_from(const ObservedDataset& data, const ModelParams& start, const EmConfig& config);

/// fit_complete() when the mask is all ones, fit() otherwise.
FitReport fit_auto(const ObservedDataset& data, Index d, const EmConfig& config);

/// Posterior-mean embedding, d x n.
Matrix transform(const ModelParams& params, const ObservedDataset& data, int threads = 1);

/// Observed entries copied verbatim, missing entries replaced by E(x_ik | x~_k).
Matrix impute(const ModelParams& params, const ObservedDataset& data, int threads = 1);

/// Penalized and unpenalized observed-data log-likelihood at `params`.
LogLikelihood log_likelihood(const ObservedDataset& data, const ModelParams& params, int threads = 1);

}  // namespace gpcca
