#pragma once

#include "gpcca/clustering.hpp"
#include "gpcca/dataset.hpp"

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace gpcca {

enum class SimCase { A, B, C, D };

SimCase parse_sim_case(std::string_view name);
char sim_case_name(SimCase c);

struct SimSpec {
  SimCase sim_case = SimCase::A;
  double rho = 0.7;
  /// Entry-wise MCAR rate (cases A, B, D).
  double missing_rate = 0.0;
  /// Baseline modality-drop probability (case C).
  double p = 0.0;
  std::vector<Index> dims{60, 120, 180};
  Index cluster_size = 100;
  std::uint64_t seed = 0;

  void validate() const;
};

inline constexpr int kSimClusters = 6;

/// f_u / f_v assignment per cluster (rows) and modality (columns); true = f_u.
inline constexpr std::array<std::array<bool, 3>, kSimClusters> kClusterPattern{{
    {true, true, true},
    {false, false, true},
    {true, false, true},
    {false, true, false},
    {false, true, true},
    {true, false, false},
}};

struct SimOutput {
  ObservedDataset dataset;
  Partition truth;
  /// Values before masking, features x samples.
  Matrix complete_values;
  /// H_k per sample (case C only, empty otherwise).
  Vector hidden;
  /// Per-modality informative means of f_u and f_v.
  std::vector<Vector> mean_u;
  std::vector<Vector> mean_v;
  /// Joint covariance of all informative features (block diagonal except in case D).
  Matrix informative_covariance;
  bool projected = false;
  /// Case C samples redrawn because every modality was dropped.
  int redraws = 0;
};

/// Toeplitz matrix with entries rho^|i-j|.
Matrix ar1_correlation(Index size, double rho);

/// Columns are draws of mean + L z, z standard normal.
Matrix mvnormal_sample(const Vector& mean, const Matrix& cov_cholesky, Index count, std::uint64_t seed);

/// Columns are draws of mean + L z / sqrt(w / dof), w ~ chi-squared(dof).
Matrix mvt_sample(const Vector& mean, const Matrix& cov_cholesky, double dof, Index count, std::uint64_t seed);

SimOutput generate(const SimSpec& spec);

}  // namespace gpcca
