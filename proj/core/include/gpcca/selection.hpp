#pragma once

#include "gpcca/clustering.hpp"
#include "gpcca/em.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gpcca {

/// n x B cluster labels, one column per clustering.
using LabelMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

/// C_ij = fraction of columns in which rows i and j share a label.
Matrix consensus_matrix(const LabelMatrix& labels);

/// Binary co-clustering matrix of one labelling.
Matrix connectivity_matrix(std::span<const Index> labels);

/// sum_{i<j} C_ij log2 C_ij with 0 log 0 = 0. Always <= 0.
double consensus_score(const Matrix& consensus);

/// sqrt(2 / (n (n - 1)) * sum_{i<j} (A_ij - C_ij)^2).
double init_rmse(const Matrix& connectivity, const Matrix& consensus);

struct SelectionConfig {
  std::vector<Index> candidates{2, 3, 4, 6, 8, 10};
  int inits = 10;
  EmConfig em;
  ClusterOptions cluster;
  /// Concurrent fits; <= 0 means default_thread_count().
  int threads = 1;
};

struct CandidateResult {
  Index d = 0;
  /// Init index of every successful fit, in increasing order.
  std::vector<Index> succeeded;
  /// One message per failed fit.
  std::vector<std::string> failures;
  bool disqualified = false;
  /// Labels of the successful fits, columns aligned with `succeeded`.
  LabelMatrix labels;
  double score = 0.0;
  /// RMSE of each successful fit against the consensus, aligned with `succeeded`.
  std::vector<double> rmse;
  /// Init index with the smallest RMSE, -1 when disqualified.
  Index best_init = -1;
  /// Populated for the chosen candidate only.
  Matrix consensus;
  std::vector<FitReport> fits;
};

struct SelectionResult {
  Index chosen_d = 0;
  Index chosen_init = 0;
  std::size_t chosen_index = 0;
  std::vector<CandidateResult> candidates;

  const CandidateResult& winner() const { return candidates[chosen_index]; }
  /// Fit of the chosen initialization of the chosen candidate.
  const FitReport& best_fit() const;
};

/// Qualified candidate with the largest score, ties to the earlier one.
/// Throws NumericalError when every candidate is disqualified.
std::size_t choose_candidate(std::span<const CandidateResult> candidates);

/// B seeded fits per candidate (init b uses derive_seed(em.seed, {b}) for
/// every candidate), Louvain on each embedding, consensus scoring. Chooses the
/// largest score (ties to the smaller d) and, within it, the smallest RMSE
/// (ties to the smaller init). Candidates with at least half of their fits
/// failing are disqualified.
SelectionResult select_latent_dim(const ObservedDataset& data, const SelectionConfig& config);

}  // namespace gpcca
