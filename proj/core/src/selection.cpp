#include "gpcca/selection.hpp"

#include "gpcca/error.hpp"
#include "gpcca/parallel.hpp"
#include "gpcca/random.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <string>

namespace gpcca {

Matrix consensus_matrix(const LabelMatrix& labels) {
  const Index n = labels.rows();
  const Index b = labels.cols();
  if (b < 1) throw InputError("consensus needs at least one clustering");
  Matrix c = Matrix::Zero(n, n);
  for (Index col = 0; col < b; ++col) {
    for (Index j = 0; j < n; ++j) {
      for (Index i = j + 1; i < n; ++i) {
        if (labels(i, col) == labels(j, col)) c(i, j) += 1.0;
      }
    }
  }
  const double inv_b = 1.0 / static_cast<double>(b);
  for (Index j = 0; j < n; ++j) {
    c(j, j) = 1.0;
    for (Index i = j + 1; i < n; ++i) {
      c(i, j) *= inv_b;
      c(j, i) = c(i, j);
    }
  }
  return c;
}

Matrix connectivity_matrix(std::span<const Index> labels) {
  const auto n = static_cast<Index>(labels.size());
  Matrix c(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      c(i, j) = labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)] ? 1.0 : 0.0;
    }
  }
  return c;
}

double consensus_score(const Matrix& consensus) {
  if (consensus.rows() != consensus.cols()) throw InputError("consensus matrix must be square");
  const Index n = consensus.rows();
  double h = 0.0;
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      const double v = consensus(i, j);
      if (!(v >= 0.0 && v <= 1.0)) {
        throw InputError("consensus entry (" + std::to_string(i) + ", " + std::to_string(j) + ") outside [0, 1]");
      }
      if (i < j && v > 0.0) h += v * std::log2(v);
    }
  }
  return h;
}

double init_rmse(const Matrix& connectivity, const Matrix& consensus) {
  if (connectivity.rows() != consensus.rows() || connectivity.cols() != consensus.cols() ||
      connectivity.rows() != connectivity.cols()) {
    throw InputError("connectivity and consensus must be square matrices of equal size");
  }
  const Index n = consensus.rows();
  if (n < 2) return 0.0;
  double ss = 0.0;
  for (Index j = 1; j < n; ++j) {
    for (Index i = 0; i < j; ++i) {
      const double diff = connectivity(i, j) - consensus(i, j);
      ss += diff * diff;
    }
  }
  return std::sqrt(2.0 * ss / (static_cast<double>(n) * static_cast<double>(n - 1)));
}

namespace {

double labels_rmse(const LabelMatrix& labels, Index col, const Matrix& consensus) {
  const Index n = labels.rows();
  if (n < 2) return 0.0;
  double ss = 0.0;
  for (Index j = 1; j < n; ++j) {
    for (Index i = 0; i < j; ++i) {
      const double a = labels(i, col) == labels(j, col) ? 1.0 : 0.0;
      const double diff = a - consensus(i, j);
      ss += diff * diff;
    }
  }
  return std::sqrt(2.0 * ss / (static_cast<double>(n) * static_cast<double>(n - 1)));
}

struct InitRun {
  std::optional<FitReport> fit;
  Partition partition;
  std::string error;
};

}  // namespace

const FitReport& SelectionResult::best_fit() const {
  const auto& w = winner();
  for (std::size_t t = 0; t < w.succeeded.size(); ++t) {
    if (w.succeeded[t] == chosen_init) return w.fits[t];
  }
  throw InputError("winning fit not retained");
}

std::size_t choose_candidate(std::span<const CandidateResult> candidates) {
  std::optional<std::size_t> best;
  for (std::size_t t = 0; t < candidates.size(); ++t) {
    if (candidates[t].disqualified) continue;
    if (!best || candidates[t].score > candidates[*best].score) best = t;
  }
  if (!best) throw NumericalError("every candidate dimension was disqualified by failed fits");
  return *best;
}

SelectionResult select_latent_dim(const ObservedDataset& data, const SelectionConfig& config) {
  config.em.validate();
  if (config.inits < 2) throw InputError("B ≥ 2 required");
  if (config.candidates.empty()) throw InputError("at least one candidate dimension required");
  for (std::size_t t = 0; t < config.candidates.size(); ++t) {
    const Index d = config.candidates[t];
    if (d < 1) throw InputError("d must be ≥ 1");
    if (t > 0 && d <= config.candidates[t - 1]) throw InputError("candidates must be strictly increasing");
    if (d > data.layout().min_size()) {
      throw InputError("candidate d = " + std::to_string(d) + " exceeds the smallest modality size " +
                       std::to_string(data.layout().min_size()));
    }
  }

  const auto inits = static_cast<std::size_t>(config.inits);
  SelectionResult result;
  std::optional<std::size_t> best;
  for (Index d : config.candidates) {
    std::vector<InitRun> runs(inits);
    parallel_for(inits, config.threads, [&](std::size_t b) {
      EmConfig em = config.em;
      em.seed = derive_seed(config.em.seed, {static_cast<std::uint64_t>(b)});
      em.threads = 1;
      try {
        FitReport fit = fit_auto(data, d, em);
        runs[b].partition = cluster_embedding(fit.posterior.means, config.cluster);
        runs[b].fit = std::move(fit);
      } catch (const NumericalError& e) {
        runs[b].error = "d = " + std::to_string(d) + ", init " + std::to_string(b) + ": " + e.what();
      }
    });

    CandidateResult cand;
    cand.d = d;
    for (std::size_t b = 0; b < inits; ++b) {
      if (runs[b].fit) {
        cand.succeeded.push_back(static_cast<Index>(b));
      } else {
        spdlog::warn("fit failed: {}", runs[b].error);
        cand.failures.push_back(runs[b].error);
      }
    }
    cand.disqualified = 2 * cand.failures.size() >= inits;
    if (cand.disqualified) {
      spdlog::warn("candidate d = {} disqualified: {} of {} fits failed", d, cand.failures.size(), inits);
      result.candidates.push_back(std::move(cand));
      continue;
    }

    cand.labels.resize(data.samples(), static_cast<Index>(cand.succeeded.size()));
    for (std::size_t t = 0; t < cand.succeeded.size(); ++t) {
      const auto& p = runs[static_cast<std::size_t>(cand.succeeded[t])].partition;
      for (Index i = 0; i < data.samples(); ++i) cand.labels(i, static_cast<Index>(t)) = p.labels[static_cast<std::size_t>(i)];
    }
    Matrix consensus = consensus_matrix(cand.labels);
    cand.score = consensus_score(consensus);
    double best_rmse = 0.0;
    for (std::size_t t = 0; t < cand.succeeded.size(); ++t) {
      const double r = labels_rmse(cand.labels, static_cast<Index>(t), consensus);
      cand.rmse.push_back(r);
      if (t == 0 || r < best_rmse) {
        best_rmse = r;
        cand.best_init = cand.succeeded[t];
      }
    }
    spdlog::info("d = {}: consensus score {:.6g}, best init {}", d, cand.score, cand.best_init);

    const std::size_t index = result.candidates.size();
    cand.consensus = std::move(consensus);
    for (Index b : cand.succeeded) cand.fits.push_back(std::move(*runs[static_cast<std::size_t>(b)].fit));
    result.candidates.push_back(std::move(cand));
    const std::size_t leader = choose_candidate(result.candidates);
    const std::size_t drop = leader == index ? best.value_or(index) : index;
    if (drop != leader) {
      result.candidates[drop].consensus = Matrix();
      result.candidates[drop].fits.clear();
    }
    best = leader;
  }
  if (!best) throw NumericalError("every candidate dimension was disqualified by failed fits");
  result.chosen_index = *best;
  result.chosen_d = result.candidates[*best].d;
  result.chosen_init = result.candidates[*best].best_init;
  return result;
}

}  // namespace gpcca
