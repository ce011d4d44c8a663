#include "gpcca/em.hpp"

#include "gpcca/error.hpp"
#include "gpcca/regularization.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <spdlog/spdlog.h>

#include <cmath>
#include <functional>
#include <random>
#include <string>

namespace gpcca {

namespace {

constexpr double kVarianceFloor = 1e-6;

void check_latent_dim(const ObservedDataset& data, Index d) {
  if (d < 1) throw InputError("d must be ≥ 1");
  if (d > data.layout().min_size()) {
    throw InputError("d = " + std::to_string(d) + " exceeds the smallest modality size " +
                     std::to_string(data.layout().min_size()));
  }
}

using EStepFn = std::function<EStepResult(const ObservedDataset&, const ModelParams&)>;

FitReport run_em(const ObservedDataset& data, const ModelParams& start, const EmConfig& config, const EStepFn& estep) {
  config.validate();
  if (start.layout().sizes() != data.layout().sizes()) {
    throw InputError("starting parameters do not match the data layout");
  }
  ModelParams params(start.loadings(), start.means(), start.psi(), config.ridge_lambda);
  std::vector<double> trace;
  std::vector<double> raw;
  int iterations = 0;
  bool converged = false;
  EStepResult current;
  while (true) {
    try {
      current = estep(data, params);
    } catch (const NumericalError& e) {
      throw e.at_iteration(iterations);
    }
    const double value = current.loglik.penalized();
    if (!std::isfinite(value)) {
      throw NumericalError("non-finite log-likelihood", iterations);
    }
    trace.push_back(value);
    raw.push_back(current.loglik.observed);
    if (trace.size() >= 2 && relative_change(trace[trace.size() - 2], value) < config.rel_tolerance) {
      converged = true;
      break;
    }
    if (iterations >= config.max_iterations) break;
    try {
      params = m_step(data, current.buffers, params, config.ridge_lambda, config.m_step_order);
    } catch (const NumericalError& e) {
      throw e.at_iteration(iterations + 1);
    }
    ++iterations;
  }
  return FitReport{std::move(trace), std::move(raw), iterations, converged, std::move(params),
                   current.buffers.posterior()};
}

}  // namespace

void EmConfig::validate() const {
  if (max_iterations < 1) throw InputError("max_iterations must be >= 1");
  if (!(rel_tolerance > 0.0)) throw InputError("rel_tolerance must be > 0");
  if (!(ridge_lambda > 0.0 && ridge_lambda <= 1.0)) throw InputError("ridge lambda must lie in (0, 1]");
}

ModelParams init_params(const ObservedDataset& data, Index d, const EmConfig& config) {
  config.validate();
  check_latent_dim(data, d);
  const Index m = data.features();
  const Index n = data.samples();
  const auto& x = data.values();
  const auto& mask = data.mask();

  Vector mean = Vector::Zero(m);
  Vector var = Vector::Zero(m);
  for (Index i = 0; i < m; ++i) {
    double sum = 0.0;
    Index count = 0;
    for (Index k = 0; k < n; ++k) {
      if (mask(i, k)) {
        sum += x(i, k);
        ++count;
      }
    }
    mean(i) = sum / static_cast<double>(count);
    double ss = 0.0;
    for (Index k = 0; k < n; ++k) {
      if (mask(i, k)) ss += (x(i, k) - mean(i)) * (x(i, k) - mean(i));
    }
    var(i) = ss / static_cast<double>(count);
    if (var(i) < kVarianceFloor) {
      spdlog::warn("feature {} has variance {:.3g}; flooring at {:g}", i + 1, var(i), kVarianceFloor);
      var(i) = kVarianceFloor;
    }
  }

  Matrix w(m, d);
  switch (config.init_strategy) {
    case InitStrategy::RandomOrthonormal: {
      std::mt19937_64 rng(config.seed);
      std::normal_distribution<double> normal(0.0, 1.0);
      Matrix g(m, d);
      for (Index j = 0; j < d; ++j) {
        for (Index i = 0; i < m; ++i) g(i, j) = normal(rng);
      }
      Eigen::HouseholderQR<Matrix> qr(g);
      const Matrix q = qr.householderQ() * Matrix::Identity(m, d);
      w = var.cwiseSqrt().asDiagonal() * q;
      break;
    }
    case InitStrategy::MeanImputedSvd: {
      Matrix centered(m, n);
      for (Index k = 0; k < n; ++k) {
        for (Index i = 0; i < m; ++i) centered(i, k) = mask(i, k) ? x(i, k) - mean(i) : 0.0;
      }
      Eigen::BDCSVD<Matrix> svd(centered, Eigen::ComputeThinU);
      w = svd.matrixU().leftCols(d) * (svd.singularValues().head(d) / std::sqrt(static_cast<double>(n))).asDiagonal();
      break;
    }
  }

  const auto& layout = data.layout();
  std::vector<Matrix> blocks;
  for (Index r = 0; r < layout.blocks(); ++r) {
    blocks.push_back(var.segment(layout.offset(r), layout.size(r)).asDiagonal());
  }
  return ModelParams(std::move(w), std::move(mean), BlockSpd(layout, std::move(blocks)), config.ridge_lambda);
}

ModelParams m_step(const ObservedDataset& data, const EStepBuffers& buffers, const ModelParams& params, double lambda,
                   MStepOrder order) {
  const auto& layout = data.layout();
  const Index n = data.samples();
  const Index d = params.latent_dim();
  const double inv_n = 1.0 / static_cast<double>(n);
  if (buffers.samples() != n || buffers.features() != data.features() || buffers.latent_dim() != d) {
    throw InputError("E-step buffers do not match data and parameters");
  }
  const Matrix& ez = buffers.posterior_means;
  const Matrix& xhat = buffers.completed;

  Matrix sum_m = Matrix::Zero(d, d);
  for (const auto& mk : buffers.posterior_covs) sum_m += mk;
  const Vector sum_ez = ez.rowwise().sum();
  Matrix szz = sum_m;
  szz.noalias() += ez * ez.transpose();

  // sum_k F_k M_k with F_k the conditional loading of the missing rows
  Matrix fm = Matrix::Zero(data.features(), d);
  for (Index k = 0; k < n; ++k) {
    const auto& miss = buffers.missing[static_cast<std::size_t>(k)];
    if (miss.rows.empty()) continue;
    const Matrix t = miss.loading * buffers.posterior_covs[static_cast<std::size_t>(k)];
    for (std::size_t j = 0; j < miss.rows.size(); ++j) fm.row(miss.rows[j]) += t.row(static_cast<Index>(j));
  }
  Matrix sxz = fm;
  sxz.noalias() += xhat * ez.transpose();

  const Matrix& w_old = params.loadings();
  const Vector& mu_old = params.means();
  const Vector mu_new = (xhat.rowwise().sum() - w_old * sum_ez) * inv_n;

  Eigen::LLT<Matrix> szz_llt(szz);
  if (szz_llt.info() != Eigen::Success) {
    throw NumericalError("singular sum of E(z z'): latent dimension too large or posterior collapsed");
  }
  const Vector& mu_for_w = order == MStepOrder::Conditional ? mu_new : mu_old;
  const Matrix w_new = szz_llt.solve((sxz - mu_for_w * sum_ez.transpose()).transpose()).transpose();

  const Matrix& w_res = order == MStepOrder::Conditional ? w_new : w_old;
  const Vector& mu_res = order == MStepOrder::Conditional ? mu_new : mu_old;

  // sum_k E[(x - W z - mu)(x - W z - mu)'] on the block support
  Matrix e = xhat.colwise() - mu_res;
  e.noalias() -= w_res * ez;
  std::vector<Matrix> acc;
  for (Index r = 0; r < layout.blocks(); ++r) {
    const Index off = layout.offset(r);
    const Index sz = layout.size(r);
    const auto er = e.middleRows(off, sz);
    const auto wr = w_res.middleRows(off, sz);
    const auto fr = fm.middleRows(off, sz);
    Matrix s = er * er.transpose();
    s.noalias() += wr * sum_m * wr.transpose();
    const Matrix cross = wr * fr.transpose();
    s -= cross + cross.transpose();
    acc.push_back(std::move(s));
  }
  for (Index k = 0; k < n; ++k) {
    const auto& miss = buffers.missing[static_cast<std::size_t>(k)];
    const Matrix& mk = buffers.posterior_covs[static_cast<std::size_t>(k)];
    for (const auto& b : miss.blocks) {
      const Matrix fb = miss.loading.middleRows(b.begin, b.count);
      const Matrix cov = fb * mk * fb.transpose() + b.covariance;
      Matrix& s = acc[static_cast<std::size_t>(b.modality)];
      const Index off = layout.offset(b.modality);
      for (Index c = 0; c < b.count; ++c) {
        const Index col = miss.rows[static_cast<std::size_t>(b.begin + c)] - off;
        for (Index a = 0; a < b.count; ++a) {
          s(miss.rows[static_cast<std::size_t>(b.begin + a)] - off, col) += cov(a, c);
        }
      }
    }
  }
  for (auto& s : acc) {
    s *= inv_n;
    s = 0.5 * (s + s.transpose()).eval();
    inflate_diagonal(s, lambda);
  }
  return ModelParams(w_new, mu_new, BlockSpd(layout, std::move(acc)), lambda);
}

FitReport fit_from(const ObservedDataset& data, const ModelParams& start, const EmConfig& config) {
  const int threads = config.threads;
  return run_em(data, start, config,
                [threads](const ObservedDataset& x, const ModelParams& p) { return e_step(x, p, threads); });
}

FitReport fit(const ObservedDataset& data, Index d, const EmConfig& config) {
  return fit_from(data, init_params(data, d, config), config);
}

FitReport fit_complete_from(const ObservedDataset& data, const ModelParams& start, const EmConfig& config) {
  if (!data.complete()) {
    throw InputError("complete-data path requires a fully observed dataset");
  }
  return run_em(data, start, config, [](const ObservedDataset& x, const ModelParams& p) { return e_step_complete(x, p); });
}

FitReport fit_complete(const ObservedDataset& data, Index d, const EmConfig& config) {
  if (!data.complete()) {
    throw InputError("complete-data path requires a fully observed dataset");
  }
  return fit_complete_from(data, init_params(data, d, config), config);
}

FitReport fit_auto(const ObservedDataset& data, Index d, const EmConfig& config) {
  return data.complete() ? fit_complete(data, d, config) : fit(data, d, config);
}

Matrix transform(const ModelParams& params, const ObservedDataset& data, int threads) {
  if (data.complete()) return e_step_complete(data, params).buffers.posterior_means;
  return e_step(data, params, threads).buffers.posterior_means;
}

Matrix impute(const ModelParams& params, const ObservedDataset& data, int threads) {
  if (data.complete()) {
    if (params.layout().sizes() != data.layout().sizes()) {
      throw InputError("model layout does not match the data layout");
    }
    return data.values();
  }
  return e_step(data, params, threads).buffers.completed;
}

LogLikelihood log_likelihood(const ObservedDataset& data, const ModelParams& params, int threads) {
  if (data.complete()) return e_step_complete(data, params).loglik;
  return e_step(data, params, threads).loglik;
}

}  // namespace gpcca
