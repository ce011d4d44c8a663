#include "gpcca/em.hpp"
#include "gpcca/error.hpp"
#include "gpcca/parallel.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <numbers>
#include <string>

namespace gpcca {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

void check_compatible(const ObservedDataset& data, const ModelParams& params) {
  if (params.layout().sizes() != data.layout().sizes()) {
    throw InputError("model layout does not match the data layout");
  }
}

/// Per-block quantities shared by every sample of one E-step.
struct BlockPrecision {
  std::vector<Matrix> precision;    // P_r = Psi_r^{-1}
  std::vector<Matrix> precision_w;  // P_r W_r
  std::vector<Matrix> gram;         // W_r' P_r W_r
  std::vector<double> logdet;       // ln|Psi_r|
  double trace_inv_correlation = 0.0;

  explicit BlockPrecision(const ModelParams& params) {
    const auto& psi = params.psi();
    const auto& layout = psi.layout();
    for (Index r = 0; r < psi.blocks(); ++r) {
      precision.push_back(spd_inverse(psi.factor(r)));
      const auto w_r = params.loadings().middleRows(layout.offset(r), layout.size(r));
      precision_w.push_back(precision.back() * w_r);
      gram.push_back(w_r.transpose() * precision_w.back());
      logdet.push_back(llt_logdet(psi.factor(r)));
      trace_inv_correlation += precision.back().diagonal().dot(psi.block(r).diagonal());
    }
  }
};

double penalty_term(const BlockPrecision& bp, Index n, double lambda) {
  const double c = static_cast<double>(n) * (1.0 - lambda);
  return c == 0.0 ? 0.0 : -0.5 * c * bp.trace_inv_correlation;
}

}  // namespace

Matrix EStepBuffers::second_moment_z(Index k) const {
  const auto ez = posterior_means.col(k);
  return posterior_covs[static_cast<std::size_t>(k)] + ez * ez.transpose();
}

Matrix EStepBuffers::cross_moment(Index k) const {
  Matrix out = completed.col(k) * posterior_means.col(k).transpose();
  const auto& miss = missing[static_cast<std::size_t>(k)];
  if (!miss.rows.empty()) {
    const Matrix fm = miss.loading * posterior_covs[static_cast<std::size_t>(k)];
    for (std::size_t j = 0; j < miss.rows.size(); ++j) out.row(miss.rows[j]) += fm.row(static_cast<Index>(j));
  }
  return out;
}

Matrix EStepBuffers::second_moment_x(Index k) const {
  Matrix out = completed.col(k) * completed.col(k).transpose();
  const auto& miss = missing[static_cast<std::size_t>(k)];
  if (miss.rows.empty()) return out;
  const Matrix fmf = miss.loading * posterior_covs[static_cast<std::size_t>(k)] * miss.loading.transpose();
  out(miss.rows, miss.rows) += fmf;
  for (const auto& b : miss.blocks) {
    for (Index a = 0; a < b.count; ++a) {
      for (Index c = 0; c < b.count; ++c) {
        out(miss.rows[static_cast<std::size_t>(b.begin + a)], miss.rows[static_cast<std::size_t>(b.begin + c)]) +=
            b.covariance(a, c);
      }
    }
  }
  return out;
}

Matrix EStepBuffers::second_moment_x_block(Index k, const BlockLayout& layout, Index r) const {
  const Index off = layout.offset(r);
  const Index sz = layout.size(r);
  const auto xr = completed.col(k).segment(off, sz);
  Matrix out = xr * xr.transpose();
  const auto& miss = missing[static_cast<std::size_t>(k)];
  for (const auto& b : miss.blocks) {
    if (b.modality != r) continue;
    const Matrix fr = miss.loading.middleRows(b.begin, b.count);
    const Matrix cov = fr * posterior_covs[static_cast<std::size_t>(k)] * fr.transpose() + b.covariance;
    for (Index a = 0; a < b.count; ++a) {
      for (Index c = 0; c < b.count; ++c) {
        out(miss.rows[static_cast<std::size_t>(b.begin + a)] - off, miss.rows[static_cast<std::size_t>(b.begin + c)] - off) +=
            cov(a, c);
      }
    }
  }
  return out;
}

LatentPosterior EStepBuffers::posterior() const { return {posterior_means, posterior_covs}; }

EStepResult e_step(const ObservedDataset& data, const ModelParams& params, int threads) {
  check_compatible(data, params);
  const auto& layout = data.layout();
  const auto& mask = data.mask();
  const Matrix& w = params.loadings();
  const Vector& mu = params.means();
  const Index n = data.samples();
  const Index d = params.latent_dim();

  const BlockPrecision bp(params);

  // Centered data with zeros at missing positions and, per block, its image
  // under P, W'P r~ and r~'P r~ for every sample.
  Matrix resid = data.values().colwise() - mu;
  for (Index k = 0; k < n; ++k) {
    for (Index i = 0; i < resid.rows(); ++i) {
      if (mask(i, k) == 0) resid(i, k) = 0.0;
    }
  }
  Matrix p_resid(resid.rows(), n);
  Matrix wp_resid = Matrix::Zero(d, n);
  for (Index r = 0; r < layout.blocks(); ++r) {
    const auto rs = static_cast<std::size_t>(r);
    const auto rr = resid.middleRows(layout.offset(r), layout.size(r));
    p_resid.middleRows(layout.offset(r), layout.size(r)).noalias() = bp.precision[rs] * rr;
    wp_resid.noalias() += bp.precision_w[rs].transpose() * rr;
  }
  const Vector quad_full = resid.cwiseProduct(p_resid).colwise().sum().transpose();

  EStepResult out;
  auto& buf = out.buffers;
  buf.posterior_means.resize(d, n);
  buf.posterior_covs.assign(static_cast<std::size_t>(n), Matrix());
  buf.completed = data.values();
  buf.missing.assign(static_cast<std::size_t>(n), SampleMissing());
  std::vector<double> sample_ll(static_cast<std::size_t>(n), 0.0);
  std::vector<std::string> failures(static_cast<std::size_t>(n));

  // For missing rows u of a block, P - P_{:,u} P_uu^{-1} P_{u,:} is Psi_oo^{-1}
  // padded with zeros, so every observed-part quantity is the full-block value
  // minus a correction of size u.
  parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t ks) {
    const auto k = static_cast<Index>(ks);
    Matrix a = Matrix::Zero(d, d);
    Vector b = wp_resid.col(k);
    double quad = quad_full(k);
    double logdet_psi = 0.0;
    Index observed = 0;

    auto& miss = buf.missing[ks];
    std::vector<Matrix> miss_loading;
    std::vector<Vector> miss_offset;
    std::vector<Index> miss_local;

    for (Index r = 0; r < layout.blocks(); ++r) {
      const auto rs = static_cast<std::size_t>(r);
      const Index off = layout.offset(r);
      const Index sz = layout.size(r);
      miss_local.clear();
      for (Index i = 0; i < sz; ++i) {
        if (!mask(off + i, k)) miss_local.push_back(i);
      }
      const auto u = static_cast<Index>(miss_local.size());
      if (u == 0) {
        a += bp.gram[rs];
        logdet_psi += bp.logdet[rs];
        observed += sz;
        continue;
      }

      SampleMissing::Block mb;
      mb.modality = r;
      mb.begin = static_cast<Index>(miss.rows.size());
      mb.count = u;
      for (Index i : miss_local) miss.rows.push_back(off + i);

      if (u == sz) {
        // whole modality missing: x_u = W_u z + mu_u + e_u
        miss_loading.push_back(w.middleRows(off, sz));
        miss_offset.push_back(mu.segment(off, sz));
        mb.covariance = params.psi().block(r);
        miss.blocks.push_back(std::move(mb));
        continue;
      }

      const Matrix& p = bp.precision[rs];
      const Matrix& pw = bp.precision_w[rs];
      Matrix p_uu(u, u);
      Matrix rhs(u, d + 1);
      for (Index j = 0; j < u; ++j) {
        const Index row = miss_local[static_cast<std::size_t>(j)];
        for (Index t = 0; t < u; ++t) p_uu(t, j) = p(miss_local[static_cast<std::size_t>(t)], row);
        rhs.row(j).head(d) = pw.row(row);
        rhs(j, d) = p_resid(off + row, k);
      }
      Eigen::LLT<Matrix> llt(p_uu);
      if (llt.info() != Eigen::Success) {
        failures[ks] = "covariance degenerate: precision sub-block not positive definite for sample " +
                       std::to_string(k + 1);
        return;
      }
      const Matrix y = llt.solve(rhs);
      a += bp.gram[rs];
      a.noalias() -= rhs.leftCols(d).transpose() * y.leftCols(d);
      b.noalias() -= rhs.leftCols(d).transpose() * y.col(d);
      quad -= rhs.col(d).dot(y.col(d));
      logdet_psi += bp.logdet[rs] + llt_logdet(llt);
      observed += sz - u;

      miss_loading.push_back(y.leftCols(d));
      Vector offset(u);
      for (Index j = 0; j < u; ++j) offset(j) = mu(off + miss_local[static_cast<std::size_t>(j)]) - y(j, d);
      miss_offset.push_back(std::move(offset));
      mb.covariance = spd_inverse(llt);
      miss.blocks.push_back(std::move(mb));
    }

    Matrix precision = Matrix::Identity(d, d) + 0.5 * (a + a.transpose());
    Eigen::LLT<Matrix> llt(precision);
    if (llt.info() != Eigen::Success) {
      failures[ks] = "covariance degenerate: posterior precision not positive definite for sample " + std::to_string(k + 1);
      return;
    }
    Matrix m_post = spd_inverse(llt);
    const Vector ez = llt.solve(b);
    buf.posterior_means.col(k) = ez;

    if (!miss.rows.empty()) {
      const auto u = static_cast<Index>(miss.rows.size());
      miss.loading.resize(u, d);
      Index pos = 0;
      for (std::size_t j = 0; j < miss_loading.size(); ++j) {
        const Index cnt = miss_loading[j].rows();
        miss.loading.middleRows(pos, cnt) = miss_loading[j];
        const Vector filled = miss_loading[j] * ez + miss_offset[j];
        for (Index t = 0; t < cnt; ++t) buf.completed(miss.rows[static_cast<std::size_t>(pos + t)], k) = filled(t);
        pos += cnt;
      }
    }
    buf.posterior_covs[ks] = std::move(m_post);

    sample_ll[ks] = -0.5 * (static_cast<double>(observed) * kLog2Pi + logdet_psi + llt_logdet(llt) + quad - b.dot(ez));
  });

  for (const auto& f : failures) {
    if (!f.empty()) throw NumericalError(f);
  }
  double total = 0.0;
  for (double v : sample_ll) total += v;
  out.loglik.observed = total;
  out.loglik.penalty = penalty_term(bp, n, params.ridge_lambda());
  return out;
}

EStepResult e_step_complete(const ObservedDataset& data, const ModelParams& params) {
  check_compatible(data, params);
  if (!data.complete()) {
    throw InputError("complete-data path requires a fully observed dataset");
  }
  const auto& layout = data.layout();
  const Index n = data.samples();
  const Index m = data.features();
  const Index d = params.latent_dim();
  const Matrix& w = params.loadings();

  const BlockPrecision bp(params);
  const Matrix resid = data.values().colwise() - params.means();

  Matrix a = Matrix::Zero(d, d);
  Matrix b = Matrix::Zero(d, n);  // W' Psi^{-1} (x_k - mu)
  double quad = 0.0;
  double logdet_psi = 0.0;
  for (Index r = 0; r < layout.blocks(); ++r) {
    const auto rs = static_cast<std::size_t>(r);
    const auto rr = resid.middleRows(layout.offset(r), layout.size(r));
    a.noalias() += w.middleRows(layout.offset(r), layout.size(r)).transpose() * bp.precision_w[rs];
    b.noalias() += bp.precision_w[rs].transpose() * rr;
    quad += (bp.precision[rs] * rr).cwiseProduct(rr).sum();
    logdet_psi += bp.logdet[rs];
  }
  Matrix precision = Matrix::Identity(d, d) + 0.5 * (a + a.transpose());
  Eigen::LLT<Matrix> llt(precision);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("covariance degenerate: posterior precision not positive definite");
  }
  const Matrix m_post = spd_inverse(llt);

  EStepResult out;
  auto& buf = out.buffers;
  buf.posterior_means = llt.solve(b);
  buf.posterior_covs.assign(static_cast<std::size_t>(n), m_post);
  buf.completed = data.values();
  buf.missing.assign(static_cast<std::size_t>(n), SampleMissing());

  const double fit_term = b.cwiseProduct(buf.posterior_means).sum();
  out.loglik.observed = -0.5 * (static_cast<double>(n) * (static_cast<double>(m) * kLog2Pi + logdet_psi + llt_logdet(llt)) +
                                quad - fit_term);
  out.loglik.penalty = penalty_term(bp, n, params.ridge_lambda());
  return out;
}

}  // namespace gpcca
