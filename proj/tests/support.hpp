#pragma once

#include <gpcca/block_linalg.hpp>
#include <gpcca/dataset.hpp>
#include <gpcca/em.hpp>
#include <gpcca/model.hpp>

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/QR>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace gpcca::test {

using Rng = std::mt19937_64;

inline Matrix gaussian(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) g(i, j) = normal(rng);
  }
  return g;
}

inline double uniform(double lo, double hi, Rng& rng) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline Matrix random_spd(Index size, Rng& rng) {
  const Matrix a = gaussian(size, size, rng);
  Matrix s = a * a.transpose() / static_cast<double>(size);
  s.diagonal().array() += uniform(0.2, 1.0, rng);
  return 0.5 * (s + s.transpose());
}

inline BlockSpd random_block_spd(const BlockLayout& layout, Rng& rng) {
  std::vector<Matrix> blocks;
  for (Index r = 0; r < layout.blocks(); ++r) blocks.push_back(random_spd(layout.size(r), rng));
  return BlockSpd(layout, std::move(blocks));
}

inline ModelParams random_params(const ModalityLayout& layout, Index d, Rng& rng, double lambda = 1.0) {
  return ModelParams(gaussian(layout.total(), d, rng), gaussian(layout.total(), 1, rng).col(0),
                     random_block_spd(layout, rng), lambda);
}

/// Random mask with every sample observing at least one entry and every
/// feature observed in at least two samples.
inline Mask random_mask(Index m, Index n, double missing, Rng& rng) {
  std::bernoulli_distribution drop(missing);
  while (true) {
    Mask mask(m, n);
    for (Index k = 0; k < n; ++k) {
      for (Index i = 0; i < m; ++i) mask(i, k) = drop(rng) ? 0 : 1;
    }
    bool ok = true;
    for (Index k = 0; k < n && ok; ++k) ok = mask.col(k).cast<int>().sum() >= 1;
    for (Index i = 0; i < m && ok; ++i) ok = mask.row(i).cast<int>().sum() >= 2;
    if (ok) return mask;
  }
}

/// Samples drawn from the model itself, then masked.
inline ObservedDataset model_dataset(const ModelParams& p, Index n, double missing, Rng& rng) {
  const Matrix l = p.psi().dense().llt().matrixL();
  Matrix x = p.loadings() * gaussian(p.latent_dim(), n, rng) + l * gaussian(p.features(), n, rng);
  x.colwise() += p.means();
  const auto& sizes = p.layout().sizes();
  return validate_dataset(std::move(x), random_mask(p.features(), n, missing, rng), ModalityLayout(sizes));
}

/// Joint Gaussian of y = (x, z) conditioned on the observed entries of x.
struct DenseConditional {
  Vector mean;  ///< (m + d)
  Matrix cov;   ///< (m + d) x (m + d)
  double log_density = 0.0;

  Matrix second_moment() const { return cov + mean * mean.transpose(); }
};

inline DenseConditional dense_condition(const ModelParams& p, const Vector& x, const Mask& mask_col) {
  const Index m = p.features();
  const Index d = p.latent_dim();
  const Matrix& w = p.loadings();
  Matrix joint(m + d, m + d);
  joint.topLeftCorner(m, m) = w * w.transpose() + p.psi().dense();
  joint.topRightCorner(m, d) = w;
  joint.bottomLeftCorner(d, m) = w.transpose();
  joint.bottomRightCorner(d, d) = Matrix::Identity(d, d);
  Vector prior(m + d);
  prior << p.means(), Vector::Zero(d);

  std::vector<Index> obs;
  std::vector<Index> rest;
  for (Index i = 0; i < m; ++i) (mask_col(i) ? obs : rest).push_back(i);
  for (Index j = 0; j < d; ++j) rest.push_back(m + j);
  const auto no = static_cast<Index>(obs.size());
  const auto nr = static_cast<Index>(rest.size());

  Matrix coo(no, no);
  Matrix cro(nr, no);
  Matrix crr(nr, nr);
  Vector dev(no);
  for (Index a = 0; a < no; ++a) {
    dev(a) = x(obs[a]) - prior(obs[a]);
    for (Index b = 0; b < no; ++b) coo(a, b) = joint(obs[a], obs[b]);
    for (Index b = 0; b < nr; ++b) cro(b, a) = joint(rest[b], obs[a]);
  }
  for (Index a = 0; a < nr; ++a) {
    for (Index b = 0; b < nr; ++b) crr(a, b) = joint(rest[a], rest[b]);
  }
  const Eigen::PartialPivLU<Matrix> lu(coo);
  const Vector cond_mean = cro * lu.solve(dev);
  const Matrix cond_cov = crr - cro * lu.solve(cro.transpose());

  DenseConditional out;
  out.mean = Vector::Zero(m + d);
  out.cov = Matrix::Zero(m + d, m + d);
  for (Index a = 0; a < no; ++a) out.mean(obs[a]) = x(obs[a]);
  for (Index a = 0; a < nr; ++a) {
    out.mean(rest[a]) = prior(rest[a]) + cond_mean(a);
    for (Index b = 0; b < nr; ++b) out.cov(rest[a], rest[b]) = cond_cov(a, b);
  }
  out.log_density = -0.5 * (static_cast<double>(no) * std::log(2.0 * std::numbers::pi) +
                            std::log(lu.determinant()) + dev.dot(lu.solve(dev)));
  return out;
}

/// Dense -(c/2) sum_r tr(R_r^{-1}).
inline double dense_penalty(const BlockSpd& psi, double c) {
  double total = 0.0;
  for (Index r = 0; r < psi.blocks(); ++r) {
    const Matrix& b = psi.block(r);
    const Vector s = b.diagonal().cwiseSqrt().cwiseInverse();
    const Matrix corr = s.asDiagonal() * b * s.asDiagonal();
    total += corr.inverse().trace();
  }
  return -0.5 * c * total;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace gpcca::test
