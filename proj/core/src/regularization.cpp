#include "gpcca/regularization.hpp"

#include "gpcca/error.hpp"

#include <cmath>
#include <string>

namespace gpcca {

namespace {

void check_lambda(double lambda) {
  if (!(lambda > 0.0 && lambda <= 1.0)) {
    throw InputError("ridge lambda must lie in (0, 1], got " + std::to_string(lambda));
  }
}

}  // namespace

RidgeSpec::RidgeSpec(double l) : lambda(l) { check_lambda(l); }

double RidgeSpec::penalty_weight(Index samples) const { return static_cast<double>(samples) * (1.0 - lambda); }

CorrelationSplit correlation_decompose(const BlockSpd& psi) {
  const Vector variances = psi.diagonal();
  if ((variances.array() <= 0.0).any()) {
    throw NumericalError("covariance has a non-positive diagonal entry");
  }
  std::vector<Matrix> blocks;
  const auto& layout = psi.layout();
  for (Index r = 0; r < psi.blocks(); ++r) {
    const Vector inv_sd = variances.segment(layout.offset(r), layout.size(r)).cwiseSqrt().cwiseInverse();
    Matrix c = inv_sd.asDiagonal() * psi.block(r) * inv_sd.asDiagonal();
    c.diagonal().setOnes();
    blocks.push_back(0.5 * (c + c.transpose()));
  }
  return {variances, BlockSpd(layout, std::move(blocks))};
}

Matrix ridge_correlation(const Matrix& r_hat, double lambda) {
  check_lambda(lambda);
  Matrix out = lambda * r_hat;
  out.diagonal().array() += 1.0 - lambda;
  return out;
}

void inflate_diagonal(Matrix& block, double lambda) {
  check_lambda(lambda);
  block.diagonal() /= lambda;
}

BlockSpd ridge_covariance(const BlockSpd& psi_hat, double lambda) {
  check_lambda(lambda);
  std::vector<Matrix> blocks = psi_hat.block_list();
  for (auto& b : blocks) inflate_diagonal(b, lambda);
  return BlockSpd(psi_hat.layout(), std::move(blocks));
}

double ridge_penalty(const BlockSpd& correlation, double c) {
  if (c < 0.0) throw InputError("penalty weight c must be non-negative");
  if (c == 0.0) return 0.0;
  double trace = 0.0;
  for (Index r = 0; r < correlation.blocks(); ++r) {
    if (correlation.layout().size(r) == 0) continue;
    trace += spd_inverse(correlation.factor(r)).trace();
  }
  return -0.5 * c * trace;
}

double covariance_ridge_penalty(const BlockSpd& psi, double c) {
  if (c == 0.0) return 0.0;
  // tr(R^{-1}) = sum_i Psi_ii (Psi^{-1})_ii
  double trace = 0.0;
  for (Index r = 0; r < psi.blocks(); ++r) {
    if (psi.layout().size(r) == 0) continue;
    const Matrix inv = spd_inverse(psi.factor(r));
    trace += inv.diagonal().dot(psi.block(r).diagonal());
  }
  return -0.5 * c * trace;
}

}  // namespace gpcca
