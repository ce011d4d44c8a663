#include "gpcca/model.hpp"

#include "gpcca/error.hpp"

#include <cmath>
#include <string>

namespace gpcca {

ModelParams::ModelParams(Matrix loadings, Vector means, BlockSpd psi, double ridge_lambda)
    : loadings_(std::move(loadings)), means_(std::move(means)), psi_(std::move(psi)), ridge_lambda_(ridge_lambda) {
  const Index m = psi_.dim();
  if (loadings_.rows() != m || means_.size() != m) {
    throw InputError("loadings/means do not match the covariance layout (" + std::to_string(m) + " features)");
  }
  const Index d = loadings_.cols();
  if (d < 1) throw InputError("d must be ≥ 1");
  if (d > psi_.layout().min_size()) {
    throw InputError("d = " + std::to_string(d) + " exceeds the smallest modality size " +
                     std::to_string(psi_.layout().min_size()));
  }
  if (!(ridge_lambda_ > 0.0 && ridge_lambda_ <= 1.0)) {
    throw InputError("ridge lambda must lie in (0, 1]");
  }
  if (!loadings_.allFinite() || !means_.allFinite()) {
    throw NumericalError("non-finite model parameters");
  }
}

Matrix ModelParams::implied_covariance() const {
  Matrix c = psi_.dense();
  c.noalias() += loadings_ * loadings_.transpose();
  return c;
}

double relative_change(double previous, double current) {
  return std::abs(current - previous) / (std::abs(previous) + 1.0);
}

}  // namespace gpcca
