#include "gpcca/block_linalg.hpp"

#include "gpcca/error.hpp"

#include <cmath>
#include <string>

namespace gpcca {

namespace {

constexpr double kSymmetryTolerance = 1e-10;

void check_symmetric(const Matrix& b, Index r) {
  if (b.rows() != b.cols()) {
    throw InputError("block " + std::to_string(r + 1) + " is not square");
  }
  if (b.size() == 0) return;
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  if ((b - b.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance * scale) {
    throw NumericalError("covariance degenerate: block " + std::to_string(r + 1) + " is not symmetric");
  }
}

}  // namespace

BlockSpd::BlockSpd(BlockLayout layout, std::vector<Matrix> blocks)
    : layout_(std::move(layout)), blocks_(std::move(blocks)) {
  if (static_cast<Index>(blocks_.size()) != layout_.blocks()) {
    throw InputError("block count does not match layout");
  }
  factors_.reserve(blocks_.size());
  for (Index r = 0; r < layout_.blocks(); ++r) {
    const Matrix& b = blocks_[static_cast<std::size_t>(r)];
    if (b.rows() != layout_.size(r)) {
      throw InputError("block " + std::to_string(r + 1) + " has size " + std::to_string(b.rows()) +
                       ", layout expects " + std::to_string(layout_.size(r)));
    }
    check_symmetric(b, r);
    factors_.emplace_back(b);
    if (b.size() > 0 && factors_.back().info() != Eigen::Success) {
      throw NumericalError("covariance degenerate: block " + std::to_string(r + 1) + " is not positive definite");
    }
  }
}

BlockSpd BlockSpd::from_dense(const Matrix& dense, const BlockLayout& layout) {
  if (dense.rows() != layout.total() || dense.cols() != layout.total()) {
    throw InputError("dense matrix does not match layout");
  }
  std::vector<Matrix> blocks;
  for (Index r = 0; r < layout.blocks(); ++r) {
    blocks.push_back(dense.block(layout.offset(r), layout.offset(r), layout.size(r), layout.size(r)));
  }
  return BlockSpd(layout, std::move(blocks));
}

BlockSpd BlockSpd::identity(const BlockLayout& layout) {
  std::vector<Matrix> blocks;
  for (Index r = 0; r < layout.blocks(); ++r) blocks.push_back(Matrix::Identity(layout.size(r), layout.size(r)));
  return BlockSpd(layout, std::move(blocks));
}

Matrix BlockSpd::dense() const {
  Matrix out = Matrix::Zero(dim(), dim());
  for (Index r = 0; r < blocks(); ++r) {
    out.block(layout_.offset(r), layout_.offset(r), layout_.size(r), layout_.size(r)) = block(r);
  }
  return out;
}

Vector BlockSpd::diagonal() const {
  Vector out(dim());
  for (Index r = 0; r < blocks(); ++r) out.segment(layout_.offset(r), layout_.size(r)) = block(r).diagonal();
  return out;
}

BlockSpd BlockSpd::restrict_to(const std::vector<Index>& rows) const {
  std::vector<std::vector<Index>> local(static_cast<std::size_t>(blocks()));
  Index prev = -1;
  for (Index row : rows) {
    if (row <= prev) throw InputError("restriction rows must be strictly increasing");
    prev = row;
    const Index r = layout_.block_of(row);
    local[static_cast<std::size_t>(r)].push_back(row - layout_.offset(r));
  }
  std::vector<Index> sizes;
  std::vector<Matrix> sub;
  for (Index r = 0; r < blocks(); ++r) {
    const auto& idx = local[static_cast<std::size_t>(r)];
    sizes.push_back(static_cast<Index>(idx.size()));
    sub.push_back(block(r)(idx, idx));
  }
  return BlockSpd(BlockLayout(std::move(sizes)), std::move(sub));
}

Matrix block_solve(const BlockSpd& psi, const Matrix& rhs) {
  if (rhs.rows() != psi.dim()) {
    throw InputError("rhs has " + std::to_string(rhs.rows()) + " rows, covariance has " + std::to_string(psi.dim()));
  }
  Matrix out(rhs.rows(), rhs.cols());
  const auto& layout = psi.layout();
  for (Index r = 0; r < psi.blocks(); ++r) {
    if (layout.size(r) == 0) continue;
    out.middleRows(layout.offset(r), layout.size(r)) = psi.factor(r).solve(rhs.middleRows(layout.offset(r), layout.size(r)));
  }
  return out;
}

double llt_logdet(const Eigen::LLT<Matrix>& llt) {
  const auto& l = llt.matrixLLT();
  double s = 0.0;
  for (Index i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
  return 2.0 * s;
}

double block_logdet(const BlockSpd& psi) {
  double s = 0.0;
  for (Index r = 0; r < psi.blocks(); ++r) {
    if (psi.layout().size(r) > 0) s += llt_logdet(psi.factor(r));
  }
  return s;
}

Matrix spd_inverse(const Eigen::LLT<Matrix>& llt) {
  const Index n = llt.matrixLLT().rows();
  Matrix l_inv = Matrix::Identity(n, n);
  llt.matrixL().solveInPlace(l_inv);
  Matrix inv = Matrix::Zero(n, n);
  inv.selfadjointView<Eigen::Lower>().rankUpdate(l_inv.transpose());
  inv.triangularView<Eigen::StrictlyUpper>() = inv.transpose();
  return inv;
}

WoodburyPosterior woodbury_posterior(const Matrix& w_partial, const BlockSpd& psi_partial) {
  if (w_partial.rows() != psi_partial.dim()) {
    throw InputError("partial loadings do not match partial covariance");
  }
  const Index d = w_partial.cols();
  if (d < 1) throw InputError("d must be ≥ 1");
  const Matrix psi_inv_w = block_solve(psi_partial, w_partial);
  Matrix precision = Matrix::Identity(d, d);
  precision.noalias() += w_partial.transpose() * psi_inv_w;
  Eigen::LLT<Matrix> llt(precision);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("covariance degenerate: posterior precision is not positive definite");
  }
  WoodburyPosterior out;
  out.m = spd_inverse(llt);
  out.half = out.m * psi_inv_w.transpose();
  return out;
}

std::vector<Matrix> bdiag_blocks(const Matrix& g, const BlockLayout& layout) {
  if (g.rows() != layout.total() || g.cols() != layout.total()) {
    throw InputError("matrix of size " + std::to_string(g.rows()) + "x" + std::to_string(g.cols()) +
                     " does not match layout of " + std::to_string(layout.total()));
  }
  std::vector<Matrix> out;
  for (Index r = 0; r < layout.blocks(); ++r) {
    const auto b = g.block(layout.offset(r), layout.offset(r), layout.size(r), layout.size(r));
    out.emplace_back(0.5 * (b + b.transpose()));
  }
  return out;
}

Matrix bdiag_project(const Matrix& g, const BlockLayout& layout) {
  const auto blocks = bdiag_blocks(g, layout);
  Matrix out = Matrix::Zero(g.rows(), g.cols());
  for (Index r = 0; r < layout.blocks(); ++r) {
    out.block(layout.offset(r), layout.offset(r), layout.size(r), layout.size(r)) = blocks[static_cast<std::size_t>(r)];
  }
  return out;
}

}  // namespace gpcca
