#include "gpcca/simgen.hpp"

#include "gpcca/error.hpp"
#include "gpcca/random.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace gpcca {

namespace {

constexpr double kEigenFloor = 1e-8;

enum Stream : std::uint64_t { kParams = 1, kInformative, kNoise, kMask, kSwap };

}  // namespace

SimCase parse_sim_case(std::string_view name) {
  if (name == "A" || name == "a") return SimCase::A;
  if (name == "B" || name == "b") return SimCase::B;
  if (name == "C" || name == "c") return SimCase::C;
  if (name == "D" || name == "d") return SimCase::D;
  throw InputError("unknown simulation case '" + std::string(name) + "' (expected A, B, C or D)");
}

char sim_case_name(SimCase c) { return static_cast<char>('A' + static_cast<int>(c)); }

void SimSpec::validate() const {
  if (!(rho >= 0.0 && rho < 1.0)) throw InputError("rho must lie in [0, 1)");
  if (sim_case == SimCase::C) {
    if (missing_rate != 0.0) throw InputError("Case C takes p, not a missing rate");
    if (!(p >= 0.0 && p <= 0.5)) throw InputError("p must lie in [0, 0.5]");
  } else {
    if (p != 0.0) throw InputError(std::string("Case ") + sim_case_name(sim_case) + " takes a missing rate, not p");
    if (!(missing_rate >= 0.0 && missing_rate < 1.0)) throw InputError("missing rate must lie in [0, 1)");
  }
  if (dims.size() != 3) throw InputError("simulation uses exactly 3 modalities");
  for (Index m : dims) {
    if (m < 5 || m % 5 != 0) throw InputError("modality sizes must be positive multiples of 5");
  }
  if (cluster_size < 1) throw InputError("cluster size must be >= 1");
}

Matrix ar1_correlation(Index size, double rho) {
  if (size < 1) throw InputError("size must be >= 1");
  if (!(std::abs(rho) < 1.0)) throw InputError("|rho| must be < 1");
  Matrix r(size, size);
  for (Index j = 0; j < size; ++j) {
    for (Index i = 0; i < size; ++i) r(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));
  }
  return r;
}

Matrix mvnormal_sample(const Vector& mean, const Matrix& cov_cholesky, Index count, std::uint64_t seed) {
  const Index dim = mean.size();
  if (cov_cholesky.rows() != dim || cov_cholesky.cols() != dim) throw InputError("Cholesky factor shape mismatch");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix z(dim, count);
  for (Index k = 0; k < count; ++k) {
    for (Index i = 0; i < dim; ++i) z(i, k) = normal(rng);
  }
  Matrix out = cov_cholesky.triangularView<Eigen::Lower>() * z;
  out.colwise() += mean;
  return out;
}

Matrix mvt_sample(const Vector& mean, const Matrix& cov_cholesky, double dof, Index count, std::uint64_t seed) {
  const Index dim = mean.size();
  if (cov_cholesky.rows() != dim || cov_cholesky.cols() != dim) throw InputError("Cholesky factor shape mismatch");
  if (!(dof > 0.0)) throw InputError("degrees of freedom must be > 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::chi_squared_distribution<double> chi2(dof);
  Matrix z(dim, count);
  for (Index k = 0; k < count; ++k) {
    for (Index i = 0; i < dim; ++i) z(i, k) = normal(rng);
    z.col(k) /= std::sqrt(chi2(rng) / dof);
  }
  Matrix out = cov_cholesky.triangularView<Eigen::Lower>() * z;
  out.colwise() += mean;
  return out;
}

SimOutput generate(const SimSpec& spec) {
  spec.validate();
  const Index modalities = static_cast<Index>(spec.dims.size());
  const Index n = spec.cluster_size * kSimClusters;
  const ModalityLayout layout(spec.dims);
  const Index m = layout.total();

  std::vector<Index> informative(static_cast<std::size_t>(modalities));
  std::vector<Index> inf_offset(static_cast<std::size_t>(modalities));
  Index inf_total = 0;
  for (Index r = 0; r < modalities; ++r) {
    informative[static_cast<std::size_t>(r)] = spec.dims[static_cast<std::size_t>(r)] / 5;
    inf_offset[static_cast<std::size_t>(r)] = inf_total;
    inf_total += informative[static_cast<std::size_t>(r)];
  }

  SimOutput out{validate_dataset(Matrix::Zero(m, 2), Mask::Ones(m, 2), layout), {}, {}, {}, {}, {}, {}, false, 0};

  // Means and scales.
  std::mt19937_64 prng(derive_seed(spec.seed, {kParams}));
  std::uniform_real_distribution<double> unif_u(1.0, 2.0);
  std::uniform_real_distribution<double> unif_v(-2.0, -1.0);
  std::uniform_real_distribution<double> unif_scale(0.0, 4.0);
  Vector sigma(inf_total);
  Matrix corr = Matrix::Zero(inf_total, inf_total);
  for (Index r = 0; r < modalities; ++r) {
    const Index q = informative[static_cast<std::size_t>(r)];
    Vector mu(q);
    Vector mv(q);
    for (Index i = 0; i < q; ++i) mu(i) = unif_u(prng);
    for (Index i = 0; i < q; ++i) mv(i) = unif_v(prng);
    out.mean_u.push_back(std::move(mu));
    out.mean_v.push_back(std::move(mv));
    const Index off = inf_offset[static_cast<std::size_t>(r)];
    for (Index i = 0; i < q; ++i) sigma(off + i) = unif_scale(prng);
    corr.block(off, off, q, q) = ar1_correlation(q, spec.rho);
  }

  if (spec.sim_case == SimCase::D) {
    std::mt19937_64 srng(derive_seed(spec.seed, {kSwap}));
    std::vector<std::pair<Index, Index>> within;
    std::vector<std::pair<Index, Index>> across;
    for (Index j = 0; j < inf_total; ++j) {
      for (Index i = 0; i < j; ++i) {
        const bool same = std::upper_bound(inf_offset.begin(), inf_offset.end(), i) ==
                          std::upper_bound(inf_offset.begin(), inf_offset.end(), j);
        (same ? within : across).emplace_back(i, j);
      }
    }
    const std::size_t swaps = std::min(within.size() / 6, across.size());
    std::shuffle(within.begin(), within.end(), srng);
    std::shuffle(across.begin(), across.end(), srng);
    for (std::size_t t = 0; t < swaps; ++t) {
      auto [i, j] = within[t];
      auto [a, b] = across[t];
      std::swap(corr(i, j), corr(a, b));
      corr(j, i) = corr(i, j);
      corr(b, a) = corr(a, b);
    }
  }

  Matrix cov = sigma.asDiagonal() * corr * sigma.asDiagonal();
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    const Vector clipped = eig.eigenvalues().cwiseMax(kEigenFloor);
    cov = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
    cov = 0.5 * (cov + cov.transpose()).eval();
    out.projected = true;
    spdlog::info("informative covariance projected to SPD (minimum eigenvalue {:.3g})", eig.eigenvalues().minCoeff());
    llt.compute(cov);
    if (llt.info() != Eigen::Success) throw NumericalError("covariance degenerate: SPD projection failed");
  }
  const Matrix chol = llt.matrixL();
  out.informative_covariance = cov;

  // Informative features, one draw per cluster.
  Matrix values(m, n);
  std::vector<std::int64_t> truth(static_cast<std::size_t>(n));
  for (int c = 0; c < kSimClusters; ++c) {
    Vector mean(inf_total);
    for (Index r = 0; r < modalities; ++r) {
      const bool use_u = kClusterPattern[static_cast<std::size_t>(c)][static_cast<std::size_t>(r)];
      mean.segment(inf_offset[static_cast<std::size_t>(r)], informative[static_cast<std::size_t>(r)]) =
          use_u ? out.mean_u[static_cast<std::size_t>(r)] : out.mean_v[static_cast<std::size_t>(r)];
    }
    const std::uint64_t seed = derive_seed(spec.seed, {kInformative, static_cast<std::uint64_t>(c)});
    Matrix draw;
    if (spec.sim_case == SimCase::B) {
      // Independent t scale per modality.
      draw.resize(inf_total, spec.cluster_size);
      for (Index r = 0; r < modalities; ++r) {
        const Index off = inf_offset[static_cast<std::size_t>(r)];
        const Index q = informative[static_cast<std::size_t>(r)];
        draw.middleRows(off, q) = mvt_sample(mean.segment(off, q), chol.block(off, off, q, q), 3.0, spec.cluster_size,
                                             derive_seed(seed, {static_cast<std::uint64_t>(r)}));
      }
    } else {
      draw = mvnormal_sample(mean, chol, spec.cluster_size, seed);
    }
    const Index col0 = c * spec.cluster_size;
    for (Index r = 0; r < modalities; ++r) {
      values.block(layout.offset(r), col0, informative[static_cast<std::size_t>(r)], spec.cluster_size) =
          draw.middleRows(inf_offset[static_cast<std::size_t>(r)], informative[static_cast<std::size_t>(r)]);
    }
    for (Index k = 0; k < spec.cluster_size; ++k) truth[static_cast<std::size_t>(col0 + k)] = c;
  }

  // Noisy features.
  std::mt19937_64 nrng(derive_seed(spec.seed, {kNoise}));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::student_t_distribution<double> student(3.0);
  for (Index k = 0; k < n; ++k) {
    for (Index r = 0; r < modalities; ++r) {
      for (Index i = informative[static_cast<std::size_t>(r)]; i < layout.size(r); ++i) {
        values(layout.offset(r) + i, k) = spec.sim_case == SimCase::B ? student(nrng) : normal(nrng);
      }
    }
  }

  // Missingness.
  Mask mask = Mask::Ones(m, n);
  std::mt19937_64 mrng(derive_seed(spec.seed, {kMask}));
  if (spec.sim_case == SimCase::C) {
    out.hidden.resize(n);
    for (Index k = 0; k < n; ++k) {
      const double h = normal(mrng);
      out.hidden(k) = h;
      std::bernoulli_distribution drop(h >= 0.0 ? spec.p : 2.0 * spec.p);
      std::vector<bool> dropped(static_cast<std::size_t>(modalities));
      while (true) {
        bool all = true;
        for (Index r = 0; r < modalities; ++r) {
          dropped[static_cast<std::size_t>(r)] = drop(mrng);
          all = all && dropped[static_cast<std::size_t>(r)];
        }
        if (!all) break;
        ++out.redraws;
      }
      for (Index r = 0; r < modalities; ++r) {
        if (dropped[static_cast<std::size_t>(r)]) mask.block(layout.offset(r), k, layout.size(r), 1).setZero();
      }
    }
    if (out.redraws > 0) spdlog::info("case C: {} samples redrawn after losing every modality", out.redraws);
  } else if (spec.missing_rate > 0.0) {
    std::bernoulli_distribution drop(spec.missing_rate);
    for (Index k = 0; k < n; ++k) {
      for (Index i = 0; i < m; ++i) mask(i, k) = drop(mrng) ? 0 : 1;
    }
  }

  out.complete_values = values;
  out.truth = Partition::from_labels(truth);
  out.dataset = validate_dataset(std::move(values), std::move(mask), layout);
  return out;
}

}  // namespace gpcca
