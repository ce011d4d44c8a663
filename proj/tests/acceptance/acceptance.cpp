#include "../support.hpp"

#include <gpcca/clustering.hpp>
#include <gpcca/em.hpp>
#include <gpcca/error.hpp>
#include <gpcca/regularization.hpp>
#include <gpcca/selection.hpp>
#include <gpcca/simgen.hpp>

#include <Eigen/Eigenvalues>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace gpcca::acceptance {
namespace {

using test::max_abs_diff;

enum class Status { Pass, Fail, Skip };

struct Outcome {
  Status status;
  std::string detail;
};

constexpr int kSkipCode = 77;

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

int env_int(const char* name, int fallback) {
  const char* v = std::getenv(name);
  return v ? std::atoi(v) : fallback;
}

// 1. Monotone penalized log-likelihood trace.
Outcome monotonicity() {
  test::Rng rng(20240601);
  const double lambdas[] = {0.5, 2.0 / 3.0, 1.0};
  const double rates[] = {0.0, 0.2, 0.4};
  int failing = 0;
  int failing_by_lambda[3] = {0, 0, 0};
  int degenerate = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Index n = 20 + static_cast<Index>(rng() % 181);
    const Index r_count = 2 + static_cast<Index>(rng() % 2);
    const Index m = std::max<Index>(6, 3 * r_count) + static_cast<Index>(rng() % (61 - std::max<Index>(6, 3 * r_count)));
    std::vector<Index> sizes(static_cast<std::size_t>(r_count), m / r_count);
    sizes.back() += m % r_count;
    const ModalityLayout layout(sizes);
    const Index d = 1 + static_cast<Index>(rng() % std::min<Index>(3, layout.min_size()));
    const int li = trial % 3;
    const double missing = rates[(trial / 3) % 3];
    const auto truth = test::random_params(layout, d, rng);
    const auto data = test::model_dataset(truth, n, missing, rng);
    EmConfig cfg;
    cfg.ridge_lambda = lambdas[li];
    cfg.seed = static_cast<std::uint64_t>(trial);
    cfg.max_iterations = 300;
    std::optional<FitReport> fitted;
    try {
      fitted.emplace(fit(data, d, cfg));
    } catch (const NumericalError& e) {
      spdlog::warn("trial {} (n={}, m={}, lambda={}): {}", trial, n, m, lambdas[li], e.what());
      ++degenerate;
      ++failing;
      ++failing_by_lambda[li];
      continue;
    }
    const auto& report = *fitted;
    bool bad = false;
    for (std::size_t t = 1; t < report.loglik_trace.size(); ++t) {
      const double prev = report.loglik_trace[t - 1];
      const double drop = (prev - report.loglik_trace[t]) / std::abs(prev);
      if (drop > 1e-8) {
        bad = true;
        worst = std::max(worst, drop);
      }
    }
    failing += bad;
    failing_by_lambda[li] += bad;
  }
  std::string detail = std::to_string(failing) + "/50 traces decrease (lambda 1/2: " +
                       std::to_string(failing_by_lambda[0]) + ", 2/3: " + std::to_string(failing_by_lambda[1]) +
                       ", 1: " + std::to_string(failing_by_lambda[2]) + "); " + std::to_string(degenerate) +
                       " stopped on a degenerate block; worst relative drop " + fmt(worst);
  return {failing == 0 ? Status::Pass : Status::Fail, detail};
}

// 2. Per-sample expectations against direct Gaussian conditioning.
Outcome estep_oracle() {
  test::Rng rng(7);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Index m = 2 + static_cast<Index>(rng() % 7);
    const Index m1 = 1 + static_cast<Index>(rng() % (m - 1));
    const ModalityLayout layout({m1, m - m1});
    const Index d = 1 + static_cast<Index>(rng() % std::min<Index>(3, layout.min_size()));
    const auto p = test::random_params(layout, d, rng, trial % 2 ? 1.0 : 0.5);
    const auto data = validate_dataset(test::gaussian(m, 5, rng), test::random_mask(m, 5, 0.4, rng), layout);
    const auto res = e_step(data, p);
    double ll = 0.0;
    for (Index k = 0; k < 5; ++k) {
      const auto o = test::dense_condition(p, data.values().col(k), data.mask().col(k));
      const Matrix s = o.second_moment();
      ll += o.log_density;
      worst = std::max({worst, max_abs_diff(res.buffers.posterior_means.col(k), o.mean.tail(d)),
                        max_abs_diff(res.buffers.completed.col(k), o.mean.head(m)),
                        max_abs_diff(res.buffers.second_moment_z(k), s.bottomRightCorner(d, d)),
                        max_abs_diff(res.buffers.cross_moment(k), s.topRightCorner(m, d)),
                        max_abs_diff(res.buffers.second_moment_x(k), s.topLeftCorner(m, m))});
    }
    worst = std::max(worst, std::abs(res.loglik.observed - ll));
  }
  return {worst <= 1e-10 ? Status::Pass : Status::Fail, "max abs error " + fmt(worst) + " over 200 instances"};
}

// 3. Complete-data path equals the general path.
Outcome complete_path() {
  test::Rng rng(11);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const ModalityLayout layout({3 + static_cast<Index>(rng() % 6), 3 + static_cast<Index>(rng() % 6)});
    const auto truth = test::random_params(layout, 2, rng);
    const auto data = test::model_dataset(truth, 40 + static_cast<Index>(rng() % 60), 0.0, rng);
    EmConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(trial);
    cfg.ridge_lambda = trial % 2 ? 1.0 : 2.0 / 3.0;
    cfg.max_iterations = 200;
    const auto a = fit(data, 2, cfg);
    const auto b = fit_complete(data, 2, cfg);
    worst = std::max({worst, max_abs_diff(a.final_params.loadings(), b.final_params.loadings()),
                      max_abs_diff(a.final_params.means(), b.final_params.means()),
                      max_abs_diff(a.final_params.psi().dense(), b.final_params.psi().dense())});
  }
  return {worst <= 1e-10 ? Status::Pass : Status::Fail, "max parameter difference " + fmt(worst)};
}

// 4. Ridge in covariance space equals ridge in correlation space.
Outcome ridge_identities() {
  test::Rng rng(13);
  double worst = 0.0;
  bool floor_ok = true;
  for (int trial = 0; trial < 100; ++trial) {
    const Index size = 1 + static_cast<Index>(rng() % 8);
    const double lambda = test::uniform(0.05, 1.0, rng);
    const BlockSpd psi(BlockLayout({size}), {test::random_spd(size, rng)});
    const auto split = correlation_decompose(psi);
    const Vector s = split.variances.cwiseSqrt();
    const Matrix via_corr = s.asDiagonal() * ridge_correlation(split.correlation.block(0), lambda) * s.asDiagonal() / lambda;
    const Matrix via_cov = ridge_covariance(psi, lambda).block(0);
    const Matrix conj = s.asDiagonal() *
                        (split.correlation.block(0) + (1.0 / lambda - 1.0) * Matrix::Identity(size, size)) *
                        s.asDiagonal();
    worst = std::max({worst, max_abs_diff(via_corr, via_cov), max_abs_diff(conj, via_cov)});
    const Vector before = Eigen::SelfAdjointEigenSolver<Matrix>(psi.block(0)).eigenvalues();
    const Vector after = Eigen::SelfAdjointEigenSolver<Matrix>(via_cov).eigenvalues();
    const double shift = (1.0 / lambda - 1.0) * psi.block(0).diagonal().minCoeff();
    floor_ok = floor_ok && ((after - before).array() >= shift - 1e-12).all();
  }
  const bool ok = worst <= 1e-12 && floor_ok;
  return {ok ? Status::Pass : Status::Fail,
          "max path difference " + fmt(worst) + "; eigenvalue floor " + (floor_ok ? "holds" : "violated")};
}

// 5. Consensus scoring on hand-computed and brute-force cases.
Outcome consensus() {
  LabelMatrix l(3, 2);
  l << 1, 1, 1, 2, 2, 2;
  const Matrix c = consensus_matrix(l);
  const double h = consensus_score(c);
  const std::vector<Index> first{0, 0, 1};
  const double rmse = init_rmse(connectivity_matrix(first), c);
  bool ok = h == -1.0 && rmse == std::sqrt(1.0 / 6.0);

  test::Rng rng(17);
  int mismatches = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const Index n = 4 + static_cast<Index>(rng() % 12);
    const Index b = 2 + static_cast<Index>(rng() % 4);
    LabelMatrix labels(n, b);
    for (Index i = 0; i < n; ++i) labels(i, 0) = static_cast<std::int64_t>(rng() % 3);
    for (Index col = 1; col < b; ++col) {
      for (Index i = 0; i < n; ++i) {
        labels(i, col) = trial % 2 ? static_cast<std::int64_t>(rng() % 3) : 5 * labels(i, 0) + col;
      }
    }
    bool same = true;
    for (Index col = 1; col < b && same; ++col) {
      for (Index i = 0; i < n && same; ++i) {
        for (Index j = i + 1; j < n && same; ++j) {
          same = (labels(i, 0) == labels(j, 0)) == (labels(i, col) == labels(j, col));
        }
      }
    }
    mismatches += (consensus_score(consensus_matrix(labels)) == 0.0) != same;
  }
  ok = ok && mismatches == 0;
  return {ok ? Status::Pass : Status::Fail, "H = " + fmt(h, 17) + ", RMSE = " + fmt(rmse, 17) + ", " +
                                                std::to_string(mismatches) + "/50 H=0 mismatches"};
}

double selected_ari(const ObservedDataset& data, const Partition& truth, SelectionConfig cfg, Index& chosen_d) {
  const auto res = select_latent_dim(data, cfg);
  const auto& w = res.winner();
  chosen_d = res.chosen_d;
  for (std::size_t t = 0; t < w.succeeded.size(); ++t) {
    if (w.succeeded[t] != res.chosen_init) continue;
    std::vector<std::int64_t> raw(static_cast<std::size_t>(w.labels.rows()));
    for (Index i = 0; i < w.labels.rows(); ++i) raw[static_cast<std::size_t>(i)] = w.labels(i, static_cast<Index>(t));
    return adjusted_rand_index(Partition::from_labels(raw), truth);
  }
  return 0.0;
}

Outcome simulation(SimCase sim_case, double lambda, double target) {
  const int inits = env_int("GPCCA_ACCEPTANCE_INITS", 3);
  std::string detail = "B = " + std::to_string(inits) + ";";
  double total = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SimSpec spec;
    spec.sim_case = sim_case;
    spec.rho = 0.7;
    if (sim_case == SimCase::C) {
      spec.p = 0.1;
    } else {
      spec.missing_rate = 0.2;
    }
    spec.seed = seed;
    const auto sim = generate(spec);
    SelectionConfig cfg;
    cfg.inits = inits;
    cfg.em.ridge_lambda = lambda;
    cfg.em.seed = seed;
    cfg.cluster.seed = seed;
    cfg.threads = 0;
    Index d = 0;
    const double ari = selected_ari(sim.dataset, sim.truth, cfg, d);
    total += ari;
    detail += " seed " + std::to_string(seed) + ": d=" + std::to_string(d) + " ARI " + fmt(ari) + ";";
  }
  const double mean = total / 5.0;
  detail += " mean ARI " + fmt(mean) + " (target >= " + fmt(target) + ")";
  return {mean >= target ? Status::Pass : Status::Fail, detail};
}

Outcome case_a() { return simulation(SimCase::A, 2.0 / 3.0, 0.75); }
Outcome case_c() { return simulation(SimCase::C, 0.5, 0.60); }

/// Reads one mfeat view: header row, features, label in the last column.
bool read_view(const std::filesystem::path& path, Matrix& values, std::vector<std::int64_t>& labels) {
  std::ifstream in(path);
  if (!in) return false;
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  labels.clear();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    labels.push_back(static_cast<std::int64_t>(row.back()));
    row.pop_back();
    rows.push_back(std::move(row));
  }
  values.resize(static_cast<Index>(rows.front().size()), static_cast<Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    for (std::size_t i = 0; i < rows[k].size(); ++i) values(static_cast<Index>(i), static_cast<Index>(k)) = rows[k][i];
  }
  // standardize each feature
  for (Index i = 0; i < values.rows(); ++i) {
    const double mean = values.row(i).mean();
    const double sd = std::sqrt((values.row(i).array() - mean).square().mean());
    values.row(i) = (values.row(i).array() - mean) / (sd > 0 ? sd : 1.0);
  }
  return true;
}

Outcome digits() {
  const char* env = std::getenv("GPCCA_MFEAT_DIR");
  const std::filesystem::path dir = env ? env : GPCCA_SOURCE_DIR "/data/mfeat";
  std::vector<Matrix> blocks;
  std::vector<Mask> masks;
  std::vector<std::int64_t> labels;
  for (const char* view : {"fou", "fac", "kar", "zer"}) {
    Matrix v;
    std::vector<std::int64_t> l;
    if (!read_view(dir / ("mfeat-" + std::string(view) + ".csv"), v, l)) {
      return {Status::Skip, "dataset not found in " + dir.string() + " (run tools/fetch_mfeat.sh)"};
    }
    if (!labels.empty() && l != labels) return {Status::Fail, "label columns differ between views"};
    labels = l;
    masks.push_back(full_mask(v.rows(), v.cols()));
    blocks.push_back(std::move(v));
  }
  const auto data = stack_modalities(blocks, masks);
  SelectionConfig cfg;
  cfg.candidates = {5, 10, 15, 20, 25, 30};
  cfg.inits = env_int("GPCCA_ACCEPTANCE_INITS", 3);
  cfg.em.ridge_lambda = 0.5;
  cfg.em.seed = 1;
  cfg.cluster.seed = 1;
  cfg.threads = 0;
  Index d = 0;
  const double ari = selected_ari(data, Partition::from_labels(labels), cfg, d);
  return {ari >= 0.80 ? Status::Pass : Status::Fail, "B = " + std::to_string(cfg.inits) + "; d=" + std::to_string(d) +
                                                         " ARI " + fmt(ari) + " (target >= 0.8)"};
}

// 9. Contract examples, exercised by the unit-test binary.
Outcome contracts() {
  const std::string cmd = std::string("\"") + GPCCA_UNIT_TESTS + "\" --gtest_brief=1 > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return {rc == 0 ? Status::Pass : Status::Fail, rc == 0 ? "unit suite passed" : "unit suite failed"};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace gpcca::acceptance

int main(int argc, char** argv) {
  using namespace gpcca::acceptance;
  spdlog::set_level(spdlog::level::warn);
  const std::vector<Criterion> all{
      {1, "EM monotonicity", monotonicity},      {2, "E-step oracle", estep_oracle},
      {3, "complete-path consistency", complete_path}, {4, "ridge identities", ridge_identities},
      {5, "consensus machinery", consensus},     {6, "simulation Case A", case_a},
      {7, "simulation Case C", case_c},          {8, "multi-view digits", digits},
      {9, "contract suite", contracts},
  };
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
  bool failed = false;
  bool skipped = false;
  for (const auto& c : all) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o{Status::Fail, ""};
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {Status::Fail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const char* tag = o.status == Status::Pass ? "PASS" : o.status == Status::Fail ? "FAIL" : "SKIP";
    std::printf("criterion %d (%s): %s  %s  [%.1f s]\n", c.id, c.name, tag, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed = failed || o.status == Status::Fail;
    skipped = skipped || o.status == Status::Skip;
  }
  if (failed) return 1;
  return skipped && wanted.size() == 1 ? kSkipCode : 0;
}
