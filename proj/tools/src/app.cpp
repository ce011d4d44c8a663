#include "gpcca/cli/app.hpp"

#include "gpcca/cli/csv.hpp"
#include "gpcca/cli/model_io.hpp"

#include <gpcca/clustering.hpp>
#include <gpcca/em.hpp>
#include <gpcca/error.hpp>
#include <gpcca/parallel.hpp>
#include <gpcca/random.hpp>
#include <gpcca/selection.hpp>
#include <gpcca/simgen.hpp>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>

namespace gpcca::cli {

namespace fs = std::filesystem;

namespace {

struct Common {
  std::optional<std::uint64_t> seed;
  int threads = 0;
  bool deterministic = false;
  bool verbose = false;
};

struct EmFlags {
  double lambda = 0.5;
  int max_iter = 1000;
  double tol = 1e-6;
  std::string init = "random";
  std::string m_step = "conditional";
};

void add_common(CLI::App* cmd, Common& c, bool seeded) {
  if (seeded) cmd->add_option("--seed", c.seed, "Random seed (drawn from entropy and printed when omitted)");
  cmd->add_option("--threads", c.threads, "Worker threads (default: GPCCA_THREADS or all cores)");
  cmd->add_flag("--deterministic", c.deterministic, "Ordered reductions (always on; accepted for scripts)");
  cmd->add_flag("-v,--verbose", c.verbose, "Progress logging on stderr");
}

void add_em(CLI::App* cmd, EmFlags& f) {
  cmd->add_option("--lambda", f.lambda, "Ridge parameter in (0, 1]")->capture_default_str();
  cmd->add_option("--max-iter", f.max_iter, "EM iteration cap")->capture_default_str();
  cmd->add_option("--tol", f.tol, "Relative log-likelihood tolerance")->capture_default_str();
  cmd->add_option("--init", f.init, "Initialization: random or svd")->capture_default_str();
  cmd->add_option("--m-step", f.m_step, "M-step ordering: conditional or literal")->capture_default_str();
}

std::uint64_t resolve_seed(const Common& c, std::ostream& err) {
  if (c.seed) return *c.seed;
  std::random_device rd;
  const std::uint64_t seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  err << "seed: " << seed << '\n';
  return seed;
}

int resolve_threads(const Common& c) { return c.threads > 0 ? c.threads : default_thread_count(); }

EmConfig make_em_config(const EmFlags& f, std::uint64_t seed, int threads) {
  EmConfig cfg;
  cfg.ridge_lambda = f.lambda;
  cfg.max_iterations = f.max_iter;
  cfg.rel_tolerance = f.tol;
  cfg.seed = seed;
  cfg.threads = threads;
  if (f.init == "random") {
    cfg.init_strategy = InitStrategy::RandomOrthonormal;
  } else if (f.init == "svd") {
    cfg.init_strategy = InitStrategy::MeanImputedSvd;
  } else {
    throw InputError("--init must be random or svd");
  }
  if (f.m_step == "conditional") {
    cfg.m_step_order = MStepOrder::Conditional;
  } else if (f.m_step == "literal") {
    cfg.m_step_order = MStepOrder::Literal;
  } else {
    throw InputError("--m-step must be conditional or literal");
  }
  cfg.validate();
  return cfg;
}

nlohmann::json em_settings(const EmFlags& f, std::uint64_t seed) {
  return {{"seed", seed},
          {"init", f.init},
          {"m_step_order", f.m_step},
          {"rel_tolerance", f.tol},
          {"max_iterations", f.max_iter}};
}

std::vector<fs::path> to_paths(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

void check_layout(const ModelParams& params, const MultiModalInput& input) {
  const auto& model = params.layout().sizes();
  const auto& data = input.dataset.layout().sizes();
  if (model != data) {
    auto show = [](const std::vector<Index>& s) {
      std::string out = "[";
      for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
      return out + "]";
    };
    throw InputError("layout mismatch: model has modality sizes " + show(model) + " but data has " + show(data));
  }
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

// fit ------------------------------------------------------------------------

struct FitArgs {
  Common common;
  EmFlags em;
  std::vector<std::string> modalities;
  Index d = 0;
  std::string init_model;
  std::string out;
};

int cmd_fit(const FitArgs& a, std::ostream& out, std::ostream& err) {
  if (a.d < 1) throw InputError("d must be ≥ 1");
  const std::uint64_t seed = resolve_seed(a.common, err);
  const EmConfig cfg = make_em_config(a.em, seed, resolve_threads(a.common));
  const MultiModalInput input = load_modalities(to_paths(a.modalities));
  nlohmann::json settings = em_settings(a.em, seed);
  FitReport report = [&] {
    if (!a.init_model.empty()) {
      const SavedModel start = read_model(a.init_model);
      check_layout(start.params, input);
      if (start.params.latent_dim() != a.d) {
        throw InputError("--d " + std::to_string(a.d) + " does not match the warm-start model (d = " +
                         std::to_string(start.params.latent_dim()) + ")");
      }
      settings["init"] = "warm";
      settings["init_model"] = a.init_model;
      return input.dataset.complete() ? fit_complete_from(input.dataset, start.params, cfg)
                                      : fit_from(input.dataset, start.params, cfg);
    }
    return fit_auto(input.dataset, a.d, cfg);
  }();
  write_model(a.out, report, input, settings);
  out << "iterations: " << report.iterations << '\n'
      << "converged: " << (report.converged ? "yes" : "no") << '\n'
      << "loglik: " << format_number(report.loglik_trace.back()) << '\n';
  if (!report.converged) {
    err << "warning: EM did not converge within " << a.em.max_iter << " iterations\n";
    return kNotConverged;
  }
  return kOk;
}

// select-d -------------------------------------------------------------------

struct SelectArgs {
  Common common;
  EmFlags em;
  std::vector<std::string> modalities;
  std::vector<Index> candidates{2, 3, 4, 6, 8, 10};
  int inits = 10;
  Index neighbors = 20;
  double resolution = 0.8;
  std::string out;
};

int cmd_select(const SelectArgs& a, std::ostream& out, std::ostream& err) {
  if (a.inits < 2) throw InputError("B ≥ 2 required");
  const std::uint64_t seed = resolve_seed(a.common, err);
  const int threads = resolve_threads(a.common);
  SelectionConfig sc;
  sc.candidates = a.candidates;
  sc.inits = a.inits;
  sc.em = make_em_config(a.em, seed, 1);
  sc.cluster.neighbors = a.neighbors;
  sc.cluster.resolution = a.resolution;
  sc.cluster.seed = seed;
  sc.threads = threads;
  const MultiModalInput input = load_modalities(to_paths(a.modalities));
  const SelectionResult res = select_latent_dim(input.dataset, sc);

  const fs::path dir(a.out);
  fs::create_directories(dir);
  const auto rows = static_cast<Index>(res.candidates.size());
  Matrix table(rows, 6);
  Mask mask = Mask::Ones(rows, 6);
  nlohmann::json cands = nlohmann::json::array();
  for (Index t = 0; t < rows; ++t) {
    const auto& c = res.candidates[static_cast<std::size_t>(t)];
    table(t, 0) = static_cast<double>(c.d);
    table(t, 1) = c.score;
    table(t, 2) = static_cast<double>(c.succeeded.size());
    table(t, 3) = static_cast<double>(c.failures.size());
    table(t, 4) = c.disqualified ? 1.0 : 0.0;
    table(t, 5) = static_cast<double>(c.best_init);
    if (c.disqualified) {
      mask(t, 1) = 0;
      mask(t, 5) = 0;
    }
    cands.push_back({{"d", c.d},
                     {"score", c.disqualified ? nlohmann::json(nullptr) : nlohmann::json(c.score)},
                     {"failures", c.failures},
                     {"disqualified", c.disqualified}});
  }
  write_table(dir / "scores.csv", {}, "", {"d", "score", "succeeded", "failed", "disqualified", "best_init"}, table, &mask);

  const auto& winner = res.winner();
  std::size_t col = 0;
  while (winner.succeeded[col] != res.chosen_init) ++col;
  std::vector<Index> labels(static_cast<std::size_t>(input.dataset.samples()));
  std::vector<std::int64_t> raw(labels.size());
  for (std::size_t k = 0; k < labels.size(); ++k) raw[k] = winner.labels(static_cast<Index>(k), static_cast<Index>(col));
  write_labels(dir / "clusters.csv", input.sample_ids, Partition::from_labels(raw).labels);

  nlohmann::json settings = em_settings(a.em, derive_seed(seed, {static_cast<std::uint64_t>(res.chosen_init)}));
  settings["selection_seed"] = seed;
  write_model(dir / "model", res.best_fit(), input, settings);
  write_json(dir / "selection.json", {{"chosen_d", res.chosen_d},
                                      {"chosen_init", res.chosen_init},
                                      {"inits", a.inits},
                                      {"seed", seed},
                                      {"neighbors", a.neighbors},
                                      {"resolution", a.resolution},
                                      {"candidates", cands}});
  out << "chosen d: " << res.chosen_d << '\n' << "chosen init: " << res.chosen_init << '\n';
  if (!res.best_fit().converged) err << "warning: the chosen fit did not converge within " << a.em.max_iter << " iterations\n";
  return kOk;
}

// transform / impute ---------------------------------------------------------

struct ApplyArgs {
  Common common;
  std::string model;
  std::vector<std::string> modalities;
  std::string out;
};

int cmd_transform(const ApplyArgs& a, std::ostream& out) {
  const SavedModel model = read_model(a.model);
  const MultiModalInput input = load_modalities(to_paths(a.modalities));
  check_layout(model.params, input);
  write_embeddings(a.out, transform(model.params, input.dataset, resolve_threads(a.common)), input.sample_ids);
  out << "wrote " << a.out << '\n';
  return kOk;
}

int cmd_impute(const ApplyArgs& a, std::ostream& out) {
  const SavedModel model = read_model(a.model);
  const MultiModalInput input = load_modalities(to_paths(a.modalities));
  check_layout(model.params, input);
  const Matrix completed = impute(model.params, input.dataset, resolve_threads(a.common));
  const fs::path dir(a.out);
  fs::create_directories(dir);
  const auto& layout = input.dataset.layout();
  for (Index r = 0; r < layout.blocks(); ++r) {
    const auto ri = static_cast<std::size_t>(r);
    const fs::path path = dir / (input.names[ri] + ".csv");
    write_table(path, input.sample_ids, "sample", input.features[ri],
                completed.middleRows(layout.offset(r), layout.size(r)).transpose());
    out << "wrote " << path.string() << '\n';
  }
  return kOk;
}

// simulate -------------------------------------------------------------------

struct SimArgs {
  Common common;
  std::string sim_case = "A";
  double rho = 0.7;
  std::optional<double> missing;
  std::optional<double> p;
  std::vector<Index> dims{60, 120, 180};
  Index cluster_size = 100;
  std::string out;
};

int cmd_simulate(const SimArgs& a, std::ostream& out, std::ostream& err) {
  SimSpec spec;
  spec.sim_case = parse_sim_case(a.sim_case);
  if (spec.sim_case == SimCase::C) {
    if (a.missing) throw InputError("Case C takes --p");
    spec.p = a.p.value_or(0.1);
  } else {
    if (a.p) throw InputError(std::string("Case ") + sim_case_name(spec.sim_case) + " takes --missing");
    spec.missing_rate = a.missing.value_or(0.0);
  }
  spec.rho = a.rho;
  spec.dims = a.dims;
  spec.cluster_size = a.cluster_size;
  spec.validate();
  spec.seed = resolve_seed(a.common, err);
  const SimOutput sim = generate(spec);

  const fs::path dir(a.out);
  fs::create_directories(dir);
  const auto& data = sim.dataset;
  const auto& layout = data.layout();
  std::vector<std::string> ids;
  for (Index k = 0; k < data.samples(); ++k) ids.push_back("s" + std::to_string(k + 1));
  nlohmann::json files = nlohmann::json::array();
  for (Index r = 0; r < layout.blocks(); ++r) {
    std::vector<std::string> cols;
    for (Index i = 0; i < layout.size(r); ++i) cols.push_back("f" + std::to_string(i + 1));
    const std::string name = "modality" + std::to_string(r + 1) + ".csv";
    const Mask mask = data.block_mask(r).transpose();
    write_table(dir / name, ids, "sample", cols, data.block_values(r).transpose(), &mask);
    files.push_back(name);
  }
  write_labels(dir / "truth.csv", ids, sim.truth.labels);
  nlohmann::json manifest = {{"case", std::string(1, sim_case_name(spec.sim_case))},
                             {"rho", spec.rho},
                             {"dims", spec.dims},
                             {"cluster_size", spec.cluster_size},
                             {"seed", spec.seed},
                             {"modalities", files},
                             {"truth", "truth.csv"}};
  if (spec.sim_case == SimCase::C) {
    manifest["p"] = spec.p;
    manifest["hidden"] = "hidden.csv";
    manifest["redraws"] = sim.redraws;
    write_table(dir / "hidden.csv", ids, "sample", {"H"}, sim.hidden);
  } else {
    manifest["missing_rate"] = spec.missing_rate;
  }
  if (spec.sim_case == SimCase::D) manifest["spd_projected"] = sim.projected;
  write_json(dir / "simulation.json", manifest);
  out << "wrote " << layout.blocks() << " modalities and truth.csv to " << dir.string() << '\n';
  return kOk;
}

// cluster / evaluate ---------------------------------------------------------

struct ClusterArgs {
  Common common;
  std::string embeddings;
  Index neighbors = 20;
  double resolution = 0.8;
  std::string out;
};

int cmd_cluster(const ClusterArgs& a, std::ostream& out, std::ostream& err) {
  const Table t = read_table(a.embeddings);
  if ((t.mask.array() == 0).any()) throw InputError(t.source + ": embeddings contain missing entries");
  ClusterOptions opts;
  opts.neighbors = a.neighbors;
  opts.resolution = a.resolution;
  opts.seed = resolve_seed(a.common, err);
  opts.threads = resolve_threads(a.common);
  const Partition p = cluster_embedding(t.values.transpose(), opts);
  write_labels(a.out, t.ids, p.labels);
  out << "clusters: " << p.clusters << '\n';
  return kOk;
}

struct EvaluateArgs {
  std::string pred;
  std::string truth;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const LabelFile pred = read_labels(a.pred);
  const LabelFile truth = read_labels(a.truth);
  std::map<std::string, std::int64_t> by_id;
  for (std::size_t k = 0; k < truth.ids.size(); ++k) by_id.emplace(truth.ids[k], truth.labels[k]);
  std::vector<std::int64_t> pa;
  std::vector<std::int64_t> pb;
  std::size_t unmatched = 0;
  for (std::size_t k = 0; k < pred.ids.size(); ++k) {
    const auto it = by_id.find(pred.ids[k]);
    if (it == by_id.end()) {
      ++unmatched;
      continue;
    }
    pa.push_back(pred.labels[k]);
    pb.push_back(it->second);
  }
  if (pa.empty()) throw InputError("no sample IDs shared between " + a.pred + " and " + a.truth);
  if (unmatched > 0 || pa.size() != truth.ids.size()) {
    throw InputError("sample IDs differ between " + a.pred + " and " + a.truth + " (" + std::to_string(pa.size()) +
                     " shared, " + std::to_string(pred.ids.size()) + " and " + std::to_string(truth.ids.size()) +
                     " total)");
  }
  const double ari = adjusted_rand_index(Partition::from_labels(pa), Partition::from_labels(pb));
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", ari);
  out << buf << '\n';
  return kOk;
}

std::shared_ptr<spdlog::logger> stderr_logger() {
  if (auto existing = spdlog::get("gpcca")) return existing;
  return spdlog::stderr_logger_mt("gpcca");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Generalized probabilistic CCA: multi-modal latent factors with missing data", "gpcca"};
  app.require_subcommand(1);

  FitArgs fit_args;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a model with a fixed latent dimension");
  fit_cmd->add_option("--modality", fit_args.modalities, "Modality CSV (repeat per modality)")->required();
  fit_cmd->add_option("--d", fit_args.d, "Latent dimension")->required();
  fit_cmd->add_option("--init-model", fit_args.init_model, "Warm start from a saved model directory");
  fit_cmd->add_option("--out", fit_args.out, "Output model directory")->required();
  add_em(fit_cmd, fit_args.em);
  add_common(fit_cmd, fit_args.common, true);

  SelectArgs sel_args;
  auto* sel_cmd = app.add_subcommand("select-d", "Choose the latent dimension by consensus clustering");
  sel_cmd->add_option("--modality", sel_args.modalities, "Modality CSV (repeat per modality)")->required();
  sel_cmd->add_option("--candidates", sel_args.candidates, "Candidate dimensions")->delimiter(',')->capture_default_str();
  sel_cmd->add_option("--inits", sel_args.inits, "Initializations per candidate (B)")->capture_default_str();
  sel_cmd->add_option("--neighbors", sel_args.neighbors, "kNN graph neighbours")->capture_default_str();
  sel_cmd->add_option("--resolution", sel_args.resolution, "Louvain resolution")->capture_default_str();
  sel_cmd->add_option("--out", sel_args.out, "Output directory")->required();
  add_em(sel_cmd, sel_args.em);
  add_common(sel_cmd, sel_args.common, true);

  ApplyArgs tr_args;
  auto* tr_cmd = app.add_subcommand("transform", "Posterior-mean embeddings under a saved model");
  tr_cmd->add_option("--model", tr_args.model, "Model directory")->required();
  tr_cmd->add_option("--modality", tr_args.modalities, "Modality CSV (repeat per modality)")->required();
  tr_cmd->add_option("--out", tr_args.out, "Output embeddings CSV")->required();
  add_common(tr_cmd, tr_args.common, false);

  ApplyArgs im_args;
  auto* im_cmd = app.add_subcommand("impute", "Fill missing entries with their conditional expectation");
  im_cmd->add_option("--model", im_args.model, "Model directory")->required();
  im_cmd->add_option("--modality", im_args.modalities, "Modality CSV (repeat per modality)")->required();
  im_cmd->add_option("--out", im_args.out, "Output directory")->required();
  add_common(im_cmd, im_args.common, false);

  SimArgs sim_args;
  auto* sim_cmd = app.add_subcommand("simulate", "Generate a six-cluster, three-modality synthetic dataset");
  sim_cmd->add_option("--case", sim_args.sim_case, "A, B, C or D")->capture_default_str();
  sim_cmd->add_option("--rho", sim_args.rho, "AR(1) correlation")->capture_default_str();
  sim_cmd->add_option("--missing", sim_args.missing, "Entry-wise MCAR rate (cases A, B, D)");
  sim_cmd->add_option("--p", sim_args.p, "Baseline modality-drop probability (case C, default 0.1)");
  sim_cmd->add_option("--dims", sim_args.dims, "Modality sizes")->delimiter(',')->capture_default_str();
  sim_cmd->add_option("--cluster-size", sim_args.cluster_size, "Samples per cluster")->capture_default_str();
  sim_cmd->add_option("--out", sim_args.out, "Output directory")->required();
  add_common(sim_cmd, sim_args.common, true);

  ClusterArgs cl_args;
  auto* cl_cmd = app.add_subcommand("cluster", "Louvain clustering of an embedding CSV");
  cl_cmd->add_option("--embeddings", cl_args.embeddings, "Embeddings CSV (samples as rows)")->required();
  cl_cmd->add_option("--neighbors", cl_args.neighbors, "kNN graph neighbours")->capture_default_str();
  cl_cmd->add_option("--resolution", cl_args.resolution, "Louvain resolution")->capture_default_str();
  cl_cmd->add_option("--out", cl_args.out, "Output labels CSV")->required();
  add_common(cl_cmd, cl_args.common, true);

  EvaluateArgs ev_args;
  auto* ev_cmd = app.add_subcommand("evaluate", "Adjusted Rand index between two label files");
  ev_cmd->add_option("--pred", ev_args.pred, "Predicted labels CSV")->required();
  ev_cmd->add_option("--truth", ev_args.truth, "Reference labels CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }

  auto logger = stderr_logger();
  spdlog::set_default_logger(logger);
  const bool verbose = fit_args.common.verbose || sel_args.common.verbose || tr_args.common.verbose ||
                       im_args.common.verbose || sim_args.common.verbose || cl_args.common.verbose;
  spdlog::set_level(verbose ? spdlog::level::info : spdlog::level::warn);

  try {
    if (app.got_subcommand(fit_cmd)) return cmd_fit(fit_args, out, err);
    if (app.got_subcommand(sel_cmd)) return cmd_select(sel_args, out, err);
    if (app.got_subcommand(tr_cmd)) return cmd_transform(tr_args, out);
    if (app.got_subcommand(im_cmd)) return cmd_impute(im_args, out);
    if (app.got_subcommand(sim_cmd)) return cmd_simulate(sim_args, out, err);
    if (app.got_subcommand(cl_cmd)) return cmd_cluster(cl_args, out, err);
    if (app.got_subcommand(ev_cmd)) return cmd_evaluate(ev_args, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  return kInputError;
}

}  // namespace gpcca::cli
