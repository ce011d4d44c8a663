#include "gpcca/cli/model_io.hpp"

#include "gpcca/cli/csv.hpp"

#include <gpcca/error.hpp>

#include <fstream>

namespace gpcca::cli {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> latent_columns(Index d) {
  std::vector<std::string> out;
  for (Index j = 0; j < d; ++j) out.push_back("z" + std::to_string(j + 1));
  return out;
}

std::vector<std::string> qualified_features(const MultiModalInput& input) {
  std::vector<std::string> out;
  for (std::size_t r = 0; r < input.names.size(); ++r) {
    for (const auto& f : input.features[r]) out.push_back(input.names[r] + ":" + f);
  }
  return out;
}

Matrix read_numeric(const fs::path& path, Index rows, Index cols) {
  const Table t = read_table(path);
  if (t.rows() != rows || t.cols() != cols) {
    throw InputError(path.string() + ": expected " + std::to_string(rows) + "x" + std::to_string(cols) + ", got " +
                     std::to_string(t.rows()) + "x" + std::to_string(t.cols()));
  }
  if ((t.mask.array() == 0).any()) throw InputError(path.string() + ": missing entries in model file");
  return t.values;
}

}  // namespace

MultiModalInput load_modalities(const std::vector<fs::path>& paths) {
  if (paths.size() < 2) throw InputError("R ≥ 2 required: pass one --modality per data file");
  std::vector<Table> tables;
  for (const auto& p : paths) tables.push_back(read_table(p));
  const Table& ref = tables.front();
  for (std::size_t r = 1; r < tables.size(); ++r) {
    const Table& t = tables[r];
    if (t.rows() != ref.rows()) {
      throw InputError("sample count mismatch: " + ref.source + " has " + std::to_string(ref.rows()) + " rows but " +
                       t.source + " has " + std::to_string(t.rows()));
    }
    if (ref.has_ids() && t.has_ids() && t.ids != ref.ids) {
      throw InputError("sample IDs differ between " + ref.source + " and " + t.source);
    }
  }

  MultiModalInput input{{}, {}, {}, validate_dataset(Matrix::Zero(2, 2), Mask::Ones(2, 2), ModalityLayout({1, 1}))};
  std::vector<Index> sizes;
  for (std::size_t r = 0; r < tables.size(); ++r) {
    input.names.push_back(paths[r].stem().string());
    input.features.push_back(tables[r].columns);
    sizes.push_back(tables[r].cols());
  }
  for (const auto& t : tables) {
    if (t.has_ids()) {
      input.sample_ids = t.ids;
      break;
    }
  }
  if (input.sample_ids.empty()) {
    for (Index k = 0; k < ref.rows(); ++k) input.sample_ids.push_back(std::to_string(k + 1));
  }
  ModalityLayout layout(sizes);
  Matrix values(layout.total(), ref.rows());
  Mask mask(layout.total(), ref.rows());
  for (std::size_t r = 0; r < tables.size(); ++r) {
    const auto ri = static_cast<Index>(r);
    values.middleRows(layout.offset(ri), layout.size(ri)) = tables[r].values.transpose();
    mask.middleRows(layout.offset(ri), layout.size(ri)) = tables[r].mask.transpose();
  }
  input.dataset = validate_dataset(std::move(values), std::move(mask), std::move(layout));
  return input;
}

void write_embeddings(const fs::path& path, const Matrix& embeddings, const std::vector<std::string>& ids) {
  write_table(path, ids, "sample", latent_columns(embeddings.rows()), embeddings.transpose());
}

void write_model(const fs::path& dir, const FitReport& report, const MultiModalInput& input,
                 const nlohmann::json& settings) {
  fs::create_directories(dir);
  const ModelParams& p = report.final_params;
  const auto& layout = p.layout();
  const auto features = qualified_features(input);

  write_table(dir / "loadings.csv", features, "feature", latent_columns(p.latent_dim()), p.loadings());
  write_table(dir / "means.csv", features, "feature", {"mean"}, p.means());
  nlohmann::json modalities = nlohmann::json::array();
  for (Index r = 0; r < layout.blocks(); ++r) {
    const std::string file = "psi_" + std::to_string(r + 1) + ".csv";
    const auto& names = input.features[static_cast<std::size_t>(r)];
    std::vector<std::string> rows;
    for (const auto& f : names) rows.push_back(input.names[static_cast<std::size_t>(r)] + ":" + f);
    write_table(dir / file, rows, "feature", names, p.psi().block(r));
    modalities.push_back({{"name", input.names[static_cast<std::size_t>(r)]},
                          {"features", layout.size(r)},
                          {"psi_file", file}});
  }
  write_embeddings(dir / "embeddings.csv", report.posterior.means, input.sample_ids);

  const auto steps = static_cast<Index>(report.loglik_trace.size());
  Matrix trace(steps, 3);
  for (Index t = 0; t < steps; ++t) {
    trace(t, 0) = static_cast<double>(t);
    trace(t, 1) = report.loglik_trace[static_cast<std::size_t>(t)];
    trace(t, 2) = report.unpenalized_trace[static_cast<std::size_t>(t)];
  }
  write_table(dir / "loglik.csv", {}, "", {"iteration", "penalized", "unpenalized"}, trace);

  nlohmann::json manifest = {
      {"format", "gpcca-model"},
      {"version", 1},
      {"latent_dim", p.latent_dim()},
      {"ridge_lambda", p.ridge_lambda()},
      {"samples", input.dataset.samples()},
      {"modalities", modalities},
      {"convergence",
       {{"converged", report.converged},
        {"iterations", report.iterations},
        {"final_loglik", report.loglik_trace.back()},
        {"final_unpenalized", report.unpenalized_trace.back()}}},
      {"settings", settings},
  };
  std::ofstream out(dir / "manifest.json");
  if (!out) throw InputError("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

SavedModel read_model(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw InputError("cannot open " + manifest_path.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
    if (manifest.at("format").get<std::string>() != "gpcca-model") throw InputError(manifest_path.string() + ": not a model manifest");
    const auto d = manifest.at("latent_dim").get<Index>();
    const auto lambda = manifest.at("ridge_lambda").get<double>();
    std::vector<Index> sizes;
    std::vector<std::string> names;
    std::vector<std::string> psi_files;
    for (const auto& m : manifest.at("modalities")) {
      names.push_back(m.at("name").get<std::string>());
      sizes.push_back(m.at("features").get<Index>());
      psi_files.push_back(m.at("psi_file").get<std::string>());
    }
    ModalityLayout layout(sizes);
    Matrix loadings = read_numeric(dir / "loadings.csv", layout.total(), d);
    Vector means = read_numeric(dir / "means.csv", layout.total(), 1).col(0);
    std::vector<Matrix> blocks;
    for (std::size_t r = 0; r < sizes.size(); ++r) blocks.push_back(read_numeric(dir / psi_files[r], sizes[r], sizes[r]));
    ModelParams params(std::move(loadings), std::move(means), BlockSpd(layout, std::move(blocks)), lambda);
    return SavedModel{std::move(params), std::move(names), std::move(manifest)};
  } catch (const nlohmann::json::exception& e) {
    throw InputError(manifest_path.string() + ": " + e.what());
  }
}

}  // namespace gpcca::cli
