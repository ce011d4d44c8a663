#pragma once

#include <gpcca/dataset.hpp>
#include <gpcca/model.hpp>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace gpcca::cli {

/// Modality files stacked into one features-as-rows dataset.
struct MultiModalInput {
  std::vector<std::string> names;  ///< file stems
  std::vector<std::vector<std::string>> features;
  std::vector<std::string> sample_ids;
  ObservedDataset dataset;
};

/// Reads one CSV per modality. Row counts and sample IDs (when present) must agree.
MultiModalInput load_modalities(const std::vector<std::filesystem::path>& paths);

struct SavedModel {
  ModelParams params;
  std::vector<std::string> modality_names;
  nlohmann::json manifest;
};

/// Writes manifest.json, loadings.csv, means.csv, psi_<r>.csv, embeddings.csv and loglik.csv.
void write_model(const std::filesystem::path& dir, const FitReport& report, const MultiModalInput& input,
                 const nlohmann::json& settings);

SavedModel read_model(const std::filesystem::path& dir);

/// Samples-as-rows d-column embedding file with sample IDs.
void write_embeddings(const std::filesystem::path& path, const Matrix& embeddings, const std::vector<std::string>& ids);

}  // namespace gpcca::cli
