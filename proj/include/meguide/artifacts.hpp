#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "meguide/graph.hpp"
#include "meguide/prediction.hpp"
#include "meguide/training.hpp"

namespace meguide {

nlohmann::json subgraph_to_json(const Subgraph& s);
Subgraph subgraph_from_json(const nlohmann::json& j);

// Batch directory: manifest.json (config, metrics, per-subgraph summary) plus
// one subgraph_NNN.json per subgraph.
void write_batch_dir(const BatchSet& batch, const TrainConfig& cfg, const std::filesystem::path& dir);

struct LoadedBatch {
  BatchSet batch;
  TrainConfig config;
};
LoadedBatch read_batch_dir(const std::filesystem::path& dir);

nlohmann::json predictions_to_json(const Predictions& p, const TrainConfig& cfg,
                                   std::size_t extras_count);

// Writes "iteration,loss,val_acc" rows under a comment line with the config
// hash and seed.
void write_curve_csv(const RunReport& report, const std::filesystem::path& file);

void write_json(const nlohmann::json& j, const std::filesystem::path& file);
nlohmann::json read_json(const std::filesystem::path& file);

}  // namespace meguide
