#pragma once

#include <filesystem>
#include <string>

#include "meguide/graph.hpp"

namespace meguide {

namespace fs = std::filesystem;

// File names inside a dataset directory.
inline constexpr const char* kEdgeFile = "edges.txt";
inline constexpr const char* kFeatureFile = "features.csv";
inline constexpr const char* kLabelFile = "labels.txt";
inline constexpr const char* kSplitFile = "splits.txt";
inline constexpr const char* kBinaryCacheFile = "graph.mggr";

struct LoadOptions {
  bool row_normalize = false;
  std::size_t num_classes = 0;  // 0: infer from labels
};

// Reads the four text files (edge list, feature CSV, label list, split list).
// Self-loops are dropped and directed edges symmetrised.
DatasetBundle load_graph(const fs::path& edge_file, const fs::path& feature_file,
                         const fs::path& label_file, const fs::path& split_file,
                         const LoadOptions& options = {});

// Loads <dir>/{edges.txt,features.csv,labels.txt,splits.txt}, or the binary
// cache when only graph.mggr is present. An optional dataset.json supplies
// the name and class count.
DatasetBundle load_dataset_dir(const fs::path& dir, const LoadOptions& options = {});

// Resolves a --dataset argument: an existing path wins, otherwise it is looked
// up under $MEGUIDE_DATA_DIR.
fs::path resolve_dataset_path(const std::string& arg);

// Canonical text form: edges once as "u v" with u < v in CSR order, features
// with round-trip float precision.
void save_dataset_dir(const DatasetBundle& bundle, const fs::path& dir);

// "MGGR" + u16 version + little-endian arrays in Graph field order.
void write_binary_cache(const Graph& g, const fs::path& file);
Graph read_binary_cache(const fs::path& file);

}  // namespace meguide
