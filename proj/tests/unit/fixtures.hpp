#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "meguide/graph.hpp"

namespace meguide::testing {

// Erdos-Renyi graph with uniform features in [0, 1) (or binary), labels
// v % classes and the first third of the nodes in train.
inline Graph random_graph(std::size_t n, double p, std::size_t d, std::uint64_t seed,
                          std::size_t classes = 3, bool binary = false) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Edge> edges;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if (u(gen) < p) edges.emplace_back(static_cast<NodeId>(a), static_cast<NodeId>(b));
    }
  }
  std::vector<float> x(n * d);
  for (auto& v : x) v = binary ? (u(gen) < 0.3 ? 1.0F : 0.0F) : static_cast<float>(u(gen));
  std::vector<std::int32_t> labels(n);
  std::vector<Split> splits(n);
  for (std::size_t v = 0; v < n; ++v) {
    labels[v] = static_cast<std::int32_t>(v % classes);
    splits[v] = v < n / 3 ? Split::train : v < 2 * n / 3 ? Split::val : Split::test;
  }
  return Graph::from_edges(n, edges, std::move(x), d, std::move(labels), std::move(splits), classes);
}

inline Graph path_graph(std::size_t n, std::size_t d = 1) {
  std::vector<Edge> edges;
  for (std::size_t v = 0; v + 1 < n; ++v) edges.emplace_back(static_cast<NodeId>(v), static_cast<NodeId>(v + 1));
  std::vector<float> x(n * d);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<float>(i % 5);
  return Graph::from_edges(n, edges, std::move(x), d, std::vector<std::int32_t>(n, 0),
                           std::vector<Split>(n, Split::train), 1);
}

// Unweighted all-pairs hop counts; max() marks unreachable pairs.
inline std::vector<std::vector<std::uint32_t>> floyd_warshall(const Graph& g) {
  const std::size_t n = g.num_nodes();
  const std::uint32_t inf = std::numeric_limits<std::uint32_t>::max() / 4;
  std::vector<std::vector<std::uint32_t>> d(n, std::vector<std::uint32_t>(n, inf));
  for (std::size_t v = 0; v < n; ++v) {
    d[v][v] = 0;
    for (NodeId w : g.neighbors(static_cast<NodeId>(v))) d[v][w] = 1;
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
  for (auto& row : d)
    for (auto& x : row)
      if (x == inf) x = std::numeric_limits<std::uint32_t>::max();
  return d;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("meguide_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace meguide::testing
