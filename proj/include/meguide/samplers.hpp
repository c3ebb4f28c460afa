#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "meguide/graph.hpp"
#include "meguide/metrics.hpp"
#include "meguide/rng.hpp"

namespace meguide {

enum class SamplerKind { meguide, random, bfs };
// expansion: only the edges used to admit nodes (the literal sampler output).
// induced_closure: every graph edge between sampled nodes.
enum class EdgeMode { expansion, induced_closure };
enum class RootPolicy { train, all };

const char* to_string(SamplerKind k);
const char* to_string(EdgeMode m);
std::optional<SamplerKind> sampler_kind_from_string(std::string_view s);
std::optional<EdgeMode> edge_mode_from_string(std::string_view s);

struct SamplerConfig {
  SamplerKind kind = SamplerKind::meguide;
  double rho = 0.3;
  std::uint32_t max_steps = 0;  // 0: floor(lambda_d / 2), at least 1
  std::uint32_t target_size = 0;  // random / bfs only
  std::uint32_t min_size = 2;
  std::uint32_t max_root_retries = 10;
  EdgeMode edge_mode = EdgeMode::expansion;
  RootPolicy root_policy = RootPolicy::train;
  std::uint64_t seed = 0;

  void validate() const;
};

// floor(lambda_d / 2) clamped to at least one step.
std::uint32_t expansion_steps_for(double lambda_d);

// Metric-guided expansion from a fixed root: `steps` frontier advances; a
// neighbor outside the sample is admitted when the smoothness of the edge
// from any frontier node is >= threshold, and every passing frontier edge is
// kept. Neighbors already sampled before the step are skipped.
Subgraph meguide_expand(const EdgeSmoothnessCache& cache, NodeId root, std::uint32_t steps,
                        double threshold, EdgeMode edge_mode);

// Full sampler: draws a root per cfg.root_policy, expands with threshold
// rho * lambda_f, and retries with fresh roots while the sample is smaller than
// min_size. When retries run out the largest attempt is returned with
// `undersized` set.
Subgraph meguide_sample(const EdgeSmoothnessCache& cache, double lambda_d, double lambda_f,
                        const SamplerConfig& cfg, Rng& rng);

// Uniform node sample without replacement, induced edges; root is the first
// drawn node.
Subgraph random_sample(const Graph& g, std::uint32_t target_size, Rng& rng);

// BFS from `root` truncated at target_size nodes; the final layer is cut by
// ascending global id. A component smaller than target_size is returned whole
// with `undersized` set.
Subgraph bfs_sample_from(const Graph& g, NodeId root, std::uint32_t target_size);

// BFS from a uniformly drawn root (from `roots` when non-empty).
Subgraph bfs_sample(const Graph& g, std::uint32_t target_size, Rng& rng,
                    std::span<const NodeId> roots = {});

// Root candidates for a policy: train-masked nodes or all nodes.
std::vector<NodeId> root_candidates(const Graph& g, RootPolicy policy);

// Dispatches on cfg.kind.
Subgraph sample_subgraph(const EdgeSmoothnessCache& cache, double lambda_d, double lambda_f,
                         const SamplerConfig& cfg, Rng& rng);

}  // namespace meguide
