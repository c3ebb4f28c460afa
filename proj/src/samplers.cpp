#include "meguide/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "meguide/errors.hpp"

namespace meguide {

const char* to_string(SamplerKind k) {
  switch (k) {
    case SamplerKind::random:
      return "random";
    case SamplerKind::bfs:
      return "bfs";
    case SamplerKind::meguide:
      break;
  }
  return "meguide";
}

const char* to_string(EdgeMode m) {
  return m == EdgeMode::induced_closure ? "induced-closure" : "expansion-edges";
}

std::optional<SamplerKind> sampler_kind_from_string(std::string_view s) {
  if (s == "meguide") return SamplerKind::meguide;
  if (s == "random") return SamplerKind::random;
  if (s == "bfs") return SamplerKind::bfs;
  return std::nullopt;
}

std::optional<EdgeMode> edge_mode_from_string(std::string_view s) {
  if (s == "expansion-edges" || s == "expansion") return EdgeMode::expansion;
  if (s == "induced-closure" || s == "induced") return EdgeMode::induced_closure;
  return std::nullopt;
}

void SamplerConfig::validate() const {
  if (!(rho >= 0.0) || !std::isfinite(rho)) throw ConfigError("rho must be a finite value >= 0");
  if (min_size < 1) throw ConfigError("min_size must be >= 1");
  if (kind != SamplerKind::meguide && target_size < 1) {
    throw ConfigError(std::string("target_size must be >= 1 for the ") + to_string(kind) +
                      " sampler");
  }
}

std::uint32_t expansion_steps_for(double lambda_d) {
  if (!(lambda_d >= 0.0)) throw PreconditionError("lambda_d must be >= 0");
  const auto steps = static_cast<std::uint32_t>(std::floor(lambda_d / 2.0));
  return std::max<std::uint32_t>(1, steps);
}

namespace {

std::vector<Edge> closure_edges(const Graph& g, const std::vector<NodeId>& sorted_nodes) {
  return induced_subgraph(g, sorted_nodes).edges;
}

}  // namespace

Subgraph meguide_expand(const EdgeSmoothnessCache& cache, NodeId root, std::uint32_t steps,
                        double threshold, EdgeMode edge_mode) {
  const Graph& g = cache.graph();
  if (root >= g.num_nodes()) throw IndexError("sampler root " + std::to_string(root) + " out of range");

  std::unordered_set<NodeId> sampled{root};
  std::vector<NodeId> nodes{root};
  std::vector<Edge> edges;
  std::vector<NodeId> frontier{root};
  std::vector<NodeId> next;
  std::uint32_t used = 0;

  for (std::uint32_t step = 1; step <= steps && !frontier.empty(); ++step) {
    next.clear();
    // `sampled` is only updated after the whole frontier has been scanned, so
    // a node reachable from several frontier nodes keeps every passing edge.
    std::unordered_set<NodeId> admitted;
    for (NodeId vi : frontier) {
      for (NodeId vj : g.neighbors(vi)) {
        if (sampled.contains(vj)) continue;
        if (cache.get(vi, vj) >= threshold) {
          edges.emplace_back(std::min(vi, vj), std::max(vi, vj));
          if (admitted.insert(vj).second) next.push_back(vj);
        }
      }
    }
    if (next.empty()) break;
    std::sort(next.begin(), next.end());
    for (NodeId v : next) {
      sampled.insert(v);
      nodes.push_back(v);
    }
    frontier.swap(next);
    used = step;
  }

  std::sort(nodes.begin(), nodes.end());
  if (edge_mode == EdgeMode::induced_closure) edges = closure_edges(g, nodes);
  return make_subgraph(std::move(nodes), std::move(edges), root, used);
}

std::vector<NodeId> root_candidates(const Graph& g, RootPolicy policy) {
  if (policy == RootPolicy::train) {
    auto roots = g.nodes_in(Split::train);
    if (!roots.empty()) return roots;
  }
  std::vector<NodeId> all(g.num_nodes());
  for (NodeId v = 0; v < g.num_nodes(); ++v) all[v] = v;
  return all;
}

Subgraph meguide_sample(const EdgeSmoothnessCache& cache, double lambda_d, double lambda_f,
                        const SamplerConfig& cfg, Rng& rng) {
  const Graph& g = cache.graph();
  if (g.num_edges() == 0) throw SamplerError("MeGuide sampler needs a graph with edges");
  if (!(lambda_d >= 0.0)) throw PreconditionError("lambda_d must be >= 0");
  if (!(lambda_f >= 0.0)) throw PreconditionError("lambda_f must be >= 0");
  cfg.validate();

  const std::uint32_t steps = cfg.max_steps > 0 ? cfg.max_steps : expansion_steps_for(lambda_d);
  const double threshold = cfg.rho * lambda_f;
  const auto roots = root_candidates(g, cfg.root_policy);

  std::optional<Subgraph> best;
  for (std::uint32_t attempt = 0; attempt <= cfg.max_root_retries; ++attempt) {
    const NodeId root = roots[rng.uniform_index(roots.size())];
    auto sub = meguide_expand(cache, root, steps, threshold, cfg.edge_mode);
    const bool enough = sub.size() >= cfg.min_size;
    if (!best || sub.size() > best->size()) best = std::move(sub);
    if (enough) break;
  }
  best->undersized = best->size() < cfg.min_size;
  return std::move(*best);
}

Subgraph random_sample(const Graph& g, std::uint32_t target_size, Rng& rng) {
  const std::size_t n = g.num_nodes();
  if (target_size < 1 || target_size > n) {
    throw PreconditionError("random_sample: target_size " + std::to_string(target_size) +
                            " outside [1, " + std::to_string(n) + "]");
  }
  // Partial Fisher-Yates over a virtual identity permutation.
  std::unordered_map<NodeId, NodeId> swapped;
  auto at = [&](NodeId i) {
    const auto it = swapped.find(i);
    return it == swapped.end() ? i : it->second;
  };
  std::vector<NodeId> drawn;
  drawn.reserve(target_size);
  for (std::uint32_t k = 0; k < target_size; ++k) {
    const auto j = static_cast<NodeId>(k + rng.uniform_index(n - k));
    const NodeId vj = at(j);
    const NodeId vk = at(k);
    swapped[j] = vk;
    swapped[k] = vj;
    drawn.push_back(vj);
  }
  const NodeId root = drawn.front();
  return induced_subgraph(g, drawn, root);
}

Subgraph bfs_sample_from(const Graph& g, NodeId root, std::uint32_t target_size) {
  if (root >= g.num_nodes()) throw IndexError("bfs root " + std::to_string(root) + " out of range");
  if (target_size < 1 || target_size > g.num_nodes()) {
    throw PreconditionError("bfs_sample: target_size " + std::to_string(target_size) +
                            " outside [1, " + std::to_string(g.num_nodes()) + "]");
  }
  std::unordered_set<NodeId> seen{root};
  std::vector<NodeId> nodes{root};
  std::vector<NodeId> layer{root};
  std::uint32_t depth = 0;
  while (nodes.size() < target_size && !layer.empty()) {
    std::vector<NodeId> next;
    for (NodeId u : layer) {
      for (NodeId w : g.neighbors(u)) {
        if (seen.insert(w).second) next.push_back(w);
      }
    }
    if (next.empty()) break;
    std::sort(next.begin(), next.end());
    const std::size_t room = target_size - nodes.size();
    if (next.size() > room) next.resize(room);
    nodes.insert(nodes.end(), next.begin(), next.end());
    layer.swap(next);
    ++depth;
  }
  auto sub = induced_subgraph(g, nodes, root);
  sub.expansion_steps_used = depth;
  sub.undersized = sub.size() < target_size;
  return sub;
}

Subgraph bfs_sample(const Graph& g, std::uint32_t target_size, Rng& rng,
                    std::span<const NodeId> roots) {
  if (g.num_nodes() == 0) throw EmptyInputError("bfs_sample on an empty graph");
  const NodeId root = roots.empty()
                          ? static_cast<NodeId>(rng.uniform_index(g.num_nodes()))
                          : roots[rng.uniform_index(roots.size())];
  return bfs_sample_from(g, root, target_size);
}

Subgraph sample_subgraph(const EdgeSmoothnessCache& cache, double lambda_d, double lambda_f,
                         const SamplerConfig& cfg, Rng& rng) {
  cfg.validate();
  switch (cfg.kind) {
    case SamplerKind::random:
      return random_sample(cache.graph(), cfg.target_size, rng);
    case SamplerKind::bfs: {
      const auto roots = root_candidates(cache.graph(), cfg.root_policy);
      return bfs_sample(cache.graph(), cfg.target_size, rng, roots);
    }
    case SamplerKind::meguide:
      break;
  }
  return meguide_sample(cache, lambda_d, lambda_f, cfg, rng);
}

}  // namespace meguide
