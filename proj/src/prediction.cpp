#include "meguide/prediction.hpp"

#include <algorithm>
#include <cmath>

#include "meguide/errors.hpp"
#include "meguide/log.hpp"
#include "meguide/parallel.hpp"
#include "meguide/softmax.hpp"

namespace meguide {

std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> compute_coverage(
    std::size_t num_nodes, std::span<const Subgraph> subgraphs) {
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> cov(num_nodes);
  for (std::size_t s = 0; s < subgraphs.size(); ++s) {
    const auto& nodes = subgraphs[s].nodes;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i] >= num_nodes) throw IndexError("subgraph node outside the graph");
      cov[nodes[i]].emplace_back(static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(i));
    }
  }
  return cov;
}

TestSubgraphSet build_test_set(const EdgeSmoothnessCache& cache, std::span<const Subgraph> batch,
                               double lambda_d, double lambda_f, const SamplerConfig& cfg,
                               std::span<const NodeId> targets) {
  if (batch.empty()) throw PreconditionError("build_test_set needs a non-empty batch set");
  const Graph& g = cache.graph();
  TestSubgraphSet t;
  t.subgraphs.assign(batch.begin(), batch.end());
  t.batch_count = batch.size();

  std::vector<std::uint8_t> covered(g.num_nodes(), 0);
  for (const auto& sub : batch) {
    for (NodeId v : sub.nodes) covered.at(v) = 1;
  }
  std::vector<NodeId> wanted;
  if (targets.empty()) {
    wanted.resize(g.num_nodes());
    for (NodeId v = 0; v < g.num_nodes(); ++v) wanted[v] = v;
  } else {
    wanted.assign(targets.begin(), targets.end());
    std::sort(wanted.begin(), wanted.end());
  }

  const std::uint32_t steps = cfg.max_steps > 0 ? cfg.max_steps : expansion_steps_for(lambda_d);
  const double threshold = cfg.rho * lambda_f;
  for (NodeId root : wanted) {
    if (root >= g.num_nodes()) throw IndexError("target node outside the graph");
    if (covered[root]) continue;
    Subgraph extra = cfg.kind == SamplerKind::meguide
                         ? meguide_expand(cache, root, steps, threshold, cfg.edge_mode)
                         : bfs_sample_from(g, root,
                                           std::min<std::uint32_t>(
                                               std::max<std::uint32_t>(cfg.target_size, 1),
                                               static_cast<std::uint32_t>(g.num_nodes())));
    for (NodeId v : extra.nodes) covered[v] = 1;
    t.subgraphs.push_back(std::move(extra));
    ++t.extras_count;
  }
  t.coverage = compute_coverage(g.num_nodes(), t.subgraphs);
  return t;
}

AggregatedRepresentations aggregate_representations(const GcnModel& model,
                                                    std::span<const Subgraph> subgraphs,
                                                    const Graph& g) {
  std::vector<Matrix> parts(subgraphs.size());
  parallel_for(subgraphs.size(), [&](std::size_t s) {
    const auto adj = normalize_adjacency(subgraphs[s]);
    parts[s] = node_representations(model, adj, gather_features(g, subgraphs[s].nodes));
  });

  AggregatedRepresentations out;
  out.row_of.assign(g.num_nodes(), -1);
  std::vector<std::uint32_t> counts(g.num_nodes(), 0);
  for (const auto& sub : subgraphs) {
    for (NodeId v : sub.nodes) ++counts.at(v);
  }
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    if (counts[v] == 0) continue;
    out.row_of[v] = static_cast<std::int64_t>(out.nodes.size());
    out.nodes.push_back(v);
  }
  out.h = Matrix::Zero(static_cast<Eigen::Index>(out.nodes.size()),
                       static_cast<Eigen::Index>(model.hidden_dim()));
  for (std::size_t s = 0; s < subgraphs.size(); ++s) {
    const auto& nodes = subgraphs[s].nodes;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      out.h.row(out.row_of[nodes[i]]) += parts[s].row(static_cast<Eigen::Index>(i));
    }
  }
  for (std::size_t r = 0; r < out.nodes.size(); ++r) {
    out.h.row(static_cast<Eigen::Index>(r)) /= static_cast<double>(counts[out.nodes[r]]);
  }
  if (!out.h.allFinite()) throw NumericError("aggregated representations are not finite");
  return out;
}

void PredictorHead::check_finite() const {
  if (!w.allFinite() || (has_bias() && !b.allFinite())) {
    throw NumericError("predictor head is not finite");
  }
}

namespace {

Matrix head_logits(const PredictorHead& head, const Matrix& x) {
  if (x.cols() != head.w.rows()) {
    throw ShapeError("representation width " + std::to_string(x.cols()) + " != head input " +
                     std::to_string(head.w.rows()));
  }
  Matrix logits = x * head.w;
  if (head.has_bias()) logits.rowwise() += head.b;
  return logits;
}

}  // namespace

HeadGrads head_loss_and_grads(const PredictorHead& head, const Matrix& x,
                              std::span<const std::int32_t> labels, double weight_decay) {
  const auto ce = softmax_cross_entropy(head_logits(head, x), labels);
  HeadGrads out;
  out.loss = ce.loss + 0.5 * weight_decay * head.w.squaredNorm();
  out.grad_w = x.transpose() * ce.dlogits + weight_decay * head.w;
  if (head.has_bias()) out.grad_b = ce.dlogits.colwise().sum();
  return out;
}

PredictorHead train_predictor(const AggregatedRepresentations& reps, const Graph& g,
                              const PredictorConfig& cfg) {
  std::vector<Eigen::Index> rows;
  std::vector<std::int32_t> labels;
  for (std::size_t r = 0; r < reps.nodes.size(); ++r) {
    const NodeId v = reps.nodes[r];
    if (g.in_split(v, Split::train) && g.label(v) != kUnlabeled) {
      rows.push_back(static_cast<Eigen::Index>(r));
      labels.push_back(g.label(v));
    }
  }
  if (rows.empty()) throw ConfigError("no train-labeled node is covered by the test subgraphs");
  if (cfg.lr < 0.0 || cfg.weight_decay < 0.0) throw ConfigError("predictor rates must be >= 0");

  Matrix x(static_cast<Eigen::Index>(rows.size()), reps.h.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = reps.h.row(rows[i]);

  PredictorHead head;
  const auto c = static_cast<Eigen::Index>(g.num_classes());
  head.w = Matrix::Zero(reps.h.cols(), c);
  if (cfg.bias) head.b = RowVector::Zero(c);

  AdamConfig adam;
  adam.lr = cfg.lr;
  AdamMoments mw, mb;
  Matrix b_as_matrix;
  for (std::uint32_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto grads = head_loss_and_grads(head, x, labels, cfg.weight_decay);
    adam_update(head.w, mw, grads.grad_w, epoch, adam, "predictor W");
    if (head.has_bias()) {
      b_as_matrix = head.b;
      adam_update(b_as_matrix, mb, grads.grad_b, epoch, adam, "predictor b");
      head.b = b_as_matrix.row(0);
    }
  }
  head.check_finite();
  return head;
}

Predictions predict(const PredictorHead& head, const AggregatedRepresentations& reps,
                    std::span<const NodeId> nodes) {
  Matrix x(static_cast<Eigen::Index>(nodes.size()), reps.h.cols());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto r = reps.row(nodes[i]);
    if (r < 0) throw CoverageError("node " + std::to_string(nodes[i]) + " is not covered");
    x.row(static_cast<Eigen::Index>(i)) = reps.h.row(r);
  }
  Predictions p;
  p.nodes.assign(nodes.begin(), nodes.end());
  p.probabilities = row_softmax(head_logits(head, x));
  p.labels.resize(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    p.labels[i] = static_cast<std::int32_t>(argmax_row(p.probabilities, static_cast<Eigen::Index>(i)));
  }
  return p;
}

double accuracy(const Predictions& p, const Graph& g) {
  if (p.nodes.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < p.nodes.size(); ++i) hit += p.labels[i] == g.label(p.nodes[i]);
  return static_cast<double>(hit) / static_cast<double>(p.nodes.size());
}

ValidationResult fast_validation_path(const GcnModel& model, std::span<const Subgraph> batch,
                                      const Graph& g, Split split) {
  ValidationResult res;
  const auto reps = aggregate_representations(model, batch, g);
  std::size_t hit = 0;
  for (NodeId v : g.nodes_in(split)) {
    if (g.label(v) == kUnlabeled) continue;
    ++res.total;
    const auto r = reps.row(v);
    if (r < 0) continue;
    ++res.covered;
    const Matrix logits = reps.h.row(r) * model.w1;
    hit += static_cast<std::int32_t>(argmax_row(logits, 0)) == g.label(v);
  }
  if (res.covered == 0) {
    res.flagged = true;
    log_info(std::string("fast validation: no ") + to_string(split) +
             " node is covered by the batch set; reporting 0");
    return res;
  }
  res.accuracy = static_cast<double>(hit) / static_cast<double>(res.covered);
  return res;
}

double full_graph_accuracy(const GcnModel& model, const Graph& g, Split split) {
  const auto adj = normalize_adjacency(g);
  std::vector<NodeId> all(g.num_nodes());
  for (NodeId v = 0; v < g.num_nodes(); ++v) all[v] = v;
  const auto logits = forward(model, adj, gather_features(g, all), false).logits;
  std::size_t hit = 0, total = 0;
  for (NodeId v : g.nodes_in(split)) {
    if (g.label(v) == kUnlabeled) continue;
    ++total;
    hit += static_cast<std::int32_t>(argmax_row(logits, v)) == g.label(v);
  }
  return total == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(total);
}

}  // namespace meguide
