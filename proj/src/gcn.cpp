#include "meguide/gcn.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>

#include "meguide/errors.hpp"
#include "meguide/softmax.hpp"

namespace meguide {
namespace {

std::atomic<std::uint64_t> g_builds{0};
std::atomic<std::uint64_t> g_largest{0};
std::atomic<std::uint64_t> g_last{0};

void record_build(std::uint64_t n) {
  g_builds.fetch_add(1);
  g_last.store(n);
  auto cur = g_largest.load();
  while (n > cur && !g_largest.compare_exchange_weak(cur, n)) {
  }
}

// Builds the normalised operator from per-row sorted neighbor lists.
NormalizedAdjacency build_normalized(std::uint32_t n,
                                     const std::vector<std::vector<std::uint32_t>>& adj) {
  NormalizedAdjacency out;
  out.n = n;
  std::vector<double> inv_sqrt(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    inv_sqrt[i] = 1.0 / std::sqrt(static_cast<double>(adj[i].size() + 1));
  }
  out.row_offsets.assign(1, 0);
  for (std::uint32_t i = 0; i < n; ++i) {
    bool diag_done = false;
    for (std::uint32_t j : adj[i]) {
      if (!diag_done && j > i) {
        out.cols.push_back(i);
        out.values.push_back(inv_sqrt[i] * inv_sqrt[i]);
        diag_done = true;
      }
      out.cols.push_back(j);
      // Same expression for (i, j) and (j, i): the stored values are symmetric.
      out.values.push_back(inv_sqrt[std::min(i, j)] * inv_sqrt[std::max(i, j)]);
    }
    if (!diag_done) {
      out.cols.push_back(i);
      out.values.push_back(inv_sqrt[i] * inv_sqrt[i]);
    }
    out.row_offsets.push_back(static_cast<std::uint32_t>(out.cols.size()));
  }
  record_build(n);
  return out;
}

Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double p, Rng& rng) {
  Matrix mask(rows, cols);
  const double scale = 1.0 / (1.0 - p);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) mask(i, j) = rng.uniform01() < p ? 0.0 : scale;
  }
  return mask;
}

}  // namespace

Matrix NormalizedAdjacency::multiply(const Matrix& x) const {
  if (x.rows() != static_cast<Eigen::Index>(n)) {
    throw ShapeError("adjacency is " + std::to_string(n) + "x" + std::to_string(n) +
                     " but operand has " + std::to_string(x.rows()) + " rows");
  }
  Matrix out = Matrix::Zero(x.rows(), x.cols());
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t k = row_offsets[i]; k < row_offsets[i + 1]; ++k) {
      out.row(i) += values[k] * x.row(cols[k]);
    }
  }
  return out;
}

double NormalizedAdjacency::at(std::uint32_t i, std::uint32_t j) const {
  for (std::uint32_t k = row_offsets.at(i); k < row_offsets.at(i + 1); ++k) {
    if (cols[k] == j) return values[k];
  }
  return 0.0;
}

NormalizedAdjacency normalize_adjacency(
    std::uint32_t n, std::span<const std::pair<std::uint32_t, std::uint32_t>> edges) {
  std::vector<std::vector<std::uint32_t>> adj(n);
  for (const auto& [u, v] : edges) {
    if (u >= n || v >= n) throw IndexError("adjacency edge outside local id range");
    if (u == v) continue;
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  for (auto& row : adj) {
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
  }
  return build_normalized(n, adj);
}

NormalizedAdjacency normalize_adjacency(const Subgraph& sub) {
  const auto local = sub.local_edges();
  return normalize_adjacency(static_cast<std::uint32_t>(sub.size()), local);
}

NormalizedAdjacency normalize_adjacency(const Graph& g) {
  std::vector<std::vector<std::uint32_t>> adj(g.num_nodes());
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    const auto nb = g.neighbors(v);
    adj[v].assign(nb.begin(), nb.end());
  }
  return build_normalized(static_cast<std::uint32_t>(g.num_nodes()), adj);
}

AdjacencyCounters adjacency_counters() {
  return {g_builds.load(), g_largest.load(), g_last.load()};
}

void reset_adjacency_counters() {
  g_builds.store(0);
  g_largest.store(0);
  g_last.store(0);
}

GcnModel GcnModel::glorot(std::size_t d, std::size_t h, std::size_t c, double dropout, Rng& rng) {
  auto init = [&rng](std::size_t rows, std::size_t cols) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Matrix w(rows, cols);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-limit, limit);
    }
    return w;
  };
  GcnModel m;
  m.w0 = init(d, h);
  m.w1 = init(h, c);
  m.dropout = dropout;
  return m;
}

GcnModel GcnModel::zeros(std::size_t d, std::size_t h, std::size_t c, double dropout) {
  GcnModel m;
  m.w0 = Matrix::Zero(d, h);
  m.w1 = Matrix::Zero(h, c);
  m.dropout = dropout;
  return m;
}

void GcnModel::check_finite() const {
  if (!w0.allFinite() || !w1.allFinite()) throw NumericError("model weights are not finite");
}

Matrix gather_features(const Graph& g, std::span<const NodeId> nodes) {
  Matrix x(static_cast<Eigen::Index>(nodes.size()), static_cast<Eigen::Index>(g.feature_dim()));
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto row = g.features(nodes[i]);
    for (std::size_t j = 0; j < row.size(); ++j) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
    }
  }
  return x;
}

ForwardResult forward(const GcnModel& model, const NormalizedAdjacency& adj, const Matrix& x,
                      bool train_mode, Rng* rng) {
  if (x.rows() != static_cast<Eigen::Index>(adj.n)) {
    throw ShapeError("feature rows " + std::to_string(x.rows()) + " != subgraph size " +
                     std::to_string(adj.n));
  }
  if (x.cols() != model.w0.rows()) {
    throw ShapeError("feature dim " + std::to_string(x.cols()) + " != model input dim " +
                     std::to_string(model.w0.rows()));
  }
  const bool drop = train_mode && model.dropout > 0.0;
  if (drop && rng == nullptr) throw PreconditionError("train-mode forward needs an rng");
  if (model.dropout < 0.0 || model.dropout >= 1.0) throw ConfigError("dropout must be in [0, 1)");

  ForwardResult out;
  auto& c = out.cache;
  c.x_in = drop ? Matrix(x.cwiseProduct(dropout_mask(x.rows(), x.cols(), model.dropout, *rng)))
                : x;
  c.z1 = adj.multiply(c.x_in * model.w0);
  const Matrix h = c.z1.cwiseMax(0.0);
  if (drop) {
    c.h_mask = dropout_mask(h.rows(), h.cols(), model.dropout, *rng);
    c.h_in = h.cwiseProduct(c.h_mask);
  } else {
    c.h_in = h;
  }
  out.logits = adj.multiply(c.h_in * model.w1);
  return out;
}

std::optional<LossAndGrads> loss_and_grads(const GcnModel& model, const NormalizedAdjacency& adj,
                                           const Matrix& x, std::span<const std::int32_t> labels,
                                           std::span<const std::uint8_t> train_mask,
                                           double weight_decay, bool train_mode, Rng* rng) {
  if (labels.size() != adj.n || train_mask.size() != adj.n) {
    throw ShapeError("labels/mask length != subgraph size");
  }
  // Check for a usable row before drawing dropout masks so skipped batches do
  // not consume randomness.
  bool any = false;
  for (std::size_t i = 0; i < labels.size() && !any; ++i) {
    any = train_mask[i] != 0 && labels[i] != kUnlabeled;
  }
  if (!any) return std::nullopt;

  const auto fwd = forward(model, adj, x, train_mode, rng);
  const auto ce = softmax_cross_entropy(fwd.logits, labels, train_mask);
  const auto& c = fwd.cache;

  LossAndGrads out;
  out.num_labeled = ce.count;
  out.data_loss = ce.loss;
  out.loss = ce.loss + 0.5 * weight_decay * (model.w0.squaredNorm() + model.w1.squaredNorm());

  const Matrix d_hw = adj.multiply(ce.dlogits);  // adjacency is symmetric
  out.grad_w1 = c.h_in.transpose() * d_hw + weight_decay * model.w1;
  Matrix d_h = d_hw * model.w1.transpose();
  if (c.h_mask.size() != 0) d_h = d_h.cwiseProduct(c.h_mask);
  const Matrix d_z1 = d_h.cwiseProduct((c.z1.array() > 0.0).cast<double>().matrix());
  const Matrix d_xw = adj.multiply(d_z1);
  out.grad_w0 = c.x_in.transpose() * d_xw + weight_decay * model.w0;
  return out;
}

Matrix node_representations(const GcnModel& model, const NormalizedAdjacency& adj,
                            const Matrix& x) {
  if (x.rows() != static_cast<Eigen::Index>(adj.n) || x.cols() != model.w0.rows()) {
    throw ShapeError("node_representations: input shape mismatch");
  }
  const Matrix h = adj.multiply(x * model.w0).cwiseMax(0.0);
  return adj.multiply(h);
}

void adam_update(Matrix& param, AdamMoments& moments, const Matrix& grad, std::uint64_t t,
                 const AdamConfig& cfg, const char* name) {
  if (grad.rows() != param.rows() || grad.cols() != param.cols()) {
    throw ShapeError(std::string("adam: gradient shape mismatch for ") + name);
  }
  if (!grad.allFinite()) {
    double worst = 0.0;
    Eigen::Index wi = 0, wj = 0;
    for (Eigen::Index i = 0; i < grad.rows(); ++i) {
      for (Eigen::Index j = 0; j < grad.cols(); ++j) {
        if (!std::isfinite(grad(i, j))) {
          wi = i;
          wj = j;
          worst = grad(i, j);
          i = grad.rows();
          break;
        }
      }
    }
    throw NumericError(std::string("non-finite gradient in ") + name + " at (" +
                       std::to_string(wi) + ", " + std::to_string(wj) +
                       "): " + std::to_string(worst) + " at step " + std::to_string(t));
  }
  if (moments.m.size() == 0) {
    moments.m = Matrix::Zero(param.rows(), param.cols());
    moments.v = Matrix::Zero(param.rows(), param.cols());
  }
  moments.m = cfg.beta1 * moments.m + (1.0 - cfg.beta1) * grad;
  moments.v = cfg.beta2 * moments.v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  param.array() -= cfg.lr * (moments.m.array() / bc1) /
                   ((moments.v.array() / bc2).sqrt() + cfg.eps);
}

AdamState AdamState::for_model(const GcnModel& model) {
  AdamState s;
  s.w0 = {Matrix::Zero(model.w0.rows(), model.w0.cols()),
          Matrix::Zero(model.w0.rows(), model.w0.cols())};
  s.w1 = {Matrix::Zero(model.w1.rows(), model.w1.cols()),
          Matrix::Zero(model.w1.rows(), model.w1.cols())};
  return s;
}

void adam_step(GcnModel& model, AdamState& state, const Matrix& grad_w0, const Matrix& grad_w1,
               const AdamConfig& cfg) {
  if (!grad_w1.allFinite()) {
    // Report W1 before W0 is touched.
    Matrix scratch = model.w1;
    AdamMoments m;
    adam_update(scratch, m, grad_w1, state.t + 1, cfg, "W1");
  }
  ++state.t;
  adam_update(model.w0, state.w0, grad_w0, state.t, cfg, "W0");
  adam_update(model.w1, state.w1, grad_w1, state.t, cfg, "W1");
}

namespace {

void write_f64(std::ostream& out, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      unsigned char bytes[8];
      const double v = m(i, j);
      std::memcpy(bytes, &v, 8);
      if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + 8);
      out.write(reinterpret_cast<const char*>(bytes), 8);
    }
  }
}

Matrix read_f64(std::istream& in, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      unsigned char bytes[8];
      if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw ValidationError("checkpoint truncated");
      if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + 8);
      double v;
      std::memcpy(&v, bytes, 8);
      m(i, j) = v;
    }
  }
  return m;
}

}  // namespace

void save_checkpoint(const GcnModel& model, const CheckpointMeta& meta,
                     const std::filesystem::path& file) {
  nlohmann::json header = {{"format", "meguide-gcn-checkpoint"},
                           {"version", 1},
                           {"input_dim", model.input_dim()},
                           {"hidden_dim", model.hidden_dim()},
                           {"num_classes", model.num_classes()},
                           {"dropout", model.dropout},
                           {"bias", false},
                           {"seed", meta.seed},
                           {"config_hash", meta.config_hash},
                           {"dtype", "f64-le"},
                           {"arrays", {"W0", "W1"}}};
  std::ofstream out(file, std::ios::binary);
  if (!out) throw ValidationError("cannot write checkpoint " + file.string());
  out << header.dump() << '\n';
  write_f64(out, model.w0);
  write_f64(out, model.w1);
}

GcnModel load_checkpoint(const std::filesystem::path& file, CheckpointMeta* meta) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint " + file.string());
  std::string line;
  std::getline(in, line);
  const auto header = nlohmann::json::parse(line, nullptr, false);
  if (header.is_discarded() || header.value("format", "") != "meguide-gcn-checkpoint") {
    throw ParseError(file.string(), 1, "not a meguide checkpoint header");
  }
  const auto d = header.at("input_dim").get<Eigen::Index>();
  const auto h = header.at("hidden_dim").get<Eigen::Index>();
  const auto c = header.at("num_classes").get<Eigen::Index>();
  GcnModel model;
  model.dropout = header.value("dropout", 0.5);
  model.w0 = read_f64(in, d, h);
  model.w1 = read_f64(in, h, c);
  if (meta != nullptr) {
    meta->seed = header.value("seed", std::uint64_t{0});
    meta->config_hash = header.value("config_hash", std::string{});
  }
  model.check_finite();
  return model;
}

}  // namespace meguide
