#include "meguide/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include "meguide/errors.hpp"
#include "meguide/log.hpp"
#include "meguide/parallel.hpp"

namespace meguide {

using nlohmann::json;

void TrainConfig::validate() const {
  if (M < 1) throw ConfigError("M must be >= 1");
  if (iterations < 1) throw ConfigError("iterations must be >= 1");
  if (!(lr >= 0.0) || !(weight_decay >= 0.0)) throw ConfigError("lr and weight_decay must be >= 0");
  if (!(dropout >= 0.0) || dropout >= 1.0) throw ConfigError("dropout must be in [0, 1)");
  if (hidden < 1) throw ConfigError("hidden must be >= 1");
  if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
  if (patience < 1) throw ConfigError("patience must be >= 1");
  if (!(predictor_lr >= 0.0) || !(predictor_weight_decay >= 0.0)) {
    throw ConfigError("predictor rates must be >= 0");
  }
  sampler_config().validate();
}

SamplerConfig TrainConfig::sampler_config() const {
  SamplerConfig s;
  s.kind = sampler;
  s.rho = rho;
  s.max_steps = max_steps;
  s.target_size = target_size;
  s.min_size = min_size;
  s.max_root_retries = max_root_retries;
  s.edge_mode = edge_mode;
  s.root_policy = all_roots ? RootPolicy::all : RootPolicy::train;
  s.seed = seed;
  return s;
}

PredictorConfig TrainConfig::predictor_config() const {
  return {predictor_lr, predictor_weight_decay, predictor_epochs, predictor_bias};
}

json TrainConfig::to_json() const {
  return json{{"M", M},
              {"iterations", iterations},
              {"rho", rho},
              {"sampler", to_string(sampler)},
              {"lr", lr},
              {"weight_decay", weight_decay},
              {"dropout", dropout},
              {"hidden", hidden},
              {"patience", patience},
              {"eval_every", eval_every},
              {"seed", seed},
              {"min_size", min_size},
              {"max_root_retries", max_root_retries},
              {"max_steps", max_steps},
              {"edge_mode", to_string(edge_mode)},
              {"all_roots", all_roots},
              {"target_size", target_size},
              {"pool_cap", pool_cap},
              {"resample_every", resample_every},
              {"normalize_features", normalize_features},
              {"predictor_epochs", predictor_epochs},
              {"predictor_lr", predictor_lr},
              {"predictor_weight_decay", predictor_weight_decay},
              {"predictor_bias", predictor_bias},
              {"full_graph_ablation", full_graph_ablation}};
}

TrainConfig TrainConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  TrainConfig c;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "M") c.M = value.get<std::uint32_t>();
      else if (key == "iterations") c.iterations = value.get<std::uint32_t>();
      else if (key == "rho") c.rho = value.get<double>();
      else if (key == "sampler") {
        const auto k = sampler_kind_from_string(value.get<std::string>());
        if (!k) throw ConfigError("unknown sampler '" + value.get<std::string>() + "'");
        c.sampler = *k;
      } else if (key == "lr") c.lr = value.get<double>();
      else if (key == "weight_decay") c.weight_decay = value.get<double>();
      else if (key == "dropout") c.dropout = value.get<double>();
      else if (key == "hidden") c.hidden = value.get<std::uint32_t>();
      else if (key == "patience") c.patience = value.get<std::uint32_t>();
      else if (key == "eval_every") c.eval_every = value.get<std::uint32_t>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "min_size") c.min_size = value.get<std::uint32_t>();
      else if (key == "max_root_retries") c.max_root_retries = value.get<std::uint32_t>();
      else if (key == "max_steps") c.max_steps = value.get<std::uint32_t>();
      else if (key == "edge_mode") {
        const auto m = edge_mode_from_string(value.get<std::string>());
        if (!m) throw ConfigError("unknown edge_mode '" + value.get<std::string>() + "'");
        c.edge_mode = *m;
      } else if (key == "all_roots") c.all_roots = value.get<bool>();
      else if (key == "target_size") c.target_size = value.get<std::uint32_t>();
      else if (key == "pool_cap") c.pool_cap = value.get<std::uint32_t>();
      else if (key == "resample_every") c.resample_every = value.get<std::uint32_t>();
      else if (key == "normalize_features") c.normalize_features = value.get<bool>();
      else if (key == "predictor_epochs") c.predictor_epochs = value.get<std::uint32_t>();
      else if (key == "predictor_lr") c.predictor_lr = value.get<double>();
      else if (key == "predictor_weight_decay") c.predictor_weight_decay = value.get<double>();
      else if (key == "predictor_bias") c.predictor_bias = value.get<bool>();
      else if (key == "full_graph_ablation") c.full_graph_ablation = value.get<bool>();
      else throw ConfigError("unknown config key '" + key + "'");
    } catch (const json::exception& e) {
      throw ConfigError("config key '" + key + "': " + e.what());
    }
  }
  c.validate();
  return c;
}

std::string TrainConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_json().dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

MetricsReport training_metrics(const Graph& g, const TrainConfig& cfg) {
  MetricsOptions opts;
  opts.pool = PoolKind::train;
  opts.cfd.pool_cap = cfg.pool_cap;
  opts.cfd.seed = derive_seed(cfg.seed, 0xcfd);
  if (cfg.sampler == SamplerKind::meguide) return compute_metrics(g, opts);
  // Baselines do not depend on the metrics; report them when defined.
  try {
    return compute_metrics(g, opts);
  } catch (const Error& e) {
    log_info(std::string("metrics unavailable for baseline run: ") + e.what());
    return {};
  }
}

namespace {

BatchSet sample_batch(const EdgeSmoothnessCache& cache, const MetricsReport& metrics,
                      const TrainConfig& cfg, std::uint64_t seed_base) {
  const auto scfg = cfg.sampler_config();
  BatchSet b;
  b.lambda_f = metrics.lambda_f;
  b.lambda_d = metrics.lambda_d;
  b.num_sources_used = metrics.num_sources_used;
  if (cfg.sampler == SamplerKind::meguide) {
    b.steps = cfg.max_steps > 0 ? cfg.max_steps : expansion_steps_for(metrics.lambda_d);
  }
  b.subgraphs.resize(cfg.M);
  parallel_for(cfg.M, [&](std::size_t k) {
    Rng rng(seed_base + k + 1);
    b.subgraphs[k] = sample_subgraph(cache, metrics.lambda_d, metrics.lambda_f, scfg, rng);
  });
  return b;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct SubgraphLabels {
  std::vector<std::int32_t> labels;
  std::vector<std::uint8_t> train_mask;
};

SubgraphLabels local_labels(const Graph& g, const Subgraph& sub) {
  SubgraphLabels out;
  out.labels.reserve(sub.size());
  out.train_mask.reserve(sub.size());
  for (NodeId v : sub.nodes) {
    out.labels.push_back(g.label(v));
    out.train_mask.push_back(g.in_split(v, Split::train) ? 1 : 0);
  }
  return out;
}

// Extras cover every node so that aggregation sees the same subgraph set
// whichever nodes are scored.
PredictionRun predict_with(const EdgeSmoothnessCache& cache, const Graph& feat,
                           const GcnModel& model, const BatchSet& batch, const TrainConfig& cfg,
                           std::span<const NodeId> targets) {
  PredictionRun run;
  run.test_set = build_test_set(cache, batch.subgraphs, batch.lambda_d, batch.lambda_f,
                                cfg.sampler_config());
  const auto reps = aggregate_representations(model, run.test_set.subgraphs, feat);
  run.head = train_predictor(reps, feat, cfg.predictor_config());
  if (targets.empty()) {
    run.predictions = predict(run.head, reps, reps.nodes);
  } else {
    run.predictions = predict(run.head, reps, targets);
  }
  return run;
}

}  // namespace

PredictionRun run_prediction(const Graph& g, const GcnModel& model, const BatchSet& batch,
                             const TrainConfig& cfg, std::span<const NodeId> targets) {
  if (model.input_dim() != g.feature_dim() || model.num_classes() != g.num_classes()) {
    throw ShapeError("checkpoint dimensions do not match the dataset");
  }
  std::optional<Graph> normalized;
  if (cfg.normalize_features) normalized = g.row_normalized();
  const EdgeSmoothnessCache cache(g);
  return predict_with(cache, normalized ? *normalized : g, model, batch, cfg, targets);
}

BatchSet build_batch_set(const EdgeSmoothnessCache& cache, const MetricsReport& metrics,
                         const TrainConfig& cfg) {
  cfg.validate();
  return sample_batch(cache, metrics, cfg, cfg.seed);
}

BatchSet build_batch_set(const Graph& g, const TrainConfig& cfg) {
  const EdgeSmoothnessCache cache(g);
  return build_batch_set(cache, training_metrics(g, cfg), cfg);
}

json batch_manifest(const BatchSet& batch, const TrainConfig& cfg) {
  json subs = json::array();
  for (std::size_t k = 0; k < batch.subgraphs.size(); ++k) {
    const auto& s = batch.subgraphs[k];
    subs.push_back({{"index", k},
                    {"seed", cfg.seed + k + 1},
                    {"root", s.root},
                    {"num_nodes", s.size()},
                    {"num_edges", s.edges.size()},
                    {"steps", s.expansion_steps_used},
                    {"undersized", s.undersized}});
  }
  return json{{"config_hash", cfg.hash()},
              {"seed", cfg.seed},
              {"sampler", to_string(cfg.sampler)},
              {"rho", cfg.rho},
              {"edge_mode", to_string(cfg.edge_mode)},
              {"lambda_f", batch.lambda_f},
              {"lambda_d", batch.lambda_d},
              {"expansion_steps", batch.steps},
              {"count", batch.subgraphs.size()},
              {"subgraphs", subs}};
}

json RunReport::to_json(bool include_timing) const {
  json curve_rows = json::array();
  for (const auto& p : curve) {
    curve_rows.push_back({{"iteration", p.iteration},
                          {"loss", p.loss},
                          {"val_acc", p.val_acc ? json(*p.val_acc) : json(nullptr)}});
  }
  json j{{"test_accuracy", test_accuracy},
         {"best_val_accuracy", best_val_accuracy},
         {"best_iteration", best_iteration},
         {"iterations", iterations},
         {"epochs", epochs},
         {"skipped_batches", skipped_batches},
         {"lambda_f", lambda_f},
         {"lambda_d", lambda_d},
         {"lambda_d_sources", num_sources_used},
         {"expansion_steps", expansion_steps},
         {"config_hash", config_hash},
         {"seed", seed},
         {"stop_reason", stop_reason},
         {"convergence_criterion",
          "iteration of the best fast-path validation accuracy (batch-set aggregation, "
          "second GCN layer as head)"},
         {"warnings", warnings},
         {"max_subgraph_nodes", max_subgraph_nodes},
         {"max_iteration_adjacency_nodes", max_iteration_adjacency_nodes},
         {"max_iteration_adjacency_builds", max_iteration_adjacency_builds},
         {"extras_count", extras_count},
         {"full_graph_test_accuracy",
          full_graph_test_accuracy ? json(*full_graph_test_accuracy) : json(nullptr)}};
  if (include_timing) {
    j["convergence_seconds"] = convergence_seconds;
    j["total_seconds"] = total_seconds;
  }
  return j;
}

TrainResult train(const Graph& g, const TrainConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  if (g.nodes_in(Split::train).empty()) throw ConfigError("dataset has no train-masked node");
  if (g.num_classes() < 1) throw ConfigError("dataset has no classes");

  std::optional<Graph> normalized;
  if (cfg.normalize_features) normalized = g.row_normalized();
  const Graph& feat = normalized ? *normalized : g;

  const EdgeSmoothnessCache cache(g);
  const auto metrics = training_metrics(g, cfg);

  TrainResult out;
  auto& rep = out.report;
  rep.seed = cfg.seed;
  rep.config_hash = cfg.hash();
  rep.lambda_f = metrics.lambda_f;
  rep.lambda_d = metrics.lambda_d;
  rep.num_sources_used = metrics.num_sources_used;

  out.batch = sample_batch(cache, metrics, cfg, cfg.seed);
  rep.expansion_steps = out.batch.steps;

  auto note_batch = [&rep](const BatchSet& b) {
    std::size_t undersized = 0;
    for (const auto& s : b.subgraphs) {
      rep.max_subgraph_nodes = std::max(rep.max_subgraph_nodes, s.size());
      undersized += s.undersized;
    }
    if (undersized > 0) {
      rep.warnings.push_back(std::to_string(undersized) + " of " + std::to_string(b.subgraphs.size()) +
                             " batch subgraphs are below min_size");
      log_warn(rep.warnings.back());
    }
  };
  note_batch(out.batch);

  Rng init_rng(derive_seed(cfg.seed, 1));
  GcnModel model = GcnModel::glorot(g.feature_dim(), cfg.hidden, g.num_classes(), cfg.dropout,
                                    init_rng);
  AdamState adam = AdamState::for_model(model);
  AdamConfig adam_cfg;
  adam_cfg.lr = cfg.lr;
  Rng run_rng(derive_seed(cfg.seed, 2));

  std::vector<SubgraphLabels> sub_labels;
  auto refresh_labels = [&] {
    sub_labels.clear();
    for (const auto& s : out.batch.subgraphs) sub_labels.push_back(local_labels(g, s));
  };
  refresh_labels();

  GcnModel best = model;
  bool evaluated = false;
  std::uint32_t since_best = 0;
  std::uint64_t it = 0;
  bool flagged_warned = false;
  rep.stop_reason = "iteration budget";

  auto evaluate = [&]() {
    const auto v = fast_validation_path(model, out.batch.subgraphs, feat, Split::val);
    if (v.flagged && !flagged_warned) {
      rep.warnings.push_back("fast validation covered no val node; sentinel accuracy 0 used");
      log_warn(rep.warnings.back());
      flagged_warned = true;
    }
    if (!rep.curve.empty()) rep.curve.back().val_acc = v.accuracy;
    if (v.flagged) {
      // Nothing to compare: track the latest weights and leave patience alone.
      if (!evaluated || rep.best_val_accuracy == 0.0) {
        best = model;
        rep.best_iteration = it;
        rep.convergence_seconds = seconds_since(t0);
      }
      evaluated = true;
      return;
    }
    if (!evaluated || v.accuracy > rep.best_val_accuracy) {
      rep.best_val_accuracy = v.accuracy;
      rep.best_iteration = it;
      rep.convergence_seconds = seconds_since(t0);
      best = model;
      since_best = 0;
    } else {
      ++since_best;
    }
    evaluated = true;
  };

  bool stop = false;
  std::vector<std::size_t> order;
  while (!stop && it < cfg.iterations) {
    order.resize(out.batch.subgraphs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    run_rng.shuffle(order);
    std::size_t used = 0;
    for (std::size_t idx : order) {
      if (it >= cfg.iterations) break;
      const auto& sub = out.batch.subgraphs[idx];
      const auto before = adjacency_counters().builds;
      const auto adj = normalize_adjacency(sub);
      const auto counters = adjacency_counters();
      rep.max_iteration_adjacency_builds =
          std::max<std::uint64_t>(rep.max_iteration_adjacency_builds, counters.builds - before);
      rep.max_iteration_adjacency_nodes =
          std::max<std::uint64_t>(rep.max_iteration_adjacency_nodes, counters.last_nodes);
      const auto x = gather_features(feat, sub.nodes);
      const auto lg = loss_and_grads(model, adj, x, sub_labels[idx].labels,
                                     sub_labels[idx].train_mask, cfg.weight_decay, true, &run_rng);
      if (!lg) {
        ++rep.skipped_batches;
        continue;
      }
      if (!std::isfinite(lg->loss)) {
        throw NumericError("non-finite loss at iteration " + std::to_string(it + 1) +
                           " on batch subgraph " + std::to_string(idx));
      }
      adam_step(model, adam, lg->grad_w0, lg->grad_w1, adam_cfg);
      ++used;
      ++it;
      rep.curve.push_back({it, lg->loss, std::nullopt});
      if (it % cfg.eval_every == 0) {
        evaluate();
        if (since_best >= cfg.patience) {
          rep.stop_reason = "patience";
          stop = true;
          break;
        }
      }
    }
    if (used == 0) {
      throw ConfigError("every batch subgraph lacks train-labeled nodes; nothing to train on");
    }
    ++rep.epochs;
    if (!stop && cfg.resample_every > 0 && rep.epochs % cfg.resample_every == 0 &&
        it < cfg.iterations) {
      out.batch = sample_batch(cache, metrics, cfg, cfg.seed + rep.epochs * cfg.M);
      note_batch(out.batch);
      refresh_labels();
    }
  }
  rep.iterations = it;
  if (!evaluated) evaluate();
  out.model = best;

  std::vector<NodeId> test_nodes;
  for (NodeId v : g.nodes_in(Split::test)) {
    if (g.label(v) != kUnlabeled) test_nodes.push_back(v);
  }
  auto pred = predict_with(cache, feat, out.model, out.batch, cfg, test_nodes);
  out.test_set = std::move(pred.test_set);
  rep.extras_count = out.test_set.extras_count;
  if (test_nodes.empty()) {
    rep.warnings.push_back("dataset has no labeled test node; test accuracy reported as 0");
  } else {
    rep.test_accuracy = accuracy(pred.predictions, g);
  }
  if (cfg.full_graph_ablation) rep.full_graph_test_accuracy = full_graph_accuracy(out.model, feat);
  rep.total_seconds = seconds_since(t0);
  return out;
}

std::vector<SweepEntry> rho_sweep(const Graph& g, const std::vector<double>& rhos,
                                  const TrainConfig& base) {
  if (rhos.empty()) throw ConfigError("rho sweep needs at least one value");
  for (double r : rhos) {
    if (!(r > 0.0)) throw ConfigError("sweep rho values must be > 0");
  }
  std::vector<SweepEntry> out;
  for (double r : rhos) {
    TrainConfig c = base;
    c.rho = r;
    out.push_back({r, train(g, c).report});
  }
  return out;
}

}  // namespace meguide
