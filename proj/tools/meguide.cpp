#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "meguide/artifacts.hpp"
#include "meguide/errors.hpp"
#include "meguide/io.hpp"
#include "meguide/log.hpp"
#include "meguide/metrics.hpp"
#include "meguide/parallel.hpp"
#include "meguide/planetoid.hpp"
#include "meguide/synthetic.hpp"
#include "meguide/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace meguide;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::size_t threads = 0;
  bool verbose = false;
  bool quiet = false;
};

void emit(const json& j, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << j.dump(2) << '\n';
  } else {
    if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
    write_json(j, out);
  }
}

DatasetBundle load_dataset(const std::string& arg, bool row_normalize = false) {
  LoadOptions opts;
  opts.row_normalize = row_normalize;
  return load_dataset_dir(resolve_dataset_path(arg), opts);
}

TrainConfig load_config(const std::string& file) {
  if (file.empty()) return {};
  return TrainConfig::from_json(read_json(file));
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw ConfigError("bad number '" + tok + "' in list");
    }
  }
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Metric-guided subgraph sampling and GCN training"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals gl;
  auto* seed_opt = app.add_option("--seed", gl.seed, "Seed for every random draw");
  app.add_option("--threads", gl.threads, "Worker threads (default: logical cores)");
  app.add_flag("-v,--verbose", gl.verbose, "Log progress to stderr");
  app.add_flag("-q,--quiet", gl.quiet, "Suppress warnings");

  // metrics
  auto* metrics_cmd = app.add_subcommand("metrics", "Feature smoothness and connection failure distance");
  std::string m_dataset, m_out, m_pool = "train";
  std::size_t m_pool_cap = 2000;
  bool m_edges = false, m_normalize = false;
  metrics_cmd->add_option("--dataset", m_dataset, "Dataset directory")->required();
  metrics_cmd->add_option("--pool", m_pool, "Label pool for lambda_d")
      ->transform(CLI::IsMember({"train", "all", "all-labeled"}));
  metrics_cmd->add_option("--pool-cap", m_pool_cap, "Subsample pools above this size");
  metrics_cmd->add_flag("--emit-edge-smoothness,--edge-smoothness", m_edges, "Include per-edge smoothness");
  metrics_cmd->add_flag("--normalize", m_normalize, "Row-normalise features first");
  metrics_cmd->add_option("--out", m_out, "Output JSON file (default stdout)");

  // sample
  auto* sample_cmd = app.add_subcommand("sample", "Sample subgraphs");
  std::string s_dataset, s_out, s_sampler = "meguide", s_edge_mode = "expansion-edges";
  double s_rho = 0.3;
  std::uint32_t s_count = 32, s_target = 100, s_min = 2, s_retries = 10, s_steps = 0;
  bool s_all_roots = false;
  sample_cmd->add_option("--dataset", s_dataset, "Dataset directory")->required();
  sample_cmd->add_option("--sampler", s_sampler, "meguide, random or bfs")
      ->check(CLI::IsMember({"meguide", "random", "bfs"}));
  sample_cmd->add_option("--rho", s_rho, "Smoothness threshold multiplier");
  sample_cmd->add_option("--count", s_count, "Number of subgraphs");
  sample_cmd->add_option("--target-size", s_target, "Node budget of random/bfs samples");
  sample_cmd->add_option("--min-size", s_min, "Retry roots below this size");
  sample_cmd->add_option("--max-root-retries", s_retries, "Root retries");
  sample_cmd->add_option("--max-steps", s_steps, "Expansion steps (0: floor(lambda_d/2))");
  sample_cmd->add_option("--edge-mode", s_edge_mode, "expansion-edges or induced-closure")
      ->check(CLI::IsMember({"expansion-edges", "induced-closure"}));
  sample_cmd->add_flag("--all-roots", s_all_roots, "Draw roots from every node");
  sample_cmd->add_option("--out", s_out, "Output directory")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a GCN on a subgraph batch set");
  std::string t_dataset, t_config, t_out;
  std::uint32_t t_resample = 0, t_iterations = 0;
  bool t_ablation = false;
  train_cmd->add_option("--dataset", t_dataset, "Dataset directory")->required();
  train_cmd->add_option("--config", t_config, "Flat JSON config");
  train_cmd->add_option("--out", t_out, "Output directory")->required();
  train_cmd->add_option("--resample-every", t_resample, "Resample the batch set every E epochs");
  train_cmd->add_option("--iterations", t_iterations, "Override the iteration budget");
  train_cmd->add_flag("--full-graph-ablation", t_ablation, "Also score a full-graph forward pass");

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "Aggregation-based prediction");
  std::string p_dataset, p_checkpoint, p_batch, p_out;
  predict_cmd->add_option("--dataset", p_dataset, "Dataset directory")->required();
  predict_cmd->add_option("--checkpoint", p_checkpoint, "Checkpoint file")->required();
  predict_cmd->add_option("--batch-manifest", p_batch, "Batch directory written by train/sample")->required();
  predict_cmd->add_option("--out", p_out, "Output JSON file (default stdout)");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Score predictions against a split");
  std::string e_dataset, e_predictions, e_split = "test", e_out;
  eval_cmd->add_option("--dataset", e_dataset, "Dataset directory")->required();
  eval_cmd->add_option("--predictions", e_predictions, "predict output")->required();
  eval_cmd->add_option("--split", e_split, "Split to score")->check(CLI::IsMember({"train", "val", "test"}));
  eval_cmd->add_option("--out", e_out, "Output JSON file (default stdout)");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Train once per rho value");
  std::string w_dataset, w_config, w_out, w_rhos = "0.1,0.2,0.3,0.4,0.5,0.7,1.0";
  sweep_cmd->add_option("--dataset", w_dataset, "Dataset directory")->required();
  sweep_cmd->add_option("--config", w_config, "Flat JSON config");
  sweep_cmd->add_option("--rhos", w_rhos, "Comma-separated rho values");
  sweep_cmd->add_option("--out", w_out, "Output directory")->required();

  // gen-fixture
  auto* fixture_cmd = app.add_subcommand("gen-fixture", "Write a synthetic dataset");
  std::string f_kind, f_out;
  TwoClusterOptions f_two;
  PlantedOptions f_planted;
  std::uint32_t f_nodes = 0, f_classes = 0;
  fixture_cmd->add_option("kind", f_kind, "path3, triangle, two-cluster or planted")
      ->required()
      ->check(CLI::IsMember({"path3", "triangle", "two-cluster", "planted"}));
  fixture_cmd->add_option("--gap", f_two.gap, "two-cluster: mean gap");
  fixture_cmd->add_option("--noise", f_two.noise, "two-cluster: feature std");
  fixture_cmd->add_option("--p-in", f_two.p_in, "two-cluster: intra-cluster edge probability");
  fixture_cmd->add_option("--p-out", f_two.p_out, "two-cluster: inter-cluster edge probability");
  fixture_cmd->add_option("--nodes", f_nodes, "Nodes per cluster (two-cluster) or total (planted)");
  fixture_cmd->add_option("--classes", f_classes, "planted: number of classes");
  fixture_cmd->add_option("--homophily", f_planted.homophily, "planted: share of intra-class edges");
  fixture_cmd->add_option("--out", f_out, "Output directory (default fixtures/<kind>)");

  // convert
  auto* convert_cmd = app.add_subcommand("convert", "Convert Planetoid raw files");
  std::string c_raw, c_name, c_out;
  bool c_cache = false;
  convert_cmd->add_option("--raw", c_raw, "Directory with ind.<name>.* files")->required();
  convert_cmd->add_option("--name", c_name, "Dataset name (cora, citeseer, pubmed)");
  convert_cmd->add_option("--out", c_out, "Output dataset directory")->required();
  convert_cmd->add_flag("--binary-cache", c_cache, "Also write graph.mggr");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  gl.seed_given = seed_opt->count() > 0;

  try {
    set_log_level(gl.quiet ? LogLevel::quiet : gl.verbose ? LogLevel::info : LogLevel::warn);
    if (gl.threads > 0) set_num_threads(gl.threads);

    if (metrics_cmd->parsed()) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto bundle = load_dataset(m_dataset, m_normalize);
      MetricsOptions opts;
      if (m_pool == "all") m_pool = "all-labeled";
      opts.pool = m_pool == "all-labeled" ? PoolKind::all_labeled : PoolKind::train;
      opts.cfd.pool_cap = m_pool_cap;
      opts.cfd.seed = derive_seed(gl.seed, 0xcfd);
      opts.emit_edge_smoothness = m_edges;
      const auto r = compute_metrics(bundle.graph, opts);
      json j{{"dataset", bundle.name},
             {"num_nodes", bundle.graph.num_nodes()},
             {"num_edges", bundle.graph.num_edges()},
             {"feature_dim", bundle.graph.feature_dim()},
             {"features", m_normalize ? "row-normalized" : "raw"},
             {"lambda_f", r.lambda_f},
             {"lambda_d", r.lambda_d},
             {"lambda_d_mode", r.lambda_d_mode == CfdMode::exact ? "exact" : "estimated"},
             {"lambda_d_pool", m_pool},
             {"lambda_d_sources", r.num_sources_used},
             {"expansion_steps", expansion_steps_for(r.lambda_d)},
             {"seed", gl.seed},
             {"seconds", seconds_since(t0)}};
      if (r.edge_smoothness) {
        json rows = json::array();
        for (const auto& [e, v] : *r.edge_smoothness) rows.push_back({e.first, e.second, v});
        j["edge_smoothness"] = rows;
      }
      emit(j, m_out);
    } else if (sample_cmd->parsed()) {
      const auto bundle = load_dataset(s_dataset);
      TrainConfig cfg;
      cfg.M = s_count;
      cfg.rho = s_rho;
      cfg.sampler = *sampler_kind_from_string(s_sampler);
      cfg.target_size = s_target;
      cfg.min_size = s_min;
      cfg.max_root_retries = s_retries;
      cfg.max_steps = s_steps;
      cfg.edge_mode = *edge_mode_from_string(s_edge_mode);
      cfg.all_roots = s_all_roots;
      cfg.seed = gl.seed;
      const auto batch = build_batch_set(bundle.graph, cfg);
      write_batch_dir(batch, cfg, s_out);
      std::size_t total = 0;
      for (const auto& s : batch.subgraphs) total += s.size();
      log_info("wrote " + std::to_string(batch.subgraphs.size()) + " subgraphs (" +
               std::to_string(total) + " node slots) to " + s_out);
    } else if (train_cmd->parsed()) {
      const auto bundle = load_dataset(t_dataset);
      auto cfg = load_config(t_config);
      if (gl.seed_given) cfg.seed = gl.seed;
      if (t_resample > 0) cfg.resample_every = t_resample;
      if (t_iterations > 0) cfg.iterations = t_iterations;
      if (t_ablation) cfg.full_graph_ablation = true;
      cfg.validate();
      const auto result = train(bundle.graph, cfg);
      const fs::path out(t_out);
      fs::create_directories(out);
      save_checkpoint(result.model, {cfg.seed, cfg.hash()}, out / "checkpoint.bin");
      write_batch_dir(result.batch, cfg, out / "batch");
      auto report = result.report.to_json();
      report["dataset"] = bundle.name;
      report["config"] = cfg.to_json();
      write_json(report, out / "run_report.json");
      write_curve_csv(result.report, out / "training_curve.csv");
      write_json(cfg.to_json(), out / "config.json");
      std::printf("test_accuracy %.4f best_val %.4f iterations %llu stop %s\n",
                  result.report.test_accuracy, result.report.best_val_accuracy,
                  static_cast<unsigned long long>(result.report.iterations),
                  result.report.stop_reason.c_str());
    } else if (predict_cmd->parsed()) {
      const auto bundle = load_dataset(p_dataset);
      CheckpointMeta meta;
      const auto model = load_checkpoint(p_checkpoint, &meta);
      const auto loaded = read_batch_dir(p_batch);
      if (!meta.config_hash.empty() && meta.config_hash != loaded.config.hash()) {
        log_warn("checkpoint config hash " + meta.config_hash + " differs from batch manifest " +
                 loaded.config.hash());
      }
      const auto run = run_prediction(bundle.graph, model, loaded.batch, loaded.config);
      emit(predictions_to_json(run.predictions, loaded.config, run.test_set.extras_count), p_out);
    } else if (eval_cmd->parsed()) {
      const auto bundle = load_dataset(e_dataset);
      const auto preds = read_json(e_predictions);
      const auto split = *split_from_string(e_split);
      const auto& g = bundle.graph;
      std::vector<std::int32_t> predicted(g.num_nodes(), kUnlabeled);
      for (const auto& row : preds.at("predictions")) {
        const auto v = row.at("node").get<NodeId>();
        if (v >= g.num_nodes()) throw IndexError("prediction for node " + std::to_string(v) + " outside the graph");
        predicted[v] = row.at("label").get<std::int32_t>();
      }
      std::size_t hit = 0, total = 0, missing = 0;
      for (NodeId v : g.nodes_in(split)) {
        if (g.label(v) == kUnlabeled) continue;
        ++total;
        if (predicted[v] == kUnlabeled) {
          ++missing;
          continue;
        }
        hit += predicted[v] == g.label(v);
      }
      if (missing > 0) throw CoverageError(std::to_string(missing) + " " + e_split + " nodes have no prediction");
      const double acc = total == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(total);
      emit(json{{"split", e_split},
                {"accuracy", acc},
                {"correct", hit},
                {"total", total},
                {"config_hash", preds.value("config_hash", "")},
                {"seed", preds.value("seed", std::uint64_t{0})}},
           e_out);
    } else if (sweep_cmd->parsed()) {
      const auto bundle = load_dataset(w_dataset);
      auto cfg = load_config(w_config);
      if (gl.seed_given) cfg.seed = gl.seed;
      const auto rhos = parse_list(w_rhos);
      const auto entries = rho_sweep(bundle.graph, rhos, cfg);
      const fs::path out(w_out);
      fs::create_directories(out);
      json rows = json::array();
      std::ostringstream csv;
      csv << "# config_hash=" << cfg.hash() << " seed=" << cfg.seed << '\n' << "rho,test_accuracy,best_val_accuracy,iterations\n";
      for (const auto& e : entries) {
        auto r = e.report.to_json();
        r.erase("curve");
        rows.push_back({{"rho", e.rho}, {"report", r}});
        char buf[128];
        std::snprintf(buf, sizeof buf, "%g,%.6f,%.6f,%llu\n", e.rho, e.report.test_accuracy,
                      e.report.best_val_accuracy, static_cast<unsigned long long>(e.report.iterations));
        csv << buf;
      }
      write_json(json{{"dataset", bundle.name}, {"base_config", cfg.to_json()}, {"config_hash", cfg.hash()},
                      {"seed", cfg.seed}, {"rhos", rhos}, {"runs", rows}},
                 out / "sweep.json");
      std::ofstream(out / "sweep.csv") << csv.str();
      std::cout << csv.str();
    } else if (fixture_cmd->parsed()) {
      DatasetBundle bundle;
      bundle.name = f_kind;
      if (f_kind == "path3") {
        bundle.graph = path3_graph();
      } else if (f_kind == "triangle") {
        bundle.graph = triangle_graph();
      } else if (f_kind == "two-cluster") {
        f_two.seed = gl.seed;
        if (f_nodes > 0) f_two.nodes_per_cluster = f_nodes;
        bundle.graph = two_cluster_graph(f_two);
      } else {
        f_planted.seed = gl.seed;
        if (f_nodes > 0) f_planted.num_nodes = f_nodes;
        if (f_classes > 0) f_planted.num_classes = f_classes;
        bundle.graph = planted_partition_graph(f_planted);
      }
      std::ostringstream prov;
      prov << "gen-fixture " << f_kind << " seed=" << gl.seed;
      bundle.provenance = prov.str();
      save_dataset_dir(bundle, f_out.empty() ? fs::path("fixtures") / f_kind : fs::path(f_out));
    } else if (convert_cmd->parsed()) {
      const auto bundle = convert_planetoid(c_raw, c_name);
      save_dataset_dir(bundle, c_out);
      if (c_cache) write_binary_cache(bundle.graph, fs::path(c_out) / kBinaryCacheFile);
      std::printf("%s: %zu nodes, %zu edges, %zu features, %zu classes\n", bundle.name.c_str(),
                  bundle.graph.num_nodes(), bundle.graph.num_edges(), bundle.graph.feature_dim(),
                  bundle.graph.num_classes());
    }
  } catch (const NumericError& e) {
    std::fprintf(stderr, "meguide: internal error: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "meguide: %s\n", e.what());
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "meguide: bad JSON: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "meguide: internal error: %s\n", e.what());
    return 2;
  }
  return 0;
}
