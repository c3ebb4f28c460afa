#include "meguide/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string_view>

#include "meguide/errors.hpp"
#include "meguide/log.hpp"

namespace meguide {
namespace {

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::ifstream open_input(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + file.string());
  return in;
}

template <typename T>
bool parse_number(std::string_view tok, T& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return res.ec == std::errc() && res.ptr == tok.data() + tok.size();
}

std::vector<Edge> read_edges(const fs::path& file) {
  auto in = open_input(file);
  std::vector<Edge> edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv(line);
    if (const auto hash = sv.find('#'); hash != std::string_view::npos) sv = sv.substr(0, hash);
    sv = trim(sv);
    if (sv.empty()) continue;
    const auto sep = sv.find_first_of(" \t");
    if (sep == std::string_view::npos) {
      throw ParseError(file.string(), lineno, "expected two node ids");
    }
    const auto a = trim(sv.substr(0, sep));
    const auto b = trim(sv.substr(sep));
    std::uint64_t u = 0;
    std::uint64_t v = 0;
    if (!parse_number(a, u) || !parse_number(b, v) || u > UINT32_MAX || v > UINT32_MAX) {
      throw ParseError(file.string(), lineno, "malformed edge line '" + std::string(sv) + "'");
    }
    edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
  }
  return edges;
}

std::vector<float> read_features(const fs::path& file, std::size_t& rows, std::size_t& dim) {
  auto in = open_input(file);
  std::vector<float> data;
  std::string line;
  std::size_t lineno = 0;
  rows = 0;
  dim = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv = trim(line);
    if (sv.empty()) continue;
    std::size_t cols = 0;
    while (true) {
      const auto comma = sv.find(',');
      const auto tok = trim(sv.substr(0, comma));
      double value = 0.0;
      if (!parse_number(tok, value)) {
        throw ParseError(file.string(), lineno, "malformed feature value '" + std::string(tok) + "'");
      }
      data.push_back(static_cast<float>(value));
      ++cols;
      if (comma == std::string_view::npos) break;
      sv = sv.substr(comma + 1);
    }
    if (rows == 0) {
      dim = cols;
    } else if (cols != dim) {
      throw ParseError(file.string(), lineno,
                       "row has " + std::to_string(cols) + " columns, expected " +
                           std::to_string(dim));
    }
    ++rows;
  }
  return data;
}

std::vector<std::int32_t> read_labels(const fs::path& file) {
  auto in = open_input(file);
  std::vector<std::int32_t> labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto sv = trim(line);
    if (sv.empty()) continue;
    std::int64_t l = 0;
    if (!parse_number(sv, l)) throw ParseError(file.string(), lineno, "malformed label");
    if (l < kUnlabeled || l > INT32_MAX) {
      throw ValidationError(file.string() + ":" + std::to_string(lineno) + ": label " +
                            std::to_string(l) + " out of range");
    }
    labels.push_back(static_cast<std::int32_t>(l));
  }
  return labels;
}

std::vector<Split> read_splits(const fs::path& file) {
  auto in = open_input(file);
  std::vector<Split> splits;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto sv = trim(line);
    if (sv.empty()) continue;
    const auto s = split_from_string(sv);
    if (!s) throw ParseError(file.string(), lineno, "unknown split token '" + std::string(sv) + "'");
    splits.push_back(*s);
  }
  return splits;
}

// ---- binary cache helpers ----

template <typename T>
void write_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    throw ValidationError("binary cache truncated");
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

template <typename T, typename Stored = T>
void write_array(std::ostream& out, const std::vector<T>& v) {
  write_le<std::uint64_t>(out, v.size());
  for (const auto& x : v) write_le<Stored>(out, static_cast<Stored>(x));
}

template <typename T, typename Stored = T>
std::vector<T> read_array(std::istream& in, std::uint64_t max_len) {
  const auto n = read_le<std::uint64_t>(in);
  if (n > max_len) throw ValidationError("binary cache array length implausible");
  std::vector<T> v;
  v.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) v.push_back(static_cast<T>(read_le<Stored>(in)));
  return v;
}

constexpr char kMagic[4] = {'M', 'G', 'G', 'R'};
constexpr std::uint16_t kCacheVersion = 1;

}  // namespace

DatasetBundle load_graph(const fs::path& edge_file, const fs::path& feature_file,
                         const fs::path& label_file, const fs::path& split_file,
                         const LoadOptions& options) {
  std::size_t rows = 0;
  std::size_t dim = 0;
  auto features = read_features(feature_file, rows, dim);
  auto labels = read_labels(label_file);
  auto splits = read_splits(split_file);
  const auto edges = read_edges(edge_file);

  if (labels.size() != rows) {
    throw ShapeError("label count " + std::to_string(labels.size()) + " != feature rows " +
                     std::to_string(rows));
  }
  if (splits.size() != rows) {
    throw ShapeError("split count " + std::to_string(splits.size()) + " != feature rows " +
                     std::to_string(rows));
  }
  if (options.num_classes != 0) {
    for (std::size_t v = 0; v < labels.size(); ++v) {
      if (labels[v] != kUnlabeled && static_cast<std::size_t>(labels[v]) >= options.num_classes) {
        throw ValidationError(label_file.string() + ":" + std::to_string(v + 1) + ": label " +
                              std::to_string(labels[v]) + " >= num_classes " +
                              std::to_string(options.num_classes));
      }
    }
  }

  DatasetBundle bundle;
  bundle.graph = Graph::from_edges(rows, edges, std::move(features), dim, std::move(labels),
                                   std::move(splits), options.num_classes, &bundle.stats);
  if (options.row_normalize) bundle.graph = bundle.graph.row_normalized();
  if (bundle.stats.self_loops_dropped > 0) {
    log_info("dropped " + std::to_string(bundle.stats.self_loops_dropped) +
             " self-loop(s) from " + edge_file.string());
  }
  bundle.name = edge_file.parent_path().filename().string();
  bundle.provenance = "text:" + edge_file.parent_path().string();
  return bundle;
}

DatasetBundle load_dataset_dir(const fs::path& dir, const LoadOptions& options) {
  if (!fs::is_directory(dir)) throw ValidationError("dataset directory not found: " + dir.string());
  LoadOptions opts = options;
  std::string name = dir.filename().string();
  if (name.empty()) name = dir.parent_path().filename().string();
  const auto meta_file = dir / "dataset.json";
  if (fs::exists(meta_file)) {
    std::ifstream in(meta_file);
    const auto meta = nlohmann::json::parse(in, nullptr, false);
    if (meta.is_discarded()) throw ParseError(meta_file.string(), 1, "invalid JSON");
    name = meta.value("name", name);
    if (opts.num_classes == 0) opts.num_classes = meta.value("num_classes", std::size_t{0});
  }

  DatasetBundle bundle;
  if (fs::exists(dir / kEdgeFile)) {
    bundle = load_graph(dir / kEdgeFile, dir / kFeatureFile, dir / kLabelFile, dir / kSplitFile,
                        opts);
  } else if (fs::exists(dir / kBinaryCacheFile)) {
    bundle.graph = read_binary_cache(dir / kBinaryCacheFile);
    if (opts.row_normalize) bundle.graph = bundle.graph.row_normalized();
    bundle.provenance = "mggr:" + (dir / kBinaryCacheFile).string();
  } else {
    throw ValidationError("no " + std::string(kEdgeFile) + " or " + kBinaryCacheFile + " in " +
                          dir.string());
  }
  bundle.name = name;
  if (opts.row_normalize) bundle.provenance += " (row-normalized)";
  return bundle;
}

fs::path resolve_dataset_path(const std::string& arg) {
  fs::path p(arg);
  if (fs::exists(p)) return p;
  if (const char* root = std::getenv("MEGUIDE_DATA_DIR"); root != nullptr && *root != '\0') {
    const auto candidate = fs::path(root) / arg;
    if (fs::exists(candidate)) return candidate;
  }
  return p;
}

void save_dataset_dir(const DatasetBundle& bundle, const fs::path& dir) {
  fs::create_directories(dir);
  const Graph& g = bundle.graph;
  {
    std::ofstream out(dir / kEdgeFile, std::ios::binary);
    out << "# " << g.num_nodes() << " nodes, " << g.num_edges() << " undirected edges\n";
    for (const auto& [u, v] : g.edge_list()) out << u << ' ' << v << '\n';
  }
  {
    std::ofstream out(dir / kFeatureFile, std::ios::binary);
    char buf[64];
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
      const auto row = g.features(v);
      std::string line;
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (j != 0) line.push_back(',');
        const auto res = std::to_chars(buf, buf + sizeof(buf), row[j]);
        line.append(buf, res.ptr);
      }
      line.push_back('\n');
      out << line;
    }
  }
  {
    std::ofstream out(dir / kLabelFile, std::ios::binary);
    for (auto l : g.labels()) out << l << '\n';
  }
  {
    std::ofstream out(dir / kSplitFile, std::ios::binary);
    for (auto s : g.splits()) out << to_string(s) << '\n';
  }
  nlohmann::json meta = {{"name", bundle.name},
                         {"num_classes", g.num_classes()},
                         {"num_nodes", g.num_nodes()},
                         {"num_edges", g.num_edges()},
                         {"feature_dim", g.feature_dim()},
                         {"provenance", bundle.provenance}};
  std::ofstream(dir / "dataset.json") << meta.dump(2) << '\n';
}

void write_binary_cache(const Graph& g, const fs::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + file.string());
  out.write(kMagic, sizeof(kMagic));
  write_le<std::uint16_t>(out, kCacheVersion);
  write_le<std::uint64_t>(out, g.num_nodes());
  write_le<std::uint64_t>(out, g.num_edges());
  write_array(out, g.row_offsets());
  write_array(out, g.col_indices());
  write_array(out, std::vector<float>(g.feature_data().begin(), g.feature_data().end()));
  write_array(out, g.labels());
  std::vector<std::uint8_t> train, val, test;
  for (auto s : g.splits()) {
    train.push_back(s == Split::train);
    val.push_back(s == Split::val);
    test.push_back(s == Split::test);
  }
  write_array(out, train);
  write_array(out, val);
  write_array(out, test);
  write_le<std::uint64_t>(out, g.num_classes());
  write_le<std::uint64_t>(out, g.feature_dim());
}

Graph read_binary_cache(const fs::path& file) {
  auto in = open_input(file);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw ValidationError(file.string() + ": bad magic, not an MGGR cache");
  }
  const auto version = read_le<std::uint16_t>(in);
  if (version != kCacheVersion) {
    throw ValidationError(file.string() + ": unsupported cache version " + std::to_string(version));
  }
  const auto n = read_le<std::uint64_t>(in);
  const auto m = read_le<std::uint64_t>(in);
  constexpr std::uint64_t kMax = 1ULL << 36;
  auto offsets = read_array<std::uint64_t>(in, kMax);
  auto cols = read_array<NodeId>(in, kMax);
  auto features = read_array<float>(in, kMax);
  auto labels = read_array<std::int32_t>(in, kMax);
  const auto train = read_array<std::uint8_t>(in, kMax);
  const auto val = read_array<std::uint8_t>(in, kMax);
  const auto test = read_array<std::uint8_t>(in, kMax);
  const auto num_classes = read_le<std::uint64_t>(in);
  const auto dim = read_le<std::uint64_t>(in);
  if (labels.size() != n || cols.size() != 2 * m || train.size() != n || val.size() != n ||
      test.size() != n) {
    throw ShapeError(file.string() + ": array lengths inconsistent with header");
  }
  std::vector<Split> splits(n, Split::none);
  for (std::uint64_t v = 0; v < n; ++v) {
    const int count = train[v] + val[v] + test[v];
    if (count > 1) throw ValidationError("masks not disjoint at node " + std::to_string(v));
    if (train[v]) splits[v] = Split::train;
    if (val[v]) splits[v] = Split::val;
    if (test[v]) splits[v] = Split::test;
  }
  return Graph(std::move(offsets), std::move(cols), std::move(features), dim, std::move(labels),
               std::move(splits), num_classes);
}

}  // namespace meguide
