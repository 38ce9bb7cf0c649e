#pragma once

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wltab/errors.hpp"
#include "wltab/graph.hpp"

// TUDataset text format reader/writer.
//
//   {name}_A.txt                one edge "i, j" per line, 1-based global node ids
//   {name}_graph_indicator.txt  line k: graph id (1-based) of global node k
//   {name}_graph_labels.txt     line g: class label of graph g
//   {name}_node_labels.txt      line k: integer label of global node k (optional)
//
// Node attribute files are ignored.

namespace wltab {

namespace tu_detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline long long parse_int(std::string_view tok, const std::string& file, std::size_t line) {
  tok = trim(tok);
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  long long value = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size())
    throw ParseError(file, line, "expected an integer, got '" + std::string(tok) + "'");
  return value;
}

/// Non-blank lines of a file; blank lines are only tolerated at the end.
inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  for (std::size_t i = 0; i < lines.size(); ++i)
    if (trim(lines[i]).empty()) throw ParseError(path.string(), i + 1, "unexpected blank line");
  return lines;
}

inline std::vector<long long> read_ints(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  std::vector<long long> values;
  values.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) values.push_back(parse_int(lines[i], path.string(), i + 1));
  return values;
}

inline std::filesystem::path file_for(const std::filesystem::path& dir, const std::string& name, const char* suffix) {
  return dir / (name + "_" + suffix + ".txt");
}

}  // namespace tu_detail

inline DatasetBundle parse_tudataset(const std::filesystem::path& directory, const std::string& name) {
  using namespace tu_detail;
  const auto a_path = file_for(directory, name, "A");
  const auto ind_path = file_for(directory, name, "graph_indicator");
  const auto gl_path = file_for(directory, name, "graph_labels");
  const auto nl_path = file_for(directory, name, "node_labels");
  for (const auto& p : {a_path, ind_path, gl_path})
    if (!std::filesystem::exists(p)) throw ParseError(p.string(), 0, "missing mandatory file");

  const auto indicator = read_ints(ind_path);
  const auto graph_labels = read_ints(gl_path);
  const std::size_t n_graphs = graph_labels.size();
  const std::size_t n_nodes = indicator.size();

  // Global node k -> (graph, local index).
  std::vector<std::size_t> graph_of(n_nodes), local_of(n_nodes);
  std::vector<std::size_t> sizes(n_graphs, 0);
  for (std::size_t k = 0; k < n_nodes; ++k) {
    if (indicator[k] < 1 || static_cast<std::size_t>(indicator[k]) > n_graphs)
      throw ParseError(ind_path.string(), k + 1, "graph id out of range");
    graph_of[k] = static_cast<std::size_t>(indicator[k] - 1);
    local_of[k] = sizes[graph_of[k]]++;
  }

  DatasetBundle bundle;
  bundle.name = name;

  std::vector<long long> raw_labels(n_nodes, 0);
  if (std::filesystem::exists(nl_path)) {
    raw_labels = read_ints(nl_path);
    if (raw_labels.size() != n_nodes)
      throw ParseError(nl_path.string(), 0, "node label count does not match graph indicator");
  }
  std::map<long long, LabelId> label_ids;
  for (long long l : raw_labels) label_ids.emplace(l, 0);
  {
    LabelId next = 0;
    for (auto& [raw, id] : label_ids) {
      id = next++;
      bundle.label_alphabet.push_back(std::to_string(raw));
    }
  }

  std::map<long long, std::size_t> class_ids;
  for (long long c : graph_labels) {
    auto [it, inserted] = class_ids.emplace(c, class_ids.size());
    if (inserted) bundle.class_values.push_back(std::to_string(c));
    bundle.graph_class.push_back(it->second);
  }

  std::vector<std::vector<std::vector<NodeId>>> adjacency(n_graphs);
  for (std::size_t g = 0; g < n_graphs; ++g) adjacency[g].resize(sizes[g]);
  std::set<std::pair<long long, long long>> seen;
  const auto a_lines = read_lines(a_path);
  for (std::size_t i = 0; i < a_lines.size(); ++i) {
    const std::string_view line = a_lines[i];
    const auto comma = line.find(',');
    if (comma == std::string_view::npos) throw ParseError(a_path.string(), i + 1, "expected 'i, j'");
    const long long src = parse_int(line.substr(0, comma), a_path.string(), i + 1);
    const long long dst = parse_int(line.substr(comma + 1), a_path.string(), i + 1);
    for (long long node : {src, dst})
      if (node < 1 || static_cast<std::size_t>(node) > n_nodes)
        throw ParseError(a_path.string(), i + 1, "node id out of range");
    const auto s = static_cast<std::size_t>(src - 1), t = static_cast<std::size_t>(dst - 1);
    if (graph_of[s] != graph_of[t]) throw ParseError(a_path.string(), i + 1, "cross-graph edge");
    if (!seen.emplace(src, dst).second) ++bundle.duplicate_edges;
    adjacency[graph_of[s]][local_of[s]].push_back(static_cast<NodeId>(local_of[t]));
  }

  std::vector<std::vector<LabelId>> labels(n_graphs);
  for (std::size_t g = 0; g < n_graphs; ++g) labels[g].resize(sizes[g]);
  for (std::size_t k = 0; k < n_nodes; ++k) labels[graph_of[k]][local_of[k]] = label_ids.at(raw_labels[k]);

  const std::size_t alphabet_size = std::max<std::size_t>(label_ids.size(), 1);
  if (label_ids.empty()) bundle.label_alphabet = {"0"};
  bundle.graphs.reserve(n_graphs);
  for (std::size_t g = 0; g < n_graphs; ++g)
    bundle.graphs.emplace_back(std::move(adjacency[g]), std::move(labels[g]), alphabet_size);
  return bundle;
}

/// Writes `bundle` in TUDataset layout. Node labels are always written, so label
/// alphabets must be integer text.
inline void write_tudataset(const DatasetBundle& bundle, const std::filesystem::path& directory,
                            const std::string& name) {
  using namespace tu_detail;
  std::filesystem::create_directories(directory);
  auto open = [&](const char* suffix) {
    const auto p = file_for(directory, name, suffix);
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write " + p.string());
    return out;
  };
  auto a = open("A");
  auto ind = open("graph_indicator");
  auto gl = open("graph_labels");
  auto nl = open("node_labels");
  std::size_t base = 1;
  for (std::size_t g = 0; g < bundle.graphs.size(); ++g) {
    const auto& graph = bundle.graphs[g];
    gl << bundle.class_values.at(bundle.graph_class.at(g)) << '\n';
    for (NodeId v = 0; v < graph.node_count(); ++v) {
      ind << g + 1 << '\n';
      const auto& raw = bundle.label_alphabet.at(graph.label(v));
      (void)parse_int(raw, "<label alphabet>", 0);
      nl << raw << '\n';
      for (NodeId u : graph.out(v)) a << base + v << ", " << base + u << '\n';
    }
    base += graph.node_count();
  }
}

}  // namespace wltab
