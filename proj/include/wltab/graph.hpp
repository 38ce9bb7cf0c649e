#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace wltab {

using NodeId = std::uint32_t;
using LabelId = std::uint32_t;

/// Finite directed graph with exactly one label per node (a Kripke model whose
/// proposition alphabet is `0 .. label_count()-1`). Self-loops, parallel edges and
/// non-symmetric edge sets are all allowed. Adjacency order is kept for
/// determinism but no semantic operation depends on it.
class LabeledGraph {
 public:
  LabeledGraph() = default;

  LabeledGraph(std::vector<std::vector<NodeId>> out, std::vector<LabelId> labels, std::size_t label_count)
      : out_(std::move(out)), labels_(std::move(labels)), label_count_(label_count) {
    if (out_.size() != labels_.size()) throw std::invalid_argument("LabeledGraph: adjacency/label size mismatch");
    for (const auto& nbrs : out_)
      for (NodeId u : nbrs)
        if (u >= out_.size()) throw std::invalid_argument("LabeledGraph: neighbour index out of range");
    for (LabelId l : labels_)
      if (l >= label_count_) throw std::invalid_argument("LabeledGraph: label id outside alphabet");
  }

  /// Alphabet size defaults to one past the largest label (at least 1).
  LabeledGraph(std::vector<std::vector<NodeId>> out, std::vector<LabelId> labels)
      : LabeledGraph(std::move(out), labels, default_label_count(labels)) {}

  std::size_t node_count() const noexcept { return out_.size(); }
  std::size_t label_count() const noexcept { return label_count_; }
  std::span<const NodeId> out(NodeId v) const { return out_[v]; }
  std::size_t out_degree(NodeId v) const { return out_[v].size(); }
  LabelId label(NodeId v) const { return labels_[v]; }
  const std::vector<std::vector<NodeId>>& adjacency() const noexcept { return out_; }
  const std::vector<LabelId>& labels() const noexcept { return labels_; }

  std::size_t edge_count() const noexcept {
    std::size_t m = 0;
    for (const auto& nbrs : out_) m += nbrs.size();
    return m;
  }

  std::size_t max_out_degree() const noexcept {
    std::size_t k = 0;
    for (const auto& nbrs : out_) k = std::max(k, nbrs.size());
    return k;
  }

  /// True when every edge u->v has a matching v->u (multiplicities included).
  bool is_symmetric() const {
    std::vector<std::pair<NodeId, NodeId>> fwd, rev;
    for (NodeId v = 0; v < out_.size(); ++v)
      for (NodeId u : out_[v]) {
        fwd.emplace_back(v, u);
        rev.emplace_back(u, v);
      }
    std::sort(fwd.begin(), fwd.end());
    std::sort(rev.begin(), rev.end());
    return fwd == rev;
  }

  bool operator==(const LabeledGraph&) const = default;

 private:
  static std::size_t default_label_count(const std::vector<LabelId>& labels) {
    LabelId m = 0;
    for (LabelId l : labels) m = std::max(m, l);
    return static_cast<std::size_t>(m) + 1;
  }

  std::vector<std::vector<NodeId>> out_;
  std::vector<LabelId> labels_;
  std::size_t label_count_ = 1;
};

struct PointedModel {
  LabeledGraph graph;
  NodeId point = 0;
};

/// A labelled graph-classification dataset. `label_alphabet[id]` is the raw label
/// text for label id `id`; `class_values[c]` the raw graph label for class id `c`.
struct DatasetBundle {
  std::string name;
  std::vector<LabeledGraph> graphs;
  std::vector<std::size_t> graph_class;
  std::vector<std::string> class_values;
  std::vector<std::string> label_alphabet;
  /// Edges listed more than once in the source file (kept, not merged).
  std::size_t duplicate_edges = 0;

  std::size_t node_count() const noexcept {
    std::size_t n = 0;
    for (const auto& g : graphs) n += g.node_count();
    return n;
  }

  std::size_t max_out_degree() const noexcept {
    std::size_t k = 0;
    for (const auto& g : graphs) k = std::max(k, g.max_out_degree());
    return k;
  }

  bool operator==(const DatasetBundle&) const = default;
};

/// Nodes of `b` are shifted by `a.node_count()`; no edges cross the parts.
inline LabeledGraph disjoint_union(const LabeledGraph& a, const LabeledGraph& b) {
  auto out = a.adjacency();
  auto labels = a.labels();
  const auto shift = static_cast<NodeId>(a.node_count());
  for (NodeId v = 0; v < b.node_count(); ++v) {
    std::vector<NodeId> nbrs;
    nbrs.reserve(b.out_degree(v));
    for (NodeId u : b.out(v)) nbrs.push_back(u + shift);
    out.push_back(std::move(nbrs));
    labels.push_back(b.label(v));
  }
  return {std::move(out), std::move(labels), std::max(a.label_count(), b.label_count())};
}

/// Erdős–Rényi style directed graph: each ordered pair (u,v), u != v, is an edge
/// independently with probability `edge_prob`; labels uniform. Same seed, same graph.
inline LabeledGraph random_graph(std::size_t n, double edge_prob, std::size_t label_count, std::uint64_t seed) {
  if (edge_prob < 0.0 || edge_prob > 1.0) throw std::invalid_argument("random_graph: edge_prob outside [0,1]");
  if (label_count == 0) throw std::invalid_argument("random_graph: label_count must be >= 1");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution edge(edge_prob);
  std::uniform_int_distribution<LabelId> pick(0, static_cast<LabelId>(label_count - 1));
  std::vector<LabelId> labels(n);
  for (auto& l : labels) l = pick(rng);
  std::vector<std::vector<NodeId>> out(n);
  for (NodeId v = 0; v < n; ++v)
    for (NodeId u = 0; u < n; ++u)
      if (u != v && edge(rng)) out[v].push_back(u);
  return {std::move(out), std::move(labels), label_count};
}

/// Relabels node v as perm[v]. `perm` must be a permutation of 0..n-1.
inline LabeledGraph permuted(const LabeledGraph& g, std::span<const NodeId> perm) {
  const std::size_t n = g.node_count();
  if (perm.size() != n) throw std::invalid_argument("permuted: permutation size mismatch");
  std::vector<std::vector<NodeId>> out(n);
  std::vector<LabelId> labels(n);
  for (NodeId v = 0; v < n; ++v) {
    labels[perm[v]] = g.label(v);
    auto& nbrs = out[perm[v]];
    for (NodeId u : g.out(v)) nbrs.push_back(perm[u]);
  }
  return {std::move(out), std::move(labels), g.label_count()};
}

inline std::vector<NodeId> random_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<NodeId> perm(n);
  for (NodeId i = 0; i < n; ++i) perm[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

struct DegreeLabeling {
  LabeledGraph graph;
  std::vector<std::string> alphabet;  // sorted distinct out-degrees, as text
};

namespace detail {

inline std::vector<std::string> degree_alphabet(const std::map<std::size_t, LabelId>& ids) {
  std::vector<std::string> alphabet;
  alphabet.reserve(ids.size());
  for (const auto& [deg, id] : ids) alphabet.push_back(std::to_string(deg));
  return alphabet;
}

inline LabeledGraph relabel_by_degree(const LabeledGraph& g, const std::map<std::size_t, LabelId>& ids) {
  std::vector<LabelId> labels(g.node_count());
  for (NodeId v = 0; v < g.node_count(); ++v) labels[v] = ids.at(g.out_degree(v));
  return {g.adjacency(), std::move(labels), ids.size()};
}

}  // namespace detail

/// Replaces every node label by (the id of) its out-degree.
inline DegreeLabeling assign_degree_labels(const LabeledGraph& g) {
  std::map<std::size_t, LabelId> ids;
  for (NodeId v = 0; v < g.node_count(); ++v) ids.emplace(g.out_degree(v), 0);
  LabelId next = 0;
  for (auto& [deg, id] : ids) id = next++;
  return {detail::relabel_by_degree(g, ids), detail::degree_alphabet(ids)};
}

/// Dataset-wide variant: one alphabet shared by all graphs.
inline DatasetBundle assign_degree_labels(const DatasetBundle& bundle) {
  std::map<std::size_t, LabelId> ids;
  for (const auto& g : bundle.graphs)
    for (NodeId v = 0; v < g.node_count(); ++v) ids.emplace(g.out_degree(v), 0);
  LabelId next = 0;
  for (auto& [deg, id] : ids) id = next++;
  DatasetBundle out = bundle;
  out.label_alphabet = detail::degree_alphabet(ids);
  for (auto& g : out.graphs) g = detail::relabel_by_degree(g, ids);
  return out;
}

}  // namespace wltab
