#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wltab/errors.hpp"
#include "wltab/graph.hpp"
#include "wltab/parallel.hpp"
#include "wltab/quantifier.hpp"

// Q-WL colour refinement.
//
// Two nodes keep sharing a colour in round i+1 iff they share it in round i and,
// for every quantifier Q and every set C of round-i colours, Q gives the same
// verdict on (N(v), N(v) ∩ C). Each node's verdict function is stored in a
// canonical form that only mentions the colours whose membership in C can change
// a verdict (the relevant colours); comparing these forms decides the
// equivalence exactly.
//
//   monotone width 1   antichain of minimal accepted colour sets
//   other width 1      full table over the relevant colours
//   width 2            table over (C1, C2) assignments of the relevant colours
//   counting family    multiset of neighbour colours
//
// Colour ids are global: round 0 uses the label ids, later rounds draw fresh ids
// in the sorted order of the canonical encodings, so results do not depend on
// node order or on the number of worker threads.

namespace wltab {

using Color = std::uint64_t;

struct SignatureComponent {
  enum class Kind : std::uint8_t { Counts, Antichain, Table, VennTable };

  Kind kind = Kind::Counts;
  /// Quantifier id, or "counting" for the family fast path.
  std::string quantifier;
  /// Relevant colours, ascending (Counts, Table, VennTable).
  std::vector<Color> colors;
  /// Counts: multiplicity of colors[i] among the out-neighbours.
  std::vector<std::size_t> counts;
  /// Antichain: minimal accepted sets, each ascending; the family sorted.
  std::vector<std::vector<Color>> antichain;
  /// Table: bit m is the verdict on {colors[i] | bit i of m}.
  /// VennTable: entry a assigns colors[i] the cell (a >> 2i) & 3, where
  /// 0 = neither, 1 = first only, 2 = second only, 3 = both.
  std::vector<bool> table;
};

struct Signature {
  Color prior = 0;
  std::vector<SignatureComponent> components;
  /// Union of the relevant colours of all components, ascending.
  std::vector<Color> realized_pruned;

  std::vector<std::uint64_t> encode() const {
    std::vector<std::uint64_t> out{prior, components.size()};
    for (const auto& c : components) {
      out.push_back(static_cast<std::uint64_t>(c.kind));
      switch (c.kind) {
        case SignatureComponent::Kind::Counts:
          out.push_back(c.colors.size());
          for (std::size_t i = 0; i < c.colors.size(); ++i) {
            out.push_back(c.colors[i]);
            out.push_back(c.counts[i]);
          }
          break;
        case SignatureComponent::Kind::Antichain:
          out.push_back(c.antichain.size());
          for (const auto& set : c.antichain) {
            out.push_back(set.size());
            out.insert(out.end(), set.begin(), set.end());
          }
          break;
        case SignatureComponent::Kind::Table:
        case SignatureComponent::Kind::VennTable: {
          out.push_back(c.colors.size());
          out.insert(out.end(), c.colors.begin(), c.colors.end());
          std::uint64_t word = 0;
          for (std::size_t i = 0; i < c.table.size(); ++i) {
            if (c.table[i]) word |= std::uint64_t{1} << (i % 64);
            if (i % 64 == 63 || i + 1 == c.table.size()) {
              out.push_back(word);
              word = 0;
            }
          }
          break;
        }
      }
    }
    return out;
  }

  /// e.g. "c4 | exists{{7},{9}} | maj{{7,9}}"
  std::string render() const {
    auto color_set = [](const std::vector<Color>& s) {
      std::string out = "{";
      for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
      return out + "}";
    };
    std::string out = "c" + std::to_string(prior);
    for (const auto& c : components) {
      out += " | " + c.quantifier;
      switch (c.kind) {
        case SignatureComponent::Kind::Counts:
          out += "{";
          for (std::size_t i = 0; i < c.colors.size(); ++i)
            out += (i ? "," : "") + std::to_string(c.colors[i]) + ":" + std::to_string(c.counts[i]);
          out += "}";
          break;
        case SignatureComponent::Kind::Antichain:
          out += "{";
          for (std::size_t i = 0; i < c.antichain.size(); ++i) out += (i ? "," : "") + color_set(c.antichain[i]);
          out += "}";
          break;
        default:
          out += color_set(c.colors) + ":";
          for (bool b : c.table) out += b ? '1' : '0';
      }
    }
    return out;
  }

  bool operator==(const Signature& other) const { return encode() == other.encode(); }
};

struct RefineOptions {
  /// Largest relevant-colour count for table components (half of it for width 2).
  std::size_t cap = 16;
  /// Per-round wall-clock budget in seconds; <= 0 disables it.
  double round_timeout = 30.0;
  /// 0 = resolve_threads().
  std::size_t threads = 0;
  /// Counting-family multiset and `exists` shortcuts. Off = every member goes
  /// through the general route.
  bool fast_paths = true;
  /// Keep refining past `depth` until the partition is stable.
  bool to_stability = false;
};

namespace refine_detail {

struct Plan {
  bool counting = false;
  std::vector<Quantifier> members;
};

inline Plan make_plan(const QuantifierSet& q, std::size_t max_degree, bool fast_paths) {
  const QuantifierSet resolved = resolve(q, max_degree);
  Plan plan;
  plan.counting = fast_paths && resolved.counting();
  for (const auto& m : resolved.members())
    if (!(plan.counting && m.id().starts_with("geq:"))) plan.members.push_back(m);
  return plan;
}

class Ticker {
 public:
  explicit Ticker(const Deadline& deadline) : deadline_(deadline) {}
  void tick() {
    if (++steps_ % 4096 == 0) deadline_.check("refinement round");
  }

 private:
  const Deadline& deadline_;
  std::uint64_t steps_ = 0;
};

using ColorCounts = std::vector<std::pair<Color, std::size_t>>;

inline SignatureComponent antichain_component(const Quantifier& q, const ColorCounts& realized, std::size_t degree,
                                              bool fast_paths, Ticker& ticker) {
  SignatureComponent comp;
  comp.kind = SignatureComponent::Kind::Antichain;
  comp.quantifier = q.id();
  if (fast_paths && q.id() == "exists") {
    for (const auto& [c, n] : realized) comp.antichain.push_back({c});
    return comp;
  }
  const auto threshold = q.threshold(degree);
  if (!threshold) return comp;
  const std::size_t t = *threshold;
  if (t == 0) {
    comp.antichain.push_back({});
    return comp;
  }
  // Colours by count descending: a set found by extending a below-threshold
  // prefix with a colour of smallest count is minimal.
  ColorCounts order = realized;
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  const std::size_t r = order.size();
  std::vector<std::size_t> suffix(r + 1, 0);
  for (std::size_t i = r; i-- > 0;) suffix[i] = suffix[i + 1] + order[i].second;
  std::vector<Color> stack;
  auto dfs = [&](auto&& self, std::size_t from, std::size_t sum) -> void {
    for (std::size_t j = from; j < r; ++j) {
      if (sum + suffix[j] < t) break;
      ticker.tick();
      stack.push_back(order[j].first);
      const std::size_t next = sum + order[j].second;
      if (next >= t) {
        auto set = stack;
        std::sort(set.begin(), set.end());
        comp.antichain.push_back(std::move(set));
      } else {
        self(self, j + 1, next);
      }
      stack.pop_back();
    }
  };
  dfs(dfs, 0, 0);
  std::sort(comp.antichain.begin(), comp.antichain.end());
  return comp;
}

inline SignatureComponent table_component(const Quantifier& q, const ColorCounts& realized, std::size_t degree,
                                          std::size_t cap, Ticker& ticker) {
  const std::size_t r = realized.size();
  std::vector<char> accept(degree + 1);
  for (std::size_t s = 0; s <= degree; ++s) accept[s] = q.accepts(degree, s);
  // colour i is relevant iff some sum s of other colours has accept[s] != accept[s + n_i]
  std::vector<std::size_t> relevant;
  std::vector<char> reach(degree + 1);
  for (std::size_t i = 0; i < r; ++i) {
    std::fill(reach.begin(), reach.end(), 0);
    reach[0] = 1;
    for (std::size_t k = 0; k < r; ++k) {
      if (k == i) continue;
      ticker.tick();
      const std::size_t n = realized[k].second;
      for (std::size_t s = degree + 1; s-- > n;)
        if (reach[s - n]) reach[s] = 1;
    }
    const std::size_t n = realized[i].second;
    for (std::size_t s = 0; s + n <= degree; ++s)
      if (reach[s] && accept[s] != accept[s + n]) {
        relevant.push_back(i);
        break;
      }
  }
  if (relevant.size() > cap || relevant.size() >= 63)
    throw SizeError("quantifier " + q.id() + ": " + std::to_string(relevant.size()) +
                    " relevant colours exceed the cap of " + std::to_string(cap));
  SignatureComponent comp;
  comp.kind = SignatureComponent::Kind::Table;
  comp.quantifier = q.id();
  for (std::size_t i : relevant) comp.colors.push_back(realized[i].first);
  const std::size_t entries = std::size_t{1} << relevant.size();
  comp.table.resize(entries);
  for (std::size_t m = 0; m < entries; ++m) {
    ticker.tick();
    std::size_t sum = 0;
    for (std::size_t b = 0; b < relevant.size(); ++b)
      if ((m >> b) & 1) sum += realized[relevant[b]].second;
    comp.table[m] = accept[sum];
  }
  return comp;
}

inline SignatureComponent venn_component(const Quantifier& q, const ColorCounts& realized, std::size_t cap,
                                         Ticker& ticker) {
  const std::size_t r = realized.size();
  if (2 * r > cap || r >= 31)
    throw SizeError("quantifier " + q.id() + ": " + std::to_string(r) + " neighbour colours exceed the width-2 cap of " +
                    std::to_string(cap / 2));
  auto verdict = [&](auto&& cell_of, std::size_t k) {
    VennProfile p;
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t n = realized[i].second;
      switch (cell_of(i)) {
        case 0: p.neither += n; break;
        case 1: p.first_only += n; break;
        case 2: p.second_only += n; break;
        default: p.both += n;
      }
    }
    return q.accepts(p);
  };
  const std::size_t entries = std::size_t{1} << (2 * r);
  std::vector<char> full(entries);
  for (std::size_t a = 0; a < entries; ++a) {
    ticker.tick();
    full[a] = verdict([a](std::size_t i) { return (a >> (2 * i)) & 3; }, r);
  }
  std::vector<std::size_t> relevant;
  for (std::size_t i = 0; i < r; ++i) {
    bool rel = false;
    for (std::size_t a = 0; a < entries && !rel; ++a) {
      if ((a >> (2 * i)) & 3) continue;
      for (std::size_t x = 1; x < 4 && !rel; ++x) rel = full[a] != full[a | (x << (2 * i))];
    }
    if (rel) relevant.push_back(i);
  }
  SignatureComponent comp;
  comp.kind = SignatureComponent::Kind::VennTable;
  comp.quantifier = q.id();
  for (std::size_t i : relevant) comp.colors.push_back(realized[i].first);
  const std::size_t reduced = std::size_t{1} << (2 * relevant.size());
  comp.table.resize(reduced);
  for (std::size_t a = 0; a < reduced; ++a) {
    std::size_t index = 0;
    for (std::size_t b = 0; b < relevant.size(); ++b) index |= ((a >> (2 * b)) & 3) << (2 * relevant[b]);
    comp.table[a] = full[index];
  }
  return comp;
}

inline Signature compute_signature(const LabeledGraph& g, NodeId v, std::span<const Color> colors, const Plan& plan,
                                   const RefineOptions& opts, const Deadline& deadline) {
  Ticker ticker(deadline);
  ColorCounts realized;
  {
    std::vector<Color> nbr;
    nbr.reserve(g.out_degree(v));
    for (NodeId u : g.out(v)) nbr.push_back(colors[u]);
    std::sort(nbr.begin(), nbr.end());
    for (Color c : nbr) {
      if (!realized.empty() && realized.back().first == c)
        ++realized.back().second;
      else
        realized.emplace_back(c, 1);
    }
  }
  const std::size_t degree = g.out_degree(v);
  Signature sig;
  sig.prior = colors[v];
  std::vector<Color> relevant;
  if (plan.counting) {
    SignatureComponent comp;
    comp.kind = SignatureComponent::Kind::Counts;
    comp.quantifier = "counting";
    for (const auto& [c, n] : realized) {
      comp.colors.push_back(c);
      comp.counts.push_back(n);
      relevant.push_back(c);
    }
    sig.components.push_back(std::move(comp));
  }
  for (const auto& q : plan.members) {
    SignatureComponent comp;
    if (q.width() == 2)
      comp = venn_component(q, realized, opts.cap, ticker);
    else if (q.monotone())
      comp = antichain_component(q, realized, degree, opts.fast_paths, ticker);
    else
      comp = table_component(q, realized, degree, opts.cap, ticker);
    if (comp.kind == SignatureComponent::Kind::Antichain) {
      for (const auto& set : comp.antichain) relevant.insert(relevant.end(), set.begin(), set.end());
    } else {
      relevant.insert(relevant.end(), comp.colors.begin(), comp.colors.end());
    }
    sig.components.push_back(std::move(comp));
  }
  std::sort(relevant.begin(), relevant.end());
  relevant.erase(std::unique(relevant.begin(), relevant.end()), relevant.end());
  sig.realized_pruned = std::move(relevant);
  return sig;
}

}  // namespace refine_detail

/// Canonical pruned signature of v under `colors` (one colour per node of g).
/// The counting family is resolved against g's maximum out-degree.
inline Signature node_signature(const LabeledGraph& g, NodeId v, std::span<const Color> colors,
                                const QuantifierSet& quantifiers, const RefineOptions& opts = {}) {
  const auto plan = refine_detail::make_plan(quantifiers, g.max_out_degree(), opts.fast_paths);
  return refine_detail::compute_signature(g, v, colors, plan, opts, Deadline());
}

struct ColorInfo {
  std::size_t round = 0;
  std::string rendering;
};

struct RefinementResult {
  /// Nodes of graph i occupy [offsets[i], offsets[i+1]) in every round.
  std::vector<std::size_t> offsets{0};
  /// rounds[r][node] = colour of node at round r.
  std::vector<std::vector<Color>> rounds;
  std::map<Color, ColorInfo> registry;
  /// First r whose partition equals that of round r+1, once observed.
  std::optional<std::size_t> stable_round;
  std::string quantifier_spec;

  std::size_t graph_count() const noexcept { return offsets.size() - 1; }
  std::size_t depth() const noexcept { return rounds.empty() ? 0 : rounds.size() - 1; }

  std::span<const Color> colors(std::size_t round, std::size_t graph) const {
    return std::span<const Color>(rounds[round]).subspan(offsets[graph], offsets[graph + 1] - offsets[graph]);
  }

  std::size_t class_count(std::size_t round) const {
    auto c = rounds[round];
    std::sort(c.begin(), c.end());
    return static_cast<std::size_t>(std::unique(c.begin(), c.end()) - c.begin());
  }
};

/// Round-by-round driver over a fixed list of graphs sharing one colour registry.
class Refiner {
 public:
  Refiner(std::span<const LabeledGraph> graphs, const QuantifierSet& quantifiers, RefineOptions opts = {})
      : graphs_(graphs), opts_(opts) {
    if (quantifiers.family() && graphs.empty())
      throw Error("refinement with a quantifier family needs at least one graph");
    std::size_t max_degree = 0, labels = 1;
    for (const auto& g : graphs) {
      max_degree = std::max(max_degree, g.max_out_degree());
      labels = std::max(labels, g.label_count());
      result_.offsets.push_back(result_.offsets.back() + g.node_count());
    }
    plan_ = refine_detail::make_plan(quantifiers, max_degree, opts.fast_paths);
    result_.quantifier_spec = quantifiers.spec();
    const std::size_t n = result_.offsets.back();
    owner_.resize(n);
    std::vector<Color> round0(n);
    for (std::size_t gi = 0; gi < graphs.size(); ++gi)
      for (NodeId v = 0; v < graphs[gi].node_count(); ++v) {
        const std::size_t x = result_.offsets[gi] + v;
        owner_[x] = static_cast<std::uint32_t>(gi);
        round0[x] = graphs[gi].label(v);
        result_.registry.emplace(round0[x], ColorInfo{0, "l" + std::to_string(round0[x])});
      }
    next_color_ = labels;
    result_.rounds.push_back(std::move(round0));
    classes_ = result_.class_count(0);
  }

  std::size_t round() const noexcept { return result_.rounds.size() - 1; }
  std::size_t class_count() const noexcept { return classes_; }
  const RefinementResult& result() const noexcept { return result_; }
  RefinementResult take() { return std::move(result_); }

  /// Computes the next round. Returns false when it has the same partition as the
  /// previous one (the stable round is recorded the first time this happens).
  bool next_round() {
    const Deadline deadline = Deadline::after(opts_.round_timeout);
    const auto& prev = result_.rounds.back();
    const std::size_t n = prev.size();
    std::vector<std::vector<std::uint64_t>> encodings(n);
    parallel_for(n, resolve_threads(opts_.threads), [&](std::size_t x) {
      encodings[x] = signature_of(x, deadline).encode();
    });
    deadline.check("refinement round " + std::to_string(round() + 1));

    std::vector<std::uint32_t> order(n);
    for (std::size_t x = 0; x < n; ++x) order[x] = static_cast<std::uint32_t>(x);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
      return encodings[a] != encodings[b] ? encodings[a] < encodings[b] : a < b;
    });
    std::vector<Color> next(n);
    std::size_t distinct = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint32_t x = order[i];
      if (i == 0 || encodings[x] != encodings[order[i - 1]]) {
        ++distinct;
        result_.registry.emplace(next_color_, ColorInfo{round() + 1, signature_of(x, Deadline()).render()});
        ++next_color_;
      }
      next[x] = next_color_ - 1;
    }
    result_.rounds.push_back(std::move(next));
    const bool changed = distinct != classes_;
    if (!changed && !result_.stable_round) result_.stable_round = round() - 1;
    classes_ = distinct;
    return changed;
  }

  /// Drops the last round (and its registry entries). A stable round already
  /// observed is kept unless it lies beyond the new last round.
  void pop_round() {
    if (result_.rounds.size() <= 1) return;
    const std::size_t r = round();
    for (auto it = result_.registry.begin(); it != result_.registry.end();) {
      if (it->second.round == r) {
        it = result_.registry.erase(it);
        --next_color_;
      } else {
        ++it;
      }
    }
    result_.rounds.pop_back();
    if (result_.stable_round && *result_.stable_round > round()) result_.stable_round.reset();
    classes_ = result_.class_count(round());
  }

 private:
  Signature signature_of(std::size_t x, const Deadline& deadline) const {
    const std::size_t gi = owner_[x];
    const auto colors = std::span<const Color>(result_.rounds.back())
                            .subspan(result_.offsets[gi], result_.offsets[gi + 1] - result_.offsets[gi]);
    return refine_detail::compute_signature(graphs_[gi], static_cast<NodeId>(x - result_.offsets[gi]), colors, plan_,
                                            opts_, deadline);
  }

  std::span<const LabeledGraph> graphs_;
  RefineOptions opts_;
  refine_detail::Plan plan_;
  RefinementResult result_;
  std::vector<std::uint32_t> owner_;
  Color next_color_ = 0;
  std::size_t classes_ = 0;
};

/// Rounds 0..depth. With opts.to_stability, refinement continues past `depth`
/// until the partition is stable and the result ends at the stable round.
inline RefinementResult refine(std::span<const LabeledGraph> graphs, std::size_t depth,
                               const QuantifierSet& quantifiers, const RefineOptions& opts = {}) {
  Refiner refiner(graphs, quantifiers, opts);
  while (refiner.round() < depth) refiner.next_round();
  if (opts.to_stability) {
    while (!refiner.result().stable_round) refiner.next_round();
    while (refiner.round() > *refiner.result().stable_round) refiner.pop_round();
  }
  return refiner.take();
}

inline RefinementResult refine(const LabeledGraph& g, std::size_t depth, const QuantifierSet& quantifiers,
                               const RefineOptions& opts = {}) {
  return refine(std::span<const LabeledGraph>(&g, 1), depth, quantifiers, opts);
}

/// Smallest r whose partition equals the partition of round r+1.
inline std::size_t stable_depth(std::span<const LabeledGraph> graphs, const QuantifierSet& quantifiers,
                                const RefineOptions& opts = {}) {
  Refiner refiner(graphs, quantifiers, opts);
  while (!refiner.result().stable_round) refiner.next_round();
  return *refiner.result().stable_round;
}

inline std::size_t stable_depth(const LabeledGraph& g, const QuantifierSet& quantifiers,
                                const RefineOptions& opts = {}) {
  return stable_depth(std::span<const LabeledGraph>(&g, 1), quantifiers, opts);
}

/// Whether the two points get different round-d colours when their models are
/// refined as one disjoint union.
inline bool separated(const PointedModel& m1, const PointedModel& m2, std::size_t depth,
                      const QuantifierSet& quantifiers, const RefineOptions& opts = {}) {
  const LabeledGraph u = disjoint_union(m1.graph, m2.graph);
  const auto result = refine(u, depth, quantifiers, opts);
  const auto& last = result.rounds[depth];
  return last[m1.point] != last[m1.graph.node_count() + m2.point];
}

}  // namespace wltab
