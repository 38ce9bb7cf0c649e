#pragma once

#include <algorithm>
#include <bit>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "wltab/errors.hpp"
#include "wltab/formula.hpp"
#include "wltab/graph.hpp"
#include "wltab/model_check.hpp"
#include "wltab/parallel.hpp"
#include "wltab/syntax.hpp"

namespace wltab {

/// Truth value of a global-rooted formula on g (the same at every node).
inline bool graph_satisfies(const LabeledGraph& g, const Formula& f) {
  if (!is_global_rooted(f)) throw NotGlobalRooted("graph_satisfies: formula is not global-rooted: " + render(f));
  Evaluator eval(g);
  const bool value = global_value(g, f, eval);
#ifndef NDEBUG
  const auto& ext = eval.extension(f);
  for (char x : ext)
    if ((x != 0) != value) throw std::logic_error("graph_satisfies: value depends on the node");
#endif
  return value;
}

struct Score {
  /// Best of the two orientations, in percent.
  double accuracy = 0;
  /// Percent of graphs where (formula holds) == (class is positive).
  double direct = 0;
  /// 100 - direct: the formula read as predicting the negative class.
  double complemented = 0;
  /// The reported accuracy uses the complemented reading.
  bool complemented_better = false;
};

inline Score score_values(const std::vector<char>& values, const std::vector<std::size_t>& graph_class,
                          std::size_t positive_class) {
  Score s;
  if (values.empty()) return s;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < values.size(); ++i) hits += (values[i] != 0) == (graph_class[i] == positive_class);
  s.direct = 100.0 * static_cast<double>(hits) / static_cast<double>(values.size());
  s.complemented = 100.0 * static_cast<double>(values.size() - hits) / static_cast<double>(values.size());
  s.complemented_better = s.complemented > s.direct;
  s.accuracy = std::max(s.direct, s.complemented);
  return s;
}

/// Scores φ as a whole-dataset graph classifier for `positive_class`.
inline Score score(const DatasetBundle& bundle, const Formula& f, std::size_t positive_class) {
  if (!is_global_rooted(f)) throw NotGlobalRooted("score: formula is not global-rooted: " + render(f));
  std::vector<char> values(bundle.graphs.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = graph_satisfies(bundle.graphs[i], f);
  return score_values(values, bundle.graph_class, positive_class);
}

/// Maps atoms l<k> of text-level formulas to label ids: l<k> names the raw label
/// value k - base; values absent from the alphabet become ⊥.
inline Formula bind_labels(const Formula& f, const std::vector<std::string>& alphabet, long long base = 0) {
  std::unordered_map<std::string, LabelId> id_of;
  for (std::size_t i = 0; i < alphabet.size(); ++i) id_of.emplace(alphabet[i], static_cast<LabelId>(i));
  return map_props(f, [&](LabelId k) {
    const auto it = id_of.find(std::to_string(static_cast<long long>(k) - base));
    return it == id_of.end() ? Formula::bot() : Formula::prop(it->second);
  });
}

/// Inverse of bind_labels for rendering: label id i prints as l<raw_i + base>.
inline AtomNamer label_namer(const std::vector<std::string>& alphabet, long long base = 0) {
  return [alphabet, base](LabelId id) {
    if (id < alphabet.size()) {
      try {
        return "l" + std::to_string(std::stoll(alphabet[id]) + base);
      } catch (const std::exception&) {
      }
    }
    return "l" + std::to_string(id);
  };
}

struct MinerConfig {
  bool diamond = true;         // ◊
  bool majority = true;        // Maj
  bool global_diamond = true;  // ◊_U
  bool global_majority = true; // Maj_U
  bool negation = true;
  bool conjunction = true;
  bool disjunction = true;
  std::size_t max_size = 6;
  std::size_t max_depth = 6;
  std::size_t target_class = 0;
  /// Scored-formula cap; 0 = none.
  std::size_t max_candidates = 0;
  /// Wall-clock cap in seconds; <= 0 = none.
  double max_seconds = 0;
  std::size_t top_k = 10;
  std::size_t threads = 0;
  long long label_base = 0;

  void validate() const {
    if (max_size < 1) throw Error("miner: max_size must be >= 1");
    if (!global_diamond && !global_majority) throw Error("miner: no global modality enabled");
  }
};

/// Parses an operator list such as "exists,maj,globals" or "<U>,maj,<>,!,|".
/// Tokens: exists|<>, maj, globals (= <U> and [maj,U]), <U>|gexists, [maj,U]|gmaj,
/// not|!, and|&, or||. Connectives default to all three unless one is listed.
inline void apply_operator_list(MinerConfig& cfg, const std::string& text) {
  bool any_connective = false;
  cfg.diamond = cfg.majority = cfg.global_diamond = cfg.global_majority = false;
  bool neg = false, conj = false, disj = false;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    std::string tok = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    tok.erase(0, tok.find_first_not_of(' '));
    tok.erase(tok.find_last_not_of(' ') + 1);
    if (tok == "exists" || tok == "<>") cfg.diamond = true;
    else if (tok == "maj") cfg.majority = true;
    else if (tok == "globals") cfg.global_diamond = cfg.global_majority = true;
    else if (tok == "<U>" || tok == "gexists") cfg.global_diamond = true;
    else if (tok == "[maj,U]" || tok == "gmaj") cfg.global_majority = true;
    else if (tok == "not" || tok == "!") neg = any_connective = true;
    else if (tok == "and" || tok == "&") conj = any_connective = true;
    else if (tok == "or" || tok == "|") disj = any_connective = true;
    else throw SpecError("unknown miner operator '" + tok + "'");
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (any_connective) {
    cfg.negation = neg;
    cfg.conjunction = conj;
    cfg.disjunction = disj;
  }
}

struct MinedFormula {
  Formula formula;
  std::string rendering;
  double accuracy = 0;
  /// True: graphs satisfying the formula are predicted positive.
  bool positive_when_true = true;
  std::size_t size = 0;
};

struct MinedResult {
  std::vector<MinedFormula> ranked;
  std::size_t candidates_evaluated = 0;
  bool budget_exhausted = false;
  /// Largest size whose candidates were all scored.
  std::size_t completed_size = 0;
};

namespace mine_detail {

using Bits = std::vector<std::uint64_t>;

enum class Category : std::uint8_t { Other, And, Or };

inline Category category(const Formula& f) {
  return f.kind() == FormulaKind::And ? Category::And : f.kind() == FormulaKind::Or ? Category::Or : Category::Other;
}

enum class Op : std::uint8_t { Atom, Not, GNot, Diamond, Maj, And, Or, Wrap };

/// How a candidate is built from pool entries. For And/Or the top bit of
/// level_a/level_b selects the global pool.
struct Task {
  Op op = Op::Atom;
  std::uint32_t level_a = 0, a = 0, level_b = 0, b = 0;
};

struct Entry {
  Formula formula;
  Category cat = Category::Other;
  /// Empty unless `stored`; entries of the last local size keep only `origin`
  /// and are rebuilt on use.
  Bits bits;
  bool stored = true;
  Task origin;
};

inline std::uint64_t hash_bits(const Bits& b, Category c) {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ static_cast<std::uint64_t>(c);
  for (std::uint64_t w : b) h = formula_detail::mix(h, w);
  return h;
}

/// Exact semantic dedup keyed by (category, bit vector).
class Seen {
 public:
  bool contains(const Bits& b, Category c) const {
    const auto it = buckets_.find(hash_bits(b, c));
    if (it == buckets_.end()) return false;
    for (const auto& [cat, bits] : it->second)
      if (cat == c && bits == b) return true;
    return false;
  }

  bool insert(const Bits& b, Category c) {
    auto& bucket = buckets_[hash_bits(b, c)];
    for (const auto& [cat, bits] : bucket)
      if (cat == c && bits == b) return false;
    bucket.emplace_back(c, b);
    return true;
  }

 private:
  std::unordered_map<std::uint64_t, std::vector<std::pair<Category, Bits>>> buckets_;
};

/// All graphs of a bundle as one node set with CSR adjacency.
struct Universe {
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> adj_begin{0};
  std::vector<std::uint32_t> adj;
  std::vector<LabelId> labels;
  std::size_t nodes = 0;
  std::size_t words = 0;

  explicit Universe(const DatasetBundle& b) {
    for (const auto& g : b.graphs) {
      const std::size_t base = offsets.back();
      for (NodeId v = 0; v < g.node_count(); ++v) {
        labels.push_back(g.label(v));
        for (NodeId u : g.out(v)) adj.push_back(static_cast<std::uint32_t>(base + u));
        adj_begin.push_back(adj.size());
      }
      offsets.push_back(base + g.node_count());
    }
    nodes = offsets.back();
    words = (nodes + 63) / 64;
  }

  static bool get(const Bits& b, std::size_t i) { return (b[i / 64] >> (i % 64)) & 1; }
  static void set(Bits& b, std::size_t i) { b[i / 64] |= std::uint64_t{1} << (i % 64); }

  Bits atom(LabelId l) const {
    Bits b(words, 0);
    for (std::size_t v = 0; v < nodes; ++v)
      if (labels[v] == l) set(b, v);
    return b;
  }

  Bits negate(const Bits& a) const {
    Bits b(words);
    for (std::size_t i = 0; i < words; ++i) b[i] = ~a[i];
    if (nodes % 64) b.back() &= (std::uint64_t{1} << (nodes % 64)) - 1;
    return b;
  }

  template <typename Accept>
  Bits modal(const Bits& a, Accept&& accept) const {
    Bits b(words, 0);
    for (std::size_t v = 0; v < nodes; ++v) {
      std::size_t hits = 0;
      for (std::size_t e = adj_begin[v]; e < adj_begin[v + 1]; ++e) hits += get(a, adj[e]);
      if (accept(adj_begin[v + 1] - adj_begin[v], hits)) set(b, v);
    }
    return b;
  }

  std::size_t count(const Bits& a, std::size_t begin, std::size_t end) const {
    std::size_t n = 0;
    for (std::size_t i = begin; i < end;) {
      if (i % 64 == 0 && i + 64 <= end) {
        n += static_cast<std::size_t>(std::popcount(a[i / 64]));
        i += 64;
      } else {
        n += get(a, i);
        ++i;
      }
    }
    return n;
  }

  /// Per-graph truth of a global modality over local extension a.
  template <typename Accept>
  Bits global(const Bits& a, Accept&& accept) const {
    const std::size_t graphs = offsets.size() - 1;
    Bits b((graphs + 63) / 64, 0);
    for (std::size_t g = 0; g < graphs; ++g)
      if (accept(offsets[g + 1] - offsets[g], count(a, offsets[g], offsets[g + 1]))) set(b, g);
    return b;
  }
};

inline Bits negate_n(const Bits& a, std::size_t n) {
  Bits b(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) b[i] = ~a[i];
  if (n % 64) b.back() &= (std::uint64_t{1} << (n % 64)) - 1;
  return b;
}

inline Bits combine(const Bits& a, const Bits& b, bool conj) {
  Bits out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = conj ? (a[i] & b[i]) : (a[i] | b[i]);
  return out;
}

/// Size of the normal form of x ∘ y before child deduplication.
inline std::size_t joined_size(const Entry& x, const Entry& y, Category c) {
  return (x.cat == c ? x.formula.size() - 1 : x.formula.size()) + (y.cat == c ? y.formula.size() - 1 : y.formula.size()) +
         1;
}

}  // namespace mine_detail

/// Size-ordered enumeration of global-rooted formulas with exact semantic
/// deduplication. Local (node-level) formulas are kept per size with their
/// extension over all nodes of the bundle; global-rooted formulas with their
/// per-graph truth values. Two formulas with the same values and the same top
/// connective are interchangeable, so only the first one found is kept.
/// Global modalities take local arguments only.
inline MinedResult mine(const DatasetBundle& bundle, const MinerConfig& cfg) {
  using namespace mine_detail;
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const Universe uni(bundle);
  const std::size_t graphs = bundle.graphs.size();
  const std::size_t threads = resolve_threads(cfg.threads);
  const auto namer = label_namer(bundle.label_alphabet, cfg.label_base);
  const Quantifier exists = builtin("exists"), maj = builtin("maj");
  auto maj_accept = [](std::size_t d, std::size_t s) { return 2 * s > d; };
  auto exists_accept = [](std::size_t, std::size_t s) { return s >= 1; };

  MinedResult result;
  std::vector<std::vector<Entry>> local(cfg.max_size + 1), global(cfg.max_size + 1);
  Seen local_seen, global_seen;
  std::unordered_set<std::uint64_t> unstored_seen;

  auto out_of_budget = [&] {
    if (cfg.max_candidates && result.candidates_evaluated >= cfg.max_candidates) return true;
    return cfg.max_seconds > 0 &&
           std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() >= cfg.max_seconds;
  };

  auto offer = [&](const Formula& f, const Bits& values) {
    std::vector<char> v(graphs);
    for (std::size_t g = 0; g < graphs; ++g) v[g] = Universe::get(values, g);
    const Score s = score_values(v, bundle.graph_class, cfg.target_class);
    ++result.candidates_evaluated;
    MinedFormula m{f, render(f, namer), s.accuracy, !s.complemented_better, f.size()};
    auto better = [](const MinedFormula& x, const MinedFormula& y) {
      if (x.accuracy != y.accuracy) return x.accuracy > y.accuracy;
      if (x.size != y.size) return x.size < y.size;
      return x.rendering < y.rendering;
    };
    auto& ranked = result.ranked;
    ranked.insert(std::upper_bound(ranked.begin(), ranked.end(), m, better), std::move(m));
    if (ranked.size() > cfg.top_k) ranked.pop_back();
  };

  struct Built {
    Entry entry;
    bool global = false;
  };

  // Local extension of a stored or rebuildable entry.
  std::function<Bits(const Entry&)> bits_of;
  std::function<std::vector<Built>(const Task&)> build = [&](const Task& t) -> std::vector<Built> {
    std::vector<Built> out;
    switch (t.op) {
      case Op::Atom: {
        const auto l = static_cast<LabelId>(t.a);
        out.push_back({Entry{Formula::prop(l), Category::Other, uni.atom(l), true, t}, false});
        break;
      }
      case Op::Not: {
        const auto& src = local[t.level_a][t.a];
        out.push_back({Entry{Formula::negation(src.formula), Category::Other, uni.negate(bits_of(src)), true, t}, false});
        break;
      }
      case Op::GNot: {
        const auto& src = global[t.level_a][t.a];
        out.push_back({Entry{Formula::negation(src.formula), Category::Other, negate_n(src.bits, graphs), true, t}, true});
        break;
      }
      case Op::Diamond:
      case Op::Maj: {
        const auto& src = local[t.level_a][t.a];
        const bool d = t.op == Op::Diamond;
        auto f = Formula::modal(d ? exists : maj, src.formula);
        if (f.modal_depth() > cfg.max_depth) break;
        const Bits a = bits_of(src);
        out.push_back({Entry{std::move(f), Category::Other, d ? uni.modal(a, exists_accept) : uni.modal(a, maj_accept),
                             true, t},
                       false});
        break;
      }
      case Op::Wrap: {
        const auto& src = local[t.level_a][t.a];
        if (src.formula.modal_depth() + 1 > cfg.max_depth) break;
        const Bits a = bits_of(src);
        if (cfg.global_diamond)
          out.push_back({Entry{Formula::global(exists, src.formula), Category::Other, uni.global(a, exists_accept),
                               true, t},
                         true});
        if (cfg.global_majority)
          out.push_back(
              {Entry{Formula::global(maj, src.formula), Category::Other, uni.global(a, maj_accept), true, t}, true});
        break;
      }
      case Op::And:
      case Op::Or: {
        const bool conj = t.op == Op::And;
        const bool is_global = (t.level_a >> 31) != 0;
        const auto& pool = is_global ? global : local;
        const auto& x = pool[t.level_a & 0x7fffffffu][t.a];
        const auto& y = pool[t.level_b & 0x7fffffffu][t.b];
        auto f = conj ? Formula::conj({x.formula, y.formula}) : Formula::disj({x.formula, y.formula});
        const Category cat = category(f);
        Bits bits = is_global ? combine(x.bits, y.bits, conj) : combine(bits_of(x), bits_of(y), conj);
        out.push_back({Entry{std::move(f), cat, std::move(bits), true, t}, is_global});
        break;
      }
    }
    return out;
  };
  bits_of = [&](const Entry& e) -> Bits {
    if (e.stored) return e.bits;
    return build(e.origin).front().entry.bits;
  };

  for (std::size_t size = 1; size <= cfg.max_size; ++size) {
    const bool last = size == cfg.max_size;
    // local formulas of the second-to-last size are only ever wrapped once
    const bool keep_local_bits = size + 1 < cfg.max_size;
    std::vector<Task> tasks;
    if (size == 1) {
      if (!last)
        for (std::size_t l = 0; l < bundle.label_alphabet.size(); ++l)
          tasks.push_back({Op::Atom, 0, static_cast<std::uint32_t>(l), 0, 0});
    } else {
      const auto prev = static_cast<std::uint32_t>(size - 1);
      for (std::uint32_t i = 0; i < local[prev].size(); ++i) {
        if (!last) {
          if (cfg.negation) tasks.push_back({Op::Not, prev, i, 0, 0});
          if (cfg.diamond) tasks.push_back({Op::Diamond, prev, i, 0, 0});
          if (cfg.majority) tasks.push_back({Op::Maj, prev, i, 0, 0});
        }
        tasks.push_back({Op::Wrap, prev, i, 0, 0});
      }
      if (cfg.negation)
        for (std::uint32_t i = 0; i < global[prev].size(); ++i) tasks.push_back({Op::GNot, prev, i, 0, 0});
      for (int pool = 0; pool < 2; ++pool) {
        if (pool == 0 && last) continue;
        const auto& P = pool ? global : local;
        const std::uint32_t tag = pool ? 0x80000000u : 0u;
        for (int c = 0; c < 2; ++c) {
          const bool conj = c == 0;
          if (conj ? !cfg.conjunction : !cfg.disjunction) continue;
          const Category cat = conj ? Category::And : Category::Or;
          for (std::uint32_t la = 1; la < size; ++la)
            for (std::uint32_t lb = la; lb < size; ++lb)
              for (std::uint32_t i = 0; i < P[la].size(); ++i)
                for (std::uint32_t j = la == lb ? i + 1 : 0; j < P[lb].size(); ++j)
                  if (joined_size(P[la][i], P[lb][j], cat) == size)
                    tasks.push_back({conj ? Op::And : Op::Or, la | tag, i, lb | tag, j});
        }
      }
    }

    constexpr std::size_t chunk = 1024;
    bool stopped = false;
    for (std::size_t begin = 0; begin < tasks.size() && !stopped; begin += chunk) {
      const std::size_t end = std::min(tasks.size(), begin + chunk);
      std::vector<std::vector<Built>> built(end - begin);
      parallel_for(end - begin, threads, [&](std::size_t k) { built[k] = build(tasks[begin + k]); });
      for (auto& group : built) {
        for (auto& b : group) {
          if (b.entry.formula.size() != size) continue;
          if (b.global) {
            if (!global_seen.insert(b.entry.bits, b.entry.cat)) continue;
            if (out_of_budget()) {
              stopped = true;
              break;
            }
            offer(b.entry.formula, b.entry.bits);
            if (!last) global[size].push_back(std::move(b.entry));
          } else if (keep_local_bits) {
            if (!local_seen.insert(b.entry.bits, b.entry.cat)) continue;
            local[size].push_back(std::move(b.entry));
          } else {
            if (local_seen.contains(b.entry.bits, b.entry.cat)) continue;
            if (!unstored_seen.insert(hash_bits(b.entry.bits, b.entry.cat)).second) continue;
            b.entry.bits = {};
            b.entry.stored = false;
            local[size].push_back(std::move(b.entry));
          }
        }
        if (stopped) break;
      }
      if (!stopped && end < tasks.size() && out_of_budget()) stopped = true;
    }
    if (stopped) {
      result.budget_exhausted = true;
      break;
    }
    result.completed_size = size;
  }
  return result;
}

}  // namespace wltab
