#pragma once

#include <cstddef>
#include <unordered_map>
#include <vector>

#include "wltab/errors.hpp"
#include "wltab/formula.hpp"
#include "wltab/graph.hpp"

namespace wltab {

/// Extension of a formula: ext[v] != 0 iff the formula holds at node v.
using Extension = std::vector<char>;

namespace check_detail {

inline void tally(VennProfile& p, char in_first, char in_second) {
  if (in_first && in_second)
    ++p.both;
  else if (in_first)
    ++p.first_only;
  else if (in_second)
    ++p.second_only;
  else
    ++p.neither;
}

}  // namespace check_detail

/// Bottom-up model checker over one graph. Subformula extensions are memoised by
/// node identity (the memo holds a reference to each node, so identities are
/// never reused while cached), so formulas that share subtrees (types, characteristic
/// formulas) are evaluated once per shared subtree. Not thread-safe; use one
/// evaluator per thread.
class Evaluator {
 public:
  explicit Evaluator(const LabeledGraph& graph) : graph_(graph) {}

  const Extension& extension(const Formula& f) {
    if (auto it = memo_.find(f.id()); it != memo_.end()) return it->second.second;
    Extension ext = compute(f);
    return memo_.emplace(f.id(), std::make_pair(f, std::move(ext))).first->second.second;
  }

  bool check(NodeId v, const Formula& f) { return extension(f)[v] != 0; }

  void clear() { memo_.clear(); }

 private:
  Extension compute(const Formula& f) {
    const std::size_t n = graph_.node_count();
    Extension out(n, 0);
    switch (f.kind()) {
      case FormulaKind::Bot:
        break;
      case FormulaKind::Prop:
        for (NodeId v = 0; v < n; ++v) out[v] = graph_.label(v) == f.label();
        break;
      case FormulaKind::Not: {
        const auto& a = extension(f.children()[0]);
        for (std::size_t v = 0; v < n; ++v) out[v] = !a[v];
        break;
      }
      case FormulaKind::And: {
        std::fill(out.begin(), out.end(), 1);
        for (const auto& c : f.children()) {
          const auto& a = extension(c);
          for (std::size_t v = 0; v < n; ++v) out[v] = out[v] && a[v];
        }
        break;
      }
      case FormulaKind::Or:
        for (const auto& c : f.children()) {
          const auto& a = extension(c);
          for (std::size_t v = 0; v < n; ++v) out[v] = out[v] || a[v];
        }
        break;
      case FormulaKind::Modal:
        if (f.quantifier().width() == 1) {
          const auto& a = extension(f.children()[0]);
          for (NodeId v = 0; v < n; ++v) {
            std::size_t selected = 0;
            for (NodeId u : graph_.out(v)) selected += a[u] != 0;
            out[v] = f.quantifier().accepts(graph_.out_degree(v), selected);
          }
        } else {
          const auto& a = extension(f.children()[0]);
          const auto& b = extension(f.children()[1]);
          for (NodeId v = 0; v < n; ++v) {
            VennProfile p;
            for (NodeId u : graph_.out(v)) check_detail::tally(p, a[u], b[u]);
            out[v] = f.quantifier().accepts(p);
          }
        }
        break;
      case FormulaKind::GlobalModal: {
        bool value;
        if (f.quantifier().width() == 1) {
          const auto& a = extension(f.children()[0]);
          std::size_t selected = 0;
          for (std::size_t v = 0; v < n; ++v) selected += a[v] != 0;
          value = f.quantifier().accepts(n, selected);
        } else {
          const auto& a = extension(f.children()[0]);
          const auto& b = extension(f.children()[1]);
          VennProfile p;
          for (std::size_t v = 0; v < n; ++v) check_detail::tally(p, a[v], b[v]);
          value = f.quantifier().accepts(p);
        }
        std::fill(out.begin(), out.end(), value);
        break;
      }
    }
    return out;
  }

  const LabeledGraph& graph_;
  std::unordered_map<const formula_detail::Node*, std::pair<Formula, Extension>> memo_;
};

inline bool check(const LabeledGraph& g, NodeId v, const Formula& f) { return Evaluator(g).check(v, f); }

/// Value of a formula evaluated with every modality replaced by its truth on the
/// whole graph; for global-rooted formulas this is the (node-independent) truth
/// value, and it is defined on empty graphs too.
inline bool global_value(const LabeledGraph& g, const Formula& f, Evaluator& eval) {
  switch (f.kind()) {
    case FormulaKind::Bot:
      return false;
    case FormulaKind::Not:
      return !global_value(g, f.children()[0], eval);
    case FormulaKind::And:
      for (const auto& c : f.children())
        if (!global_value(g, c, eval)) return false;
      return true;
    case FormulaKind::Or:
      for (const auto& c : f.children())
        if (global_value(g, c, eval)) return true;
      return false;
    case FormulaKind::GlobalModal: {
      const std::size_t n = g.node_count();
      if (f.quantifier().width() == 1) {
        const auto& a = eval.extension(f.children()[0]);
        std::size_t selected = 0;
        for (std::size_t v = 0; v < n; ++v) selected += a[v] != 0;
        return f.quantifier().accepts(n, selected);
      }
      const auto& a = eval.extension(f.children()[0]);
      const auto& b = eval.extension(f.children()[1]);
      VennProfile p;
      for (std::size_t v = 0; v < n; ++v) check_detail::tally(p, a[v], b[v]);
      return f.quantifier().accepts(p);
    }
    default:
      throw NotGlobalRooted("formula is not global-rooted");
  }
}

}  // namespace wltab
