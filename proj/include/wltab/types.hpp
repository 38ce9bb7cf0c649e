#pragma once

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "wltab/errors.hpp"
#include "wltab/formula.hpp"
#include "wltab/graph.hpp"
#include "wltab/quantifier.hpp"

// Modal types realised by nodes: graded d-types (WL), majority d-types (CWL) and
// Q-characteristic formulas (Q-WL). All constructors work level by level over the
// whole graph: the (d+1)-types of a node are assembled from the d-types of its
// out-neighbours, and types are identified by structural equality of their
// normal forms.

namespace wltab {

enum class TypeKind { Graded, Majority, QCharacteristic };

struct TypeFormula {
  /// Complete description; model-checking it decides type membership.
  Formula formula;
  std::size_t depth = 0;
  TypeKind kind = TypeKind::Graded;
  QuantifierSet quantifiers;
  /// σ: the label part (the 0-type).
  Formula base;
  /// I: distinct (d-1)-types realised among the out-neighbours, ascending.
  std::vector<Formula> realized;
  /// count(τ) for graded types, aligned with `realized`.
  std::vector<std::size_t> counts;
  /// ℱ for majority types: minimal index sets into `realized` whose
  /// multiplicities sum to more than half the out-degree.
  std::vector<std::vector<std::size_t>> antichain;

  /// Majority types store only the positive Maj conjuncts; the negated ones
  /// follow from the antichain. Other kinds return `formula`.
  Formula compact() const {
    if (kind != TypeKind::Majority || depth == 0) return formula;
    std::vector<Formula> parts{base};
    for (const auto& t : realized) parts.push_back(Formula::diamond(t));
    parts.push_back(Formula::box(Formula::disj(realized)));
    for (const auto& j : antichain) parts.push_back(Formula::modal(builtin("maj"), subset_disjunction(j)));
    return Formula::conj(std::move(parts));
  }

  Formula subset_disjunction(const std::vector<std::size_t>& indices) const {
    std::vector<Formula> parts;
    for (std::size_t i : indices) parts.push_back(realized[i]);
    return Formula::disj(std::move(parts));
  }
};

namespace types_detail {

inline std::vector<Formula> zero_types(const LabeledGraph& g) {
  std::vector<Formula> literals;
  for (LabelId l = 0; l < g.label_count(); ++l) literals.push_back(Formula::prop(l));
  std::vector<Formula> per_label;
  for (LabelId own = 0; own < g.label_count(); ++own) {
    std::vector<Formula> parts;
    for (LabelId l = 0; l < g.label_count(); ++l)
      parts.push_back(l == own ? literals[l] : Formula::negation(literals[l]));
    per_label.push_back(Formula::conj(std::move(parts)));
  }
  std::vector<Formula> out;
  out.reserve(g.node_count());
  for (NodeId v = 0; v < g.node_count(); ++v) out.push_back(per_label[g.label(v)]);
  return out;
}

/// Distinct previous-level types among v's out-neighbours with multiplicities.
inline std::map<Formula, std::size_t> neighbour_types(const LabeledGraph& g, NodeId v,
                                                      const std::vector<Formula>& previous) {
  std::map<Formula, std::size_t> counts;
  for (NodeId u : g.out(v)) ++counts[previous[u]];
  return counts;
}

inline void check_cap(std::size_t count, std::size_t cap, const char* what) {
  if (count > cap || count >= 63)
    throw SizeError(std::string(what) + ": " + std::to_string(count) + " classes exceed the cap of " +
                    std::to_string(cap));
}

inline std::vector<std::size_t> bits_of(std::uint64_t mask) {
  std::vector<std::size_t> out;
  while (mask) {
    out.push_back(static_cast<std::size_t>(std::countr_zero(mask)));
    mask &= mask - 1;
  }
  return out;
}

}  // namespace types_detail

/// Graded modal d-types of every node:
///   σ ∧ ⋀_{τ∈I} ◊^{=count(τ)} τ ∧ ◻⋁I
inline std::vector<TypeFormula> graded_types(const LabeledGraph& g, std::size_t depth) {
  using namespace types_detail;
  const auto sigma = zero_types(g);
  std::vector<TypeFormula> types(g.node_count());
  for (NodeId v = 0; v < g.node_count(); ++v) types[v] = {sigma[v], 0, TypeKind::Graded, {}, sigma[v], {}, {}, {}};
  for (std::size_t d = 1; d <= depth; ++d) {
    std::vector<Formula> previous;
    for (const auto& t : types) previous.push_back(t.formula);
    for (NodeId v = 0; v < g.node_count(); ++v) {
      TypeFormula t{sigma[v], d, TypeKind::Graded, {}, sigma[v], {}, {}, {}};
      std::vector<Formula> parts{sigma[v]};
      for (const auto& [tau, count] : neighbour_types(g, v, previous)) {
        t.realized.push_back(tau);
        t.counts.push_back(count);
        parts.push_back(Formula::exactly(count, tau));
      }
      parts.push_back(Formula::box(Formula::disj(t.realized)));
      t.formula = Formula::conj(std::move(parts));
      types[v] = std::move(t);
    }
  }
  return types;
}

inline TypeFormula graded_type(const LabeledGraph& g, NodeId v, std::size_t depth) {
  return graded_types(g, depth).at(v);
}

/// Majority d-types of every node:
///   σ ∧ ⋀_{τ∈I} ◊τ ∧ ◻⋁I ∧ ⋀_{J∈ℱ} Maj(⋁J) ∧ ⋀_{J⊆I rejected} ¬Maj(⋁J)
/// The negated part is emitted for the maximal rejected J only, which is
/// equivalent because Maj is monotone. Throws SizeError when |I| > cap.
inline std::vector<TypeFormula> majority_types(const LabeledGraph& g, std::size_t depth, std::size_t cap = 16) {
  using namespace types_detail;
  const auto sigma = zero_types(g);
  const auto maj = builtin("maj");
  std::vector<TypeFormula> types(g.node_count());
  for (NodeId v = 0; v < g.node_count(); ++v) types[v] = {sigma[v], 0, TypeKind::Majority, {}, sigma[v], {}, {}, {}};
  for (std::size_t d = 1; d <= depth; ++d) {
    std::vector<Formula> previous;
    for (const auto& t : types) previous.push_back(t.formula);
    for (NodeId v = 0; v < g.node_count(); ++v) {
      TypeFormula t{sigma[v], d, TypeKind::Majority, {}, sigma[v], {}, {}, {}};
      for (const auto& [tau, count] : neighbour_types(g, v, previous)) {
        t.realized.push_back(tau);
        t.counts.push_back(count);
      }
      const std::size_t r = t.realized.size();
      check_cap(r, cap, "majority type");
      const std::size_t degree = g.out_degree(v);
      const std::uint64_t full = (std::uint64_t{1} << r) - 1;
      std::vector<std::size_t> sums(std::size_t{1} << r, 0);
      for (std::uint64_t m = 1; m <= full; ++m) {
        const auto low = static_cast<std::size_t>(std::countr_zero(m));
        sums[m] = sums[m & (m - 1)] + t.counts[low];
      }
      auto accepted = [&](std::uint64_t m) { return maj.accepts(degree, sums[m]); };

      std::vector<Formula> parts{sigma[v]};
      for (const auto& tau : t.realized) parts.push_back(Formula::diamond(tau));
      parts.push_back(Formula::box(Formula::disj(t.realized)));
      for (std::uint64_t m = 0; m <= full; ++m) {
        bool minimal_accepted = accepted(m), maximal_rejected = !accepted(m);
        for (std::size_t i = 0; i < r; ++i) {
          const std::uint64_t bit = std::uint64_t{1} << i;
          if ((m & bit) && accepted(m ^ bit)) minimal_accepted = false;
          if (!(m & bit) && !accepted(m | bit)) maximal_rejected = false;
        }
        if (minimal_accepted) {
          t.antichain.push_back(bits_of(m));
          parts.push_back(Formula::modal(maj, t.subset_disjunction(t.antichain.back())));
        }
        if (maximal_rejected) parts.push_back(Formula::negation(Formula::modal(maj, t.subset_disjunction(bits_of(m)))));
      }
      std::sort(t.antichain.begin(), t.antichain.end());
      t.formula = Formula::conj(std::move(parts));
      types[v] = std::move(t);
    }
  }
  return types;
}

inline TypeFormula majority_type(const LabeledGraph& g, NodeId v, std::size_t depth, std::size_t cap = 16) {
  return majority_types(g, depth, cap).at(v);
}

/// Characteristic formulas φ^{Q,d} of every node of `g`, valid over `g` itself
/// (use a disjoint union to compare pointed models from different graphs).
///
/// The (d+1)-formula of w is its 0-type conjoined with a ⟨Q⟩ literal per
/// quantifier and per tuple of subsets C of the d-classes that occur in some
/// out-neighbourhood of `g` (other classes cannot change any acceptance). The
/// literal is positive iff w satisfies it. For monotone width-1 quantifiers only
/// the minimal accepted and the maximal rejected C are emitted; by monotonicity
/// these pin down every other literal. Non-monotone quantifiers enumerate all
/// subsets and throw SizeError above `cap` classes (cap/2 for width 2).
inline std::vector<TypeFormula> q_characteristic_types(const LabeledGraph& g, std::size_t depth,
                                                       const QuantifierSet& quantifiers, std::size_t cap = 16) {
  using namespace types_detail;
  const QuantifierSet qs = resolve(quantifiers, g.max_out_degree());
  const auto sigma = zero_types(g);
  const std::size_t n = g.node_count();
  std::vector<Formula> current = sigma;

  for (std::size_t d = 1; d <= depth; ++d) {
    // d-classes realised in some out-neighbourhood, in formula order
    std::map<Formula, std::size_t> class_index;
    for (NodeId v = 0; v < n; ++v)
      for (NodeId u : g.out(v)) class_index.emplace(current[u], 0);
    std::vector<Formula> classes;
    for (auto& [f, idx] : class_index) {
      idx = classes.size();
      classes.push_back(f);
    }
    const std::size_t k = classes.size();

    std::map<std::vector<std::size_t>, Formula> disjunctions;
    auto disjunction = [&](const std::vector<std::size_t>& members) -> const Formula& {
      auto it = disjunctions.find(members);
      if (it != disjunctions.end()) return it->second;
      std::vector<Formula> parts;
      for (std::size_t i : members) parts.push_back(classes[i]);
      return disjunctions.emplace(members, Formula::disj(std::move(parts))).first->second;
    };
    std::map<std::tuple<std::size_t, std::vector<std::size_t>, std::vector<std::size_t>>, Formula> modal_cache;
    auto literal = [&](std::size_t qi, const std::vector<std::size_t>& c1, const std::vector<std::size_t>& c2,
                       bool positive) {
      auto key = std::make_tuple(qi, c1, c2);
      auto it = modal_cache.find(key);
      if (it == modal_cache.end()) {
        const auto& q = qs.members()[qi];
        std::vector<Formula> args{disjunction(c1)};
        if (q.width() == 2) args.push_back(disjunction(c2));
        it = modal_cache.emplace(std::move(key), Formula::modal(q, std::move(args))).first;
      }
      return positive ? it->second : Formula::negation(it->second);
    };

    std::vector<Formula> next(n);
    for (NodeId w = 0; w < n; ++w) {
      std::vector<std::size_t> count(k, 0);
      for (NodeId u : g.out(w)) ++count[class_index.at(current[u])];
      const std::size_t degree = g.out_degree(w);
      std::vector<std::size_t> realized, absent;
      for (std::size_t c = 0; c < k; ++c) (count[c] ? realized : absent).push_back(c);

      std::vector<Formula> parts{sigma[w]};
      for (std::size_t qi = 0; qi < qs.members().size(); ++qi) {
        const auto& q = qs.members()[qi];
        if (q.width() == 1 && q.monotone()) {
          const std::size_t r = realized.size();
          check_cap(r, cap, "characteristic formula");
          const std::uint64_t full = (std::uint64_t{1} << r) - 1;
          std::vector<std::size_t> sums(std::size_t{1} << r, 0);
          for (std::uint64_t m = 1; m <= full; ++m)
            sums[m] = sums[m & (m - 1)] + count[realized[static_cast<std::size_t>(std::countr_zero(m))]];
          auto accepted = [&](std::uint64_t m) { return q.accepts(degree, sums[m]); };
          auto members = [&](std::uint64_t m) {
            std::vector<std::size_t> out;
            for (std::size_t i : bits_of(m)) out.push_back(realized[i]);
            return out;
          };
          for (std::uint64_t m = 0; m <= full; ++m) {
            bool minimal_accepted = accepted(m), maximal_rejected = !accepted(m);
            for (std::size_t i = 0; i < r; ++i) {
              const std::uint64_t bit = std::uint64_t{1} << i;
              if ((m & bit) && accepted(m ^ bit)) minimal_accepted = false;
              if (!(m & bit) && !accepted(m | bit)) maximal_rejected = false;
            }
            if (minimal_accepted) parts.push_back(literal(qi, members(m), {}, true));
            if (maximal_rejected) {
              auto set = members(m);
              set.insert(set.end(), absent.begin(), absent.end());
              std::sort(set.begin(), set.end());
              parts.push_back(literal(qi, set, {}, false));
            }
          }
        } else if (q.width() == 1) {
          check_cap(k, cap, "characteristic formula");
          for (std::uint64_t m = 0; m < (std::uint64_t{1} << k); ++m) {
            std::size_t selected = 0;
            for (std::size_t c : bits_of(m)) selected += count[c];
            parts.push_back(literal(qi, bits_of(m), {}, q.accepts(degree, selected)));
          }
        } else {
          check_cap(2 * k, cap, "characteristic formula (width 2)");
          for (std::uint64_t m1 = 0; m1 < (std::uint64_t{1} << k); ++m1)
            for (std::uint64_t m2 = 0; m2 < (std::uint64_t{1} << k); ++m2) {
              VennProfile p;
              for (std::size_t c = 0; c < k; ++c) {
                const bool a = (m1 >> c) & 1, b = (m2 >> c) & 1;
                (a && b ? p.both : a ? p.first_only : b ? p.second_only : p.neither) += count[c];
              }
              parts.push_back(literal(qi, bits_of(m1), bits_of(m2), q.accepts(p)));
            }
        }
      }
      next[w] = Formula::conj(std::move(parts));
    }
    current = std::move(next);
  }

  std::vector<TypeFormula> out(n);
  for (NodeId w = 0; w < n; ++w) out[w] = {current[w], depth, TypeKind::QCharacteristic, qs, sigma[w], {}, {}, {}};
  return out;
}

inline TypeFormula q_characteristic(const LabeledGraph& g, NodeId v, std::size_t depth,
                                    const QuantifierSet& quantifiers, std::size_t cap = 16) {
  return q_characteristic_types(g, depth, quantifiers, cap).at(v);
}

}  // namespace wltab
