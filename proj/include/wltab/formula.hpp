#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "wltab/graph.hpp"
#include "wltab/quantifier.hpp"

namespace wltab {

enum class FormulaKind : std::uint8_t { Bot, Prop, Not, And, Or, Modal, GlobalModal };

class Formula;

namespace formula_detail {

inline std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  // splitmix64 finalizer over the running hash
  std::uint64_t z = h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_text(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) h = (h ^ c) * 1099511628211ULL;
  return h;
}

struct Node;

}  // namespace formula_detail

/// Immutable PL(Q) formula with global modalities. Handles share subtrees.
///
/// Conjunctions and disjunctions are kept in normal form: nested connectives of
/// the same kind are flattened, children sorted by the structural order and
/// deduplicated, singletons collapse to their child, and the empty conjunction
/// (disjunction) is ¬⊥ (⊥). Structural equality on normal forms is the formula
/// identity used throughout.
class Formula {
 public:
  /// ⊥
  Formula();

  static Formula bot();
  static Formula top() { return negation(bot()); }
  static Formula prop(LabelId label);
  static Formula negation(Formula f);
  static Formula conj(std::vector<Formula> parts);
  static Formula disj(std::vector<Formula> parts);
  static Formula modal(Quantifier q, std::vector<Formula> args);
  static Formula global(Quantifier q, std::vector<Formula> args);

  static Formula modal(Quantifier q, Formula arg) { return modal(std::move(q), std::vector<Formula>{std::move(arg)}); }
  static Formula global(Quantifier q, Formula arg) { return global(std::move(q), std::vector<Formula>{std::move(arg)}); }
  static Formula diamond(Formula f) { return modal(builtin("exists"), std::move(f)); }
  /// ◻φ = ¬◊¬φ
  static Formula box(Formula f) { return negation(diamond(negation(std::move(f)))); }
  static Formula at_least(std::size_t k, Formula f) {
    return modal(builtin("geq:" + std::to_string(k)), std::move(f));
  }
  /// ◊^{=k}φ = ◊^{≥k}φ ∧ ¬◊^{≥k+1}φ
  static Formula exactly(std::size_t k, const Formula& f) {
    return conj({at_least(k, f), negation(at_least(k + 1, f))});
  }

  FormulaKind kind() const noexcept;
  LabelId label() const;
  const Quantifier& quantifier() const;
  const std::vector<Formula>& children() const noexcept;
  std::uint64_t hash() const noexcept;
  /// Number of AST nodes; n-ary connectives count once.
  std::size_t size() const noexcept;
  std::size_t modal_depth() const noexcept;
  const formula_detail::Node* id() const noexcept { return node_.get(); }

  bool is_top() const noexcept { return kind() == FormulaKind::Not && children()[0].kind() == FormulaKind::Bot; }

  friend bool operator==(const Formula& a, const Formula& b);
  friend std::strong_ordering operator<=>(const Formula& a, const Formula& b);

 private:
  explicit Formula(std::shared_ptr<const formula_detail::Node> node) : node_(std::move(node)) {}
  static Formula make(FormulaKind kind, LabelId label, std::optional<Quantifier> q, std::vector<Formula> children);
  static Formula connective(FormulaKind kind, std::vector<Formula> parts);

  std::shared_ptr<const formula_detail::Node> node_;
};

namespace formula_detail {

struct Node {
  FormulaKind kind;
  LabelId label = 0;
  std::optional<Quantifier> quantifier;
  std::vector<Formula> children;
  std::uint64_t hash = 0;
  std::size_t size = 1;
  std::size_t depth = 0;
};

}  // namespace formula_detail

inline FormulaKind Formula::kind() const noexcept { return node_->kind; }
inline LabelId Formula::label() const {
  if (kind() != FormulaKind::Prop) throw std::logic_error("Formula::label on non-proposition");
  return node_->label;
}
inline const Quantifier& Formula::quantifier() const {
  if (!node_->quantifier) throw std::logic_error("Formula::quantifier on non-modal formula");
  return *node_->quantifier;
}
inline const std::vector<Formula>& Formula::children() const noexcept { return node_->children; }
inline std::uint64_t Formula::hash() const noexcept { return node_->hash; }
inline std::size_t Formula::size() const noexcept { return node_->size; }
inline std::size_t Formula::modal_depth() const noexcept { return node_->depth; }

inline bool operator==(const Formula& a, const Formula& b) {
  if (a.node_ == b.node_) return true;
  if (a.hash() != b.hash() || a.size() != b.size()) return false;
  return (a <=> b) == 0;
}

inline std::strong_ordering operator<=>(const Formula& a, const Formula& b) {
  if (a.node_ == b.node_) return std::strong_ordering::equal;
  if (auto c = a.kind() <=> b.kind(); c != 0) return c;
  if (auto c = a.size() <=> b.size(); c != 0) return c;
  switch (a.kind()) {
    case FormulaKind::Bot:
      return std::strong_ordering::equal;
    case FormulaKind::Prop:
      return a.label() <=> b.label();
    case FormulaKind::Modal:
    case FormulaKind::GlobalModal:
      if (auto c = a.quantifier().id() <=> b.quantifier().id(); c != 0) return c;
      break;
    default:
      break;
  }
  const auto& ca = a.children();
  const auto& cb = b.children();
  if (auto c = ca.size() <=> cb.size(); c != 0) return c;
  for (std::size_t i = 0; i < ca.size(); ++i)
    if (auto c = ca[i] <=> cb[i]; c != 0) return c;
  return std::strong_ordering::equal;
}

inline Formula Formula::make(FormulaKind kind, LabelId label, std::optional<Quantifier> q,
                             std::vector<Formula> children) {
  auto node = std::make_shared<formula_detail::Node>();
  node->kind = kind;
  node->label = label;
  node->quantifier = std::move(q);
  node->children = std::move(children);
  std::uint64_t h = formula_detail::mix(0x5851f42d4c957f2dULL, static_cast<std::uint64_t>(kind));
  if (kind == FormulaKind::Prop) h = formula_detail::mix(h, label);
  if (node->quantifier) h = formula_detail::mix(h, formula_detail::hash_text(node->quantifier->id()));
  std::size_t child_depth = 0;
  for (const auto& c : node->children) {
    h = formula_detail::mix(h, c.hash());
    node->size += c.size();
    child_depth = std::max(child_depth, c.modal_depth());
  }
  node->hash = h;
  const bool modal = kind == FormulaKind::Modal || kind == FormulaKind::GlobalModal;
  node->depth = child_depth + (modal ? 1 : 0);
  return Formula(std::move(node));
}

inline Formula Formula::bot() {
  static const Formula instance = make(FormulaKind::Bot, 0, std::nullopt, {});
  return instance;
}

inline Formula::Formula() : Formula(bot()) {}

inline Formula Formula::prop(LabelId label) { return make(FormulaKind::Prop, label, std::nullopt, {}); }

inline Formula Formula::negation(Formula f) { return make(FormulaKind::Not, 0, std::nullopt, {std::move(f)}); }

inline Formula Formula::connective(FormulaKind kind, std::vector<Formula> parts) {
  std::vector<Formula> flat;
  flat.reserve(parts.size());
  for (auto& p : parts) {
    if (p.kind() == kind)
      flat.insert(flat.end(), p.children().begin(), p.children().end());
    else
      flat.push_back(std::move(p));
  }
  std::sort(flat.begin(), flat.end());
  flat.erase(std::unique(flat.begin(), flat.end()), flat.end());
  if (flat.empty()) return kind == FormulaKind::And ? top() : bot();
  if (flat.size() == 1) return flat.front();
  return make(kind, 0, std::nullopt, std::move(flat));
}

inline Formula Formula::conj(std::vector<Formula> parts) { return connective(FormulaKind::And, std::move(parts)); }
inline Formula Formula::disj(std::vector<Formula> parts) { return connective(FormulaKind::Or, std::move(parts)); }

inline Formula Formula::modal(Quantifier q, std::vector<Formula> args) {
  if (static_cast<std::size_t>(q.width()) != args.size())
    throw std::invalid_argument("modality " + q.id() + " expects " + std::to_string(q.width()) + " argument(s)");
  return make(FormulaKind::Modal, 0, std::move(q), std::move(args));
}

inline Formula Formula::global(Quantifier q, std::vector<Formula> args) {
  if (static_cast<std::size_t>(q.width()) != args.size())
    throw std::invalid_argument("modality " + q.id() + " expects " + std::to_string(q.width()) + " argument(s)");
  return make(FormulaKind::GlobalModal, 0, std::move(q), std::move(args));
}

inline std::size_t modal_depth(const Formula& f) { return f.modal_depth(); }

/// Every proposition and every non-global modality occurs beneath a global modality.
inline bool is_global_rooted(const Formula& f) {
  switch (f.kind()) {
    case FormulaKind::Bot:
    case FormulaKind::GlobalModal:
      return true;
    case FormulaKind::Prop:
    case FormulaKind::Modal:
      return false;
    default:
      return std::all_of(f.children().begin(), f.children().end(), is_global_rooted);
  }
}

/// Rebuilds `f` with every proposition mapped through `map` (which may return any formula).
template <typename Map>
Formula map_props(const Formula& f, Map&& map) {
  switch (f.kind()) {
    case FormulaKind::Bot:
      return f;
    case FormulaKind::Prop:
      return map(f.label());
    case FormulaKind::Not:
      return Formula::negation(map_props(f.children()[0], map));
    default:
      break;
  }
  std::vector<Formula> kids;
  kids.reserve(f.children().size());
  for (const auto& c : f.children()) kids.push_back(map_props(c, map));
  switch (f.kind()) {
    case FormulaKind::And:
      return Formula::conj(std::move(kids));
    case FormulaKind::Or:
      return Formula::disj(std::move(kids));
    case FormulaKind::Modal:
      return Formula::modal(f.quantifier(), std::move(kids));
    default:
      return Formula::global(f.quantifier(), std::move(kids));
  }
}

}  // namespace wltab
