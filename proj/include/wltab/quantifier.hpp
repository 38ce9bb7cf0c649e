#pragma once

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "wltab/errors.hpp"

namespace wltab {

/// Isomorphism type of (D, P1, P2): the four Venn-cell cardinalities.
struct VennProfile {
  std::size_t both = 0;         // |P1 ∩ P2|
  std::size_t first_only = 0;   // |P1 \ P2|
  std::size_t second_only = 0;  // |P2 \ P1|
  std::size_t neither = 0;      // |D \ (P1 ∪ P2)|

  std::size_t domain() const noexcept { return both + first_only + second_only + neither; }
  std::size_t first() const noexcept { return both + first_only; }
  std::size_t second() const noexcept { return both + second_only; }
};

/// A generalized quantifier of width 1 or 2. Acceptance sees only cardinalities,
/// so isomorphism closure holds by construction. Equality is by id.
class Quantifier {
 public:
  using UnaryAccept = std::function<bool(std::size_t domain, std::size_t selected)>;
  using BinaryAccept = std::function<bool(const VennProfile&)>;

  static Quantifier unary(std::string id, UnaryAccept accept, bool monotone = false) {
    Quantifier q;
    q.id_ = std::move(id);
    q.width_ = 1;
    q.monotone_ = monotone;
    q.unary_ = std::make_shared<const UnaryAccept>(std::move(accept));
    return q;
  }

  static Quantifier binary(std::string id, BinaryAccept accept, bool monotone = false) {
    Quantifier q;
    q.id_ = std::move(id);
    q.width_ = 2;
    q.monotone_ = monotone;
    q.binary_ = std::make_shared<const BinaryAccept>(std::move(accept));
    return q;
  }

  const std::string& id() const noexcept { return id_; }
  int width() const noexcept { return width_; }
  /// Acceptance is upward closed in the selected set(s).
  bool monotone() const noexcept { return monotone_; }

  bool accepts(std::size_t domain, std::size_t selected) const {
    if (width_ != 1) throw std::logic_error("quantifier " + id_ + " has width 2");
    return (*unary_)(domain, selected);
  }

  bool accepts(const VennProfile& profile) const {
    if (width_ != 2) throw std::logic_error("quantifier " + id_ + " has width 1");
    return (*binary_)(profile);
  }

  /// For monotone width-1 quantifiers: smallest accepted selected-size at `domain`.
  std::optional<std::size_t> threshold(std::size_t domain) const {
    for (std::size_t s = 0; s <= domain; ++s)
      if (accepts(domain, s)) return s;
    return std::nullopt;
  }

  bool operator==(const Quantifier& other) const noexcept { return id_ == other.id_; }

 private:
  Quantifier() = default;

  std::string id_;
  int width_ = 1;
  bool monotone_ = false;
  std::shared_ptr<const UnaryAccept> unary_;
  std::shared_ptr<const BinaryAccept> binary_;
};

namespace quant_detail {

inline std::optional<std::uint64_t> parse_uint(std::string_view s) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace quant_detail

/// Built-in quantifiers:
///   exists   selected >= 1
///   maj      selected > domain/2
///   geq:k    selected >= k
///   pct>q    100*selected > q*domain   (q decimal, 0 <= q < 100)
///   more     |P1| > |P2|               (width 2)
inline Quantifier builtin(std::string_view spec) {
  using quant_detail::parse_uint;
  if (spec == "exists")
    return Quantifier::unary("exists", [](std::size_t, std::size_t s) { return s >= 1; }, true);
  if (spec == "maj")
    return Quantifier::unary("maj", [](std::size_t d, std::size_t s) { return 2 * s > d; }, true);
  if (spec == "more")
    return Quantifier::binary("more", [](const VennProfile& p) { return p.first() > p.second(); });
  if (spec.starts_with("geq:")) {
    const auto k = parse_uint(spec.substr(4));
    if (!k) throw SpecError("bad quantifier spec '" + std::string(spec) + "'");
    const std::size_t bound = *k;
    return Quantifier::unary(
        "geq:" + std::to_string(bound), [bound](std::size_t, std::size_t s) { return s >= bound; }, true);
  }
  if (spec.starts_with("pct>")) {
    // q = whole.frac exactly, compared in integers: 100*s*10^f > (whole*10^f + frac)*d
    std::string_view q = spec.substr(4);
    const auto dot = q.find('.');
    const auto whole = parse_uint(q.substr(0, dot));
    std::uint64_t frac = 0, scale = 1;
    if (dot != std::string_view::npos) {
      const auto digits = q.substr(dot + 1);
      const auto f = parse_uint(digits);
      if (!f || digits.size() > 6) throw SpecError("bad quantifier spec '" + std::string(spec) + "'");
      frac = *f;
      for (std::size_t i = 0; i < digits.size(); ++i) scale *= 10;
    }
    if (!whole || *whole >= 100) throw SpecError("bad quantifier spec '" + std::string(spec) + "'");
    const std::uint64_t num = *whole * scale + frac;
    return Quantifier::unary(
        "pct>" + std::string(q), [num, scale](std::size_t d, std::size_t s) { return 100 * scale * s > num * d; },
        true);
  }
  throw SpecError("unknown quantifier spec '" + std::string(spec) + "'");
}

/// {s in 0..degree | q accepts (degree, s)}.
inline std::vector<std::size_t> accepted_size_set(const Quantifier& q, std::size_t degree) {
  std::vector<std::size_t> sizes;
  for (std::size_t s = 0; s <= degree; ++s)
    if (q.accepts(degree, s)) sizes.push_back(s);
  return sizes;
}

/// Ordered set of quantifiers, optionally including an effectively finite family
/// that is expanded against a degree bound before use (see `resolve`).
class QuantifierSet {
 public:
  QuantifierSet() = default;
  explicit QuantifierSet(std::vector<Quantifier> members, std::optional<std::string> family = std::nullopt)
      : members_(std::move(members)), family_(std::move(family)) {
    std::set<std::string> ids;
    for (const auto& q : members_)
      if (!ids.insert(q.id()).second) throw SpecError("duplicate quantifier '" + q.id() + "'");
    if (family_ && *family_ != "counting") throw SpecError("unknown quantifier family '" + *family_ + "'");
  }

  const std::vector<Quantifier>& members() const noexcept { return members_; }
  const std::optional<std::string>& family() const noexcept { return family_; }
  bool counting() const noexcept { return family_ && *family_ == "counting"; }
  bool empty() const noexcept { return members_.empty() && !family_; }

  /// Canonical text form, e.g. "exists,maj" or "counting".
  std::string spec() const {
    std::string out;
    if (family_) out = *family_;
    for (const auto& q : members_) {
      // resolved counting members are implied by the family token
      if (counting() && q.id().starts_with("geq:")) continue;
      if (!out.empty()) out += ',';
      out += q.id();
    }
    return out;
  }

 private:
  std::vector<Quantifier> members_;
  std::optional<std::string> family_;
};

/// f(N) = {geq:0, ..., geq:N}, a representation of all counting quantifiers at width N.
inline QuantifierSet counting_representation(std::size_t max_degree) {
  std::vector<Quantifier> members;
  members.reserve(max_degree + 1);
  for (std::size_t k = 0; k <= max_degree; ++k) members.push_back(builtin("geq:" + std::to_string(k)));
  return QuantifierSet(std::move(members), "counting");
}

/// Expands an effectively finite family against the degree bound of the input.
/// Sets without a family are returned unchanged.
inline QuantifierSet resolve(const QuantifierSet& set, std::size_t max_degree) {
  if (!set.counting()) return set;
  std::vector<Quantifier> members;
  std::set<std::string> ids;
  for (const auto& q : set.members())
    if (!q.id().starts_with("geq:") && ids.insert(q.id()).second) members.push_back(q);
  const auto counting = counting_representation(max_degree);
  for (const auto& q : counting.members())
    if (ids.insert(q.id()).second) members.push_back(q);
  return QuantifierSet(std::move(members), "counting");
}

/// Parses the comma-separated CLI mini-language: quantifier specs plus the family
/// token `counting`. Aliases: `wl` = counting, `cwl` = exists,maj.
inline QuantifierSet parse_quantifier_set(std::string_view text) {
  std::vector<Quantifier> members;
  std::optional<std::string> family;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    auto tok = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
    while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
    if (tok.empty()) throw SpecError("empty quantifier spec in '" + std::string(text) + "'");
    if (tok == "counting" || tok == "wl") {
      family = "counting";
    } else if (tok == "cwl") {
      members.push_back(builtin("exists"));
      members.push_back(builtin("maj"));
    } else {
      members.push_back(builtin(tok));
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return QuantifierSet(std::move(members), std::move(family));
}

}  // namespace wltab
