#pragma once

#include <cctype>
#include <functional>
#include <string>
#include <string_view>

#include "wltab/errors.hpp"
#include "wltab/formula.hpp"

// Surface syntax for formulas.
//
//   atoms        l<k>  true  false
//   negation     !φ
//   connectives  φ & ψ   φ | ψ   (parentheses group)
//   modalities   <>φ  <geq:k>φ  <maj>φ  <pct>q>φ  <q>φ     local, any built-in q
//                <U>φ  [q,U]φ                           global (◊_U, Q_U)
//                []φ                                    ◻φ, read as !<>!φ
//                <more>(φ; ψ)  [more,U](φ; ψ)           width 2
//
// Prefix operators bind tighter than &, which binds tighter than |.

namespace wltab {

using AtomNamer = std::function<std::string(LabelId)>;

namespace syntax_detail {

inline std::string default_atom(LabelId l) { return "l" + std::to_string(l); }

inline std::string modal_prefix(const Formula& f) {
  const auto& id = f.quantifier().id();
  if (f.kind() == FormulaKind::GlobalModal) return id == "exists" ? "<U>" : "[" + id + ",U]";
  return id == "exists" ? "<>" : "<" + id + ">";
}

inline std::string render(const Formula& f, const AtomNamer& atom);

inline std::string render_operand(const Formula& f, const AtomNamer& atom) {
  if (f.kind() == FormulaKind::And || f.kind() == FormulaKind::Or) return "(" + render(f, atom) + ")";
  return render(f, atom);
}

inline std::string render(const Formula& f, const AtomNamer& atom) {
  switch (f.kind()) {
    case FormulaKind::Bot:
      return "false";
    case FormulaKind::Prop:
      return atom(f.label());
    case FormulaKind::Not:
      if (f.is_top()) return "true";
      return "!" + render_operand(f.children()[0], atom);
    case FormulaKind::And:
    case FormulaKind::Or: {
      const bool conj = f.kind() == FormulaKind::And;
      std::string out;
      for (const auto& c : f.children()) {
        if (!out.empty()) out += conj ? " & " : " | ";
        out += (conj && c.kind() == FormulaKind::Or) ? "(" + render(c, atom) + ")" : render(c, atom);
      }
      return out;
    }
    case FormulaKind::Modal:
    case FormulaKind::GlobalModal: {
      if (f.children().size() == 1) return modal_prefix(f) + render_operand(f.children()[0], atom);
      std::string out = modal_prefix(f) + "(";
      for (std::size_t i = 0; i < f.children().size(); ++i) {
        if (i) out += "; ";
        out += render(f.children()[i], atom);
      }
      return out + ")";
    }
  }
  return {};
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Formula parse() {
    Formula f = parse_or();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return f;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw SyntaxError(pos_, what); }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(std::string_view token) {
    skip_ws();
    if (text_.substr(pos_).starts_with(token)) {
      pos_ += token.size();
      return true;
    }
    return false;
  }

  void expect(std::string_view token) {
    if (!accept(token)) fail("expected '" + std::string(token) + "'");
  }

  Formula parse_or() {
    std::vector<Formula> parts{parse_and()};
    while (accept("|")) parts.push_back(parse_and());
    return parts.size() == 1 ? parts.front() : Formula::disj(std::move(parts));
  }

  Formula parse_and() {
    std::vector<Formula> parts{parse_unary()};
    while (accept("&")) parts.push_back(parse_unary());
    return parts.size() == 1 ? parts.front() : Formula::conj(std::move(parts));
  }

  std::string read_spec(char stop) {
    skip_ws();
    const std::size_t start = pos_;
    // pct>q carries its own '>'
    if (text_.substr(pos_).starts_with("pct>")) pos_ += 4;
    while (pos_ < text_.size() && text_[pos_] != stop && text_[pos_] != ',' && text_[pos_] != '>' &&
           !std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  Quantifier quantifier_for(const std::string& spec, std::size_t at) {
    try {
      return builtin(spec);
    } catch (const SpecError& e) {
      throw SyntaxError(at, e.what());
    }
  }

  std::vector<Formula> parse_args(const Quantifier& q) {
    if (q.width() == 1) return {parse_unary()};
    expect("(");
    std::vector<Formula> args{parse_or()};
    while (static_cast<int>(args.size()) < q.width()) {
      expect(";");
      args.push_back(parse_or());
    }
    expect(")");
    return args;
  }

  Formula parse_unary() {
    skip_ws();
    if (accept("!")) return Formula::negation(parse_unary());
    if (accept("[]")) return Formula::box(parse_unary());
    if (accept("<>")) return Formula::diamond(parse_unary());
    if (accept("<U>")) return Formula::global(builtin("exists"), parse_unary());
    if (accept("<")) {
      const std::size_t at = pos_;
      const std::string spec = read_spec('>');
      if (spec.empty()) fail("expected quantifier");
      auto q = quantifier_for(spec, at);
      expect(">");
      return Formula::modal(q, parse_args(q));
    }
    if (accept("[")) {
      const std::size_t at = pos_;
      const std::string spec = read_spec(']');
      if (spec.empty()) fail("expected quantifier");
      auto q = quantifier_for(spec, at);
      expect(",");
      expect("U");
      expect("]");
      return Formula::global(q, parse_args(q));
    }
    if (accept("(")) {
      Formula f = parse_or();
      expect(")");
      return f;
    }
    if (accept("true")) return Formula::top();
    if (accept("false")) return Formula::bot();
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == 'l') {
      ++pos_;
      const std::size_t start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (start == pos_) fail("expected label index after 'l'");
      return Formula::prop(static_cast<LabelId>(std::stoul(std::string(text_.substr(start, pos_ - start)))));
    }
    fail(pos_ < text_.size() ? "unexpected character '" + std::string(1, text_[pos_]) + "'" : "unexpected end of input");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace syntax_detail

inline Formula parse_formula(std::string_view text) { return syntax_detail::Parser(text).parse(); }

inline std::string render(const Formula& f) { return syntax_detail::render(f, syntax_detail::default_atom); }

inline std::string render(const Formula& f, const AtomNamer& atom) { return syntax_detail::render(f, atom); }

}  // namespace wltab
