#ifndef CWC_MODEL_HPP
#define CWC_MODEL_HPP

// Model-file language.
//
//   # comment
//   labels IN eta
//   [N1] T : (~x|A ~X)@IN => (~x|~X)@IN A, k=0.01
//   [B1] T, IN : A => A A, k=1
//   term 2*C (|2*A 2*B)@IN
//   t_end 35
//   phi 60            (or "inf")
//   psi 60
//   dt_max 0.01
//   seed 1
//   mode hybrid       (stochastic | deterministic | hybrid)
//   observe A@IN[0] C@top A@IN
//
// Terms: items separated by blanks; an item is [n*] atom or
// [n*] (wrap|content)@label. Variables start with '~': ~X (upper case) is a
// term variable, ~x (lower case) a wrap variable. T is the top label.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "error.hpp"
#include "multiset.hpp"
#include "pattern.hpp"
#include "term.hpp"

namespace cwc {

enum class Mode { stochastic, deterministic, hybrid };

inline std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::stochastic: return "stochastic";
    case Mode::deterministic: return "deterministic";
    case Mode::hybrid: return "hybrid";
  }
  return "?";
}

inline std::optional<Mode> parse_mode(std::string_view s) {
  if (s == "stochastic") return Mode::stochastic;
  if (s == "deterministic") return Mode::deterministic;
  if (s == "hybrid") return Mode::hybrid;
  return std::nullopt;
}

struct SimParams {
  double t_end = 1.0;
  double phi = std::numeric_limits<double>::infinity();
  double psi = 0.0;
  double dt_max = 0.01;
  std::uint64_t seed = 1;
  Mode mode = Mode::stochastic;

  friend bool operator==(const SimParams&, const SimParams&) = default;
};

/// Count of `species` at the top level of a compartment. label == "T" means
/// the top level. Without an ordinal the counts of every compartment with
/// that label are summed; ordinal n picks the n-th live one by index order.
struct Observable {
  std::string species;
  std::string label{kTopLabel};
  std::optional<std::size_t> ordinal;

  std::string name() const {
    std::string out = species + "@" + (label == kTopLabel ? std::string("top") : label);
    if (ordinal) out += "[" + std::to_string(*ordinal) + "]";
    return out;
  }
  friend bool operator==(const Observable&, const Observable&) = default;
};

struct ModelFile {
  std::vector<std::string> labels;  // declared, excluding T
  std::vector<Rule> rules;          // one label each
  State initial;
  SimParams params;
  std::vector<Observable> observables;
  std::vector<std::string> warnings;  // not part of the model's identity

  friend bool operator==(const ModelFile& a, const ModelFile& b) {
    return a.labels == b.labels && a.rules == b.rules && a.initial == b.initial &&
           a.params == b.params && a.observables == b.observables;
  }
};

namespace detail {

inline bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
inline bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

/// Untyped parse of a term-like item list, checked later against the
/// position it appears in (ground term, pattern or open term).
struct Syntax {
  enum class Kind { atom, term_var, wrap_var, compartment };
  Kind kind = Kind::atom;
  std::string name;   // atom or variable name, or compartment label
  Count count = 1;
  std::vector<Syntax> wrap;
  std::vector<Syntax> content;
  std::size_t line = 0, column = 0;

  bool has_vars() const {
    if (kind == Kind::term_var || kind == Kind::wrap_var) return true;
    for (const auto& s : wrap) if (s.has_vars()) return true;
    for (const auto& s : content) if (s.has_vars()) return true;
    return false;
  }
};

class Cursor {
public:
  Cursor(std::string_view text, std::size_t line, std::size_t column_base = 1)
      : text_(text), line_(line), base_(column_base) {}

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_, column()); }
  [[noreturn]] void fail_at(const std::string& msg, std::size_t col) const {
    throw ParseError(msg, line_, col);
  }

  std::size_t line() const { return line_; }
  std::size_t column() const { return base_ + pos_; }

  void skip_blanks() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\r')) ++pos_;
  }
  bool at_end() {
    skip_blanks();
    return pos_ >= text_.size();
  }
  char peek() {
    skip_blanks();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }
  bool peek_str(std::string_view s) {
    skip_blanks();
    return text_.substr(pos_, s.size()) == s;
  }
  bool accept(char c) {
    if (peek() == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  bool accept_str(std::string_view s) {
    if (peek_str(s)) {
      pos_ += s.size();
      return true;
    }
    return false;
  }
  void expect(char c, const char* what) {
    if (!accept(c)) fail(std::string("expected ") + what);
  }

  std::string ident(const char* what) {
    skip_blanks();
    if (pos_ >= text_.size() || !ident_start(text_[pos_])) fail(std::string("expected ") + what);
    std::size_t start = pos_;
    while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  /// A run of non-blank characters.
  std::string word() {
    skip_blanks();
    std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != ' ' && text_[pos_] != '\t' && text_[pos_] != '\r') ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  std::optional<Count> count_prefix() {
    skip_blanks();
    std::size_t p = pos_;
    while (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) ++p;
    if (p == pos_ || p >= text_.size() || text_[p] != '*') return std::nullopt;
    Count n = 0;
    auto res = std::from_chars(text_.data() + pos_, text_.data() + p, n);
    if (res.ec != std::errc()) fail("count out of range");
    if (n < 1) fail("count must be positive");
    pos_ = p + 1;
    return n;
  }

  double number(const char* what) {
    std::size_t col = (skip_blanks(), column());
    std::string w;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                                   text_[pos_] == '.' || text_[pos_] == '-' || text_[pos_] == '+'))
      w += text_[pos_++];
    return to_number(w, what, col);
  }

  double to_number(const std::string& w, const char* what, std::size_t col) const {
    if (w == "inf" || w == "+inf") return std::numeric_limits<double>::infinity();
    double v = 0;
    const char* first = w.data();
    if (!w.empty() && w[0] == '+') ++first;
    auto res = std::from_chars(first, w.data() + w.size(), v);
    if (w.empty() || res.ec != std::errc() || res.ptr != w.data() + w.size())
      fail_at(std::string("expected ") + what + ", got '" + w + "'", col);
    return v;
  }

  /// Items up to (not including) a stop character / string at nesting depth 0.
  std::vector<Syntax> items(std::string_view stop_chars, bool stop_at_arrow) {
    std::vector<Syntax> out;
    while (true) {
      if (at_end()) break;
      char c = peek();
      if (stop_chars.find(c) != std::string_view::npos) break;
      if (stop_at_arrow && peek_str("=>")) break;
      out.push_back(item());
    }
    return out;
  }

  Syntax item() {
    skip_blanks();
    Syntax s;
    s.line = line_;
    s.column = column();
    if (auto n = count_prefix()) s.count = *n;
    char c = peek();
    if (c == '~') {
      ++pos_;
      if (pos_ >= text_.size() || !ident_start(text_[pos_])) fail("expected variable name after '~'");
      s.name = ident("variable");
      s.kind = std::isupper(static_cast<unsigned char>(s.name[0])) ? Syntax::Kind::term_var
                                                                   : Syntax::Kind::wrap_var;
    } else if (c == '(') {
      ++pos_;
      s.kind = Syntax::Kind::compartment;
      s.wrap = items("|)", false);
      expect('|', "'|' between wrap and content");
      s.content = items(")", false);
      expect(')', "')'");
      expect('@', "'@' and a label after ')'");
      s.name = ident("compartment label");
    } else if (ident_start(c)) {
      s.kind = Syntax::Kind::atom;
      s.name = ident("atom");
    } else {
      fail(std::string("unexpected character '") + c + "'");
    }
    return s;
  }

private:
  std::string_view text_;
  std::size_t line_;
  std::size_t base_;
  std::size_t pos_ = 0;
};

class Checker {
public:
  explicit Checker(const std::set<std::string>* declared) : declared_(declared) {}

  [[noreturn]] static void fail(const Syntax& s, const std::string& msg) {
    throw ParseError(msg, s.line, s.column);
  }

  void check_label(const Syntax& s) const {
    if (s.name == kTopLabel) fail(s, "compartments cannot carry the top label T");
    if (declared_ && !declared_->count(s.name)) fail(s, "undeclared label '" + s.name + "'");
  }

  Multiset ground_wrap(const std::vector<Syntax>& items) const {
    Multiset m;
    for (const auto& it : items) {
      if (it.kind != Syntax::Kind::atom) fail(it, "a wrap holds atoms only");
      m.add(it.name, it.count);
    }
    return m;
  }

  Term ground(const std::vector<Syntax>& items) const {
    Term t;
    for (const auto& it : items) {
      switch (it.kind) {
        case Syntax::Kind::atom: t.atoms.add(it.name, it.count); break;
        case Syntax::Kind::compartment: {
          check_label(it);
          Compartment c{ground_wrap(it.wrap), ground(it.content), it.name, {}};
          for (Count i = 0; i < it.count; ++i) t.compartments.push_back(c);
          break;
        }
        default: fail(it, "variables are not allowed in a ground term");
      }
    }
    return t;
  }

  Pattern pattern(const std::vector<Syntax>& items, bool top) const {
    Pattern p;
    bool content_var_seen = false;
    for (const auto& it : items) {
      switch (it.kind) {
        case Syntax::Kind::atom: p.atoms.add(it.name, it.count); break;
        case Syntax::Kind::wrap_var: fail(it, "wrap variable ~" + it.name + " outside a wrap");
        case Syntax::Kind::term_var:
          if (top) fail(it, "a left-hand side cannot have a term variable at its top level");
          if (content_var_seen) fail(it, "a compartment pattern has exactly one content variable");
          content_var_seen = true;
          break;
        case Syntax::Kind::compartment: {
          check_label(it);
          if (!it.has_vars()) {
            Compartment c{ground_wrap(it.wrap), ground(it.content), it.name, {}};
            for (Count i = 0; i < it.count; ++i) p.ground.push_back(c);
            break;
          }
          if (it.count != 1) fail(it, "a compartment pattern with variables cannot be repeated");
          p.compartments.push_back(compartment_pattern(it));
          break;
        }
      }
    }
    return p;
  }

  CompartmentPattern compartment_pattern(const Syntax& s) const {
    CompartmentPattern cp;
    cp.label = s.name;
    for (const auto& w : s.wrap) {
      if (w.kind == Syntax::Kind::atom) {
        cp.wrap_atoms.add(w.name, w.count);
      } else if (w.kind == Syntax::Kind::wrap_var) {
        if (!cp.wrap_var.empty()) fail(w, "a compartment pattern has exactly one wrap variable");
        if (w.count != 1) fail(w, "variables cannot be repeated in a pattern");
        cp.wrap_var = w.name;
      } else if (w.kind == Syntax::Kind::term_var) {
        fail(w, "term variable ~" + w.name + " inside a wrap");
      } else {
        fail(w, "a wrap holds atoms only");
      }
    }
    if (cp.wrap_var.empty()) fail(s, "compartment pattern needs a wrap variable (~x)");
    for (const auto& c : s.content) {
      if (c.kind == Syntax::Kind::term_var) {
        if (c.count != 1) fail(c, "variables cannot be repeated in a pattern");
        cp.content_var = c.name;
      }
    }
    cp.content = pattern(s.content, false);
    if (cp.content_var.empty()) fail(s, "compartment pattern needs a content variable (~X)");
    return cp;
  }

  OpenTerm open(const std::vector<Syntax>& items) const {
    OpenTerm o;
    for (const auto& it : items) {
      switch (it.kind) {
        case Syntax::Kind::atom: o.atoms.add(it.name, it.count); break;
        case Syntax::Kind::term_var:
          for (Count i = 0; i < it.count; ++i) o.vars.push_back(it.name);
          break;
        case Syntax::Kind::wrap_var: fail(it, "wrap variable ~" + it.name + " outside a wrap");
        case Syntax::Kind::compartment: {
          check_label(it);
          OpenCompartment oc;
          oc.label = it.name;
          for (const auto& w : it.wrap) {
            if (w.kind == Syntax::Kind::atom) oc.wrap_atoms.add(w.name, w.count);
            else if (w.kind == Syntax::Kind::wrap_var)
              for (Count i = 0; i < w.count; ++i) oc.wrap_vars.push_back(w.name);
            else if (w.kind == Syntax::Kind::term_var) fail(w, "term variable ~" + w.name + " inside a wrap");
            else fail(w, "a wrap holds atoms only");
          }
          oc.content = open(it.content);
          for (Count i = 0; i < it.count; ++i) o.compartments.push_back(oc);
          break;
        }
      }
    }
    return o;
  }

private:
  const std::set<std::string>* declared_;
};

inline void check_rhs_vars(const OpenTerm& rhs, const std::set<std::string>& wraps,
                           const std::set<std::string>& terms, const Syntax* where,
                           std::size_t line, std::size_t col) {
  std::vector<std::string> wv, tv;
  collect_vars(rhs, wv, tv);
  auto fail = [&](const std::string& v) {
    if (where) Checker::fail(*where, "unbound variable ~" + v + " on the right-hand side");
    throw ParseError("unbound variable ~" + v + " on the right-hand side", line, col);
  };
  for (const auto& v : wv) if (!wraps.count(v)) fail(v);
  for (const auto& v : tv) if (!terms.count(v)) fail(v);
}

struct ParsedRule {
  std::vector<Rule> rules;
  bool negative_rate = false;
};

inline ParsedRule parse_rule_line(std::string_view text, std::size_t line,
                                  const std::set<std::string>* declared, std::size_t auto_index) {
  Cursor cur(text, line);
  std::string name;
  if (cur.accept('[')) {
    name = cur.ident("rule name");
    cur.expect(']', "']' after the rule name");
  } else {
    name = "R" + std::to_string(auto_index);
  }
  std::vector<std::pair<std::string, std::size_t>> labels;
  do {
    std::size_t col = (cur.skip_blanks(), cur.column());
    std::string l = cur.ident("label");
    if (l == "top") l = std::string(kTopLabel);
    if (l != kTopLabel && declared && !declared->count(l))
      throw ParseError("undeclared label '" + l + "'", line, col);
    labels.emplace_back(l, col);
  } while (cur.accept(','));
  cur.expect(':', "':' after the label set");
  std::size_t lhs_col = (cur.skip_blanks(), cur.column());
  auto lhs_syntax = cur.items(",", true);
  if (!cur.accept_str("=>")) cur.fail("expected '=>'");
  std::size_t rhs_col = (cur.skip_blanks(), cur.column());
  auto rhs_syntax = cur.items(",", false);
  cur.expect(',', "',' before the rate");
  if (!cur.accept('k')) cur.fail("expected 'k=' rate");
  cur.expect('=', "'=' after k");
  std::size_t k_col = (cur.skip_blanks(), cur.column());
  double k = cur.number("rate constant");
  if (!cur.at_end()) cur.fail("trailing text after the rate");
  if (!std::isfinite(k)) throw ParseError("rate constant must be finite", line, k_col);

  Checker check(declared);
  if (lhs_syntax.empty()) throw ParseError("empty left-hand side", line, lhs_col);
  Pattern lhs = check.pattern(lhs_syntax, true);
  if (!is_linear(lhs)) throw ParseError("non-linear pattern: a variable occurs twice", line, lhs_col);
  OpenTerm rhs = check.open(rhs_syntax);

  std::set<std::string> wraps, terms;
  auto walk = [&](auto& self, const Pattern& p) -> void {
    for (const auto& cp : p.compartments) {
      wraps.insert(cp.wrap_var);
      terms.insert(cp.content_var);
      self(self, cp.content);
    }
  };
  walk(walk, lhs);
  check_rhs_vars(rhs, wraps, terms, nullptr, line, rhs_col);

  ParsedRule out;
  out.negative_rate = k < 0;
  std::set<std::string> seen;
  for (const auto& [l, col] : labels) {
    if (!seen.insert(l).second) throw ParseError("label '" + l + "' repeated in rule header", line, col);
    out.rules.push_back(Rule{name, l, lhs, rhs, std::fabs(k)});
  }
  return out;
}

inline Observable parse_observable(const std::string& w, std::size_t line, std::size_t col,
                                   const std::set<std::string>* declared) {
  Cursor cur(w, line, col);
  Observable o;
  o.species = cur.ident("species name");
  cur.expect('@', "'@' in observable");
  std::size_t lcol = cur.column();
  std::string label = cur.ident("label");
  if (label == "top" || label == kTopLabel) {
    o.label = std::string(kTopLabel);
  } else {
    if (declared && !declared->count(label)) throw ParseError("undeclared label '" + label + "'", line, lcol);
    o.label = label;
    if (cur.accept('[')) {
      double n = cur.number("ordinal");
      if (n < 0 || n != std::floor(n)) cur.fail("ordinal must be a nonnegative integer");
      o.ordinal = static_cast<std::size_t>(n);
      cur.expect(']', "']'");
    }
  }
  if (!cur.at_end()) cur.fail("trailing text in observable");
  return o;
}

inline std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

} // namespace detail

/// Parses a ground term ("2*C (|2*A 2*B)@IN"). Labels are not checked against
/// any declaration. Indices are assigned in canonical preorder.
inline State parse_term(std::string_view text) {
  detail::Cursor cur(text, 1);
  auto items = cur.items("", false);
  return make_state(detail::Checker(nullptr).ground(items));
}

/// Parses one rule line; a multi-label header yields one rule per label.
inline std::vector<Rule> parse_rule(std::string_view text) {
  return detail::parse_rule_line(text, 1, nullptr, 1).rules;
}

inline ModelFile parse_model(std::string_view text) {
  ModelFile m;
  std::set<std::string> declared;
  struct Pending {
    std::string text;
    std::size_t line;
  };
  std::vector<Pending> rule_lines;
  std::optional<Pending> term_line;
  std::vector<Pending> observe_lines;
  std::set<std::string> seen_params;

  std::istringstream lines{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(lines, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    detail::Cursor cur(line, line_no);
    if (cur.at_end()) continue;
    if (line.find("=>") != std::string_view::npos) {
      rule_lines.push_back({std::string(line), line_no});
      continue;
    }
    std::size_t kw_col = cur.column();
    std::string kw = cur.ident("keyword");
    auto once = [&] {
      if (!seen_params.insert(kw).second) throw ParseError("'" + kw + "' given twice", line_no, kw_col);
    };
    if (kw == "labels") {
      while (!cur.at_end()) {
        std::size_t col = cur.column();
        std::string l = cur.ident("label name");
        if (l == kTopLabel || l == "top") throw ParseError("T is the implicit top label", line_no, col);
        if (declared.insert(l).second) m.labels.push_back(l);
      }
    } else if (kw == "term") {
      once();
      term_line = Pending{std::string(line), line_no};
      continue;
    } else if (kw == "observe") {
      observe_lines.push_back({std::string(line), line_no});
      continue;
    } else if (kw == "mode") {
      once();
      std::size_t col = (cur.skip_blanks(), cur.column());
      auto mode = parse_mode(cur.word());
      if (!mode) throw ParseError("mode must be stochastic, deterministic or hybrid", line_no, col);
      m.params.mode = *mode;
    } else if (kw == "seed") {
      once();
      std::size_t col = (cur.skip_blanks(), cur.column());
      std::string w = cur.word();
      auto res = std::from_chars(w.data(), w.data() + w.size(), m.params.seed);
      if (w.empty() || res.ec != std::errc() || res.ptr != w.data() + w.size())
        throw ParseError("seed must be an unsigned integer", line_no, col);
    } else if (kw == "t_end" || kw == "dt_max") {
      once();
      std::size_t col = (cur.skip_blanks(), cur.column());
      double v = cur.to_number(cur.word(), "number", col);
      if (!(v > 0) || !std::isfinite(v)) throw ParseError(kw + " must be positive and finite", line_no, col);
      (kw == "t_end" ? m.params.t_end : m.params.dt_max) = v;
    } else if (kw == "phi" || kw == "psi") {
      once();
      std::size_t col = (cur.skip_blanks(), cur.column());
      double v = cur.to_number(cur.word(), "number", col);
      if (!(v >= 0)) throw ParseError(kw + " must be nonnegative", line_no, col);
      (kw == "phi" ? m.params.phi : m.params.psi) = v;
    } else {
      throw ParseError("unknown statement '" + kw + "'", line_no, kw_col);
    }
    if (!cur.at_end()) throw ParseError("trailing text after '" + kw + "'", line_no, cur.column());
  }

  std::size_t index = 1;
  for (const auto& r : rule_lines) {
    auto parsed = detail::parse_rule_line(r.text, r.line, &declared, index++);
    if (parsed.negative_rate)
      m.warnings.push_back("line " + std::to_string(r.line) + ": negative rate stored as its magnitude");
    for (auto& rule : parsed.rules) m.rules.push_back(std::move(rule));
  }
  if (term_line) {
    detail::Cursor cur(term_line->text, term_line->line);
    cur.ident("keyword");
    auto items = cur.items("", false);
    m.initial = make_state(detail::Checker(&declared).ground(items));
  }
  for (const auto& o : observe_lines) {
    detail::Cursor cur(o.text, o.line);
    cur.ident("keyword");
    while (!cur.at_end()) {
      std::size_t col = cur.column();
      m.observables.push_back(detail::parse_observable(cur.word(), o.line, col, &declared));
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Printing

namespace detail {

inline void append_item(std::string& out, const std::string& item) {
  if (item.empty()) return;
  if (!out.empty() && out.back() != '(' && out.back() != '|') out += ' ';
  out += item;
}

inline std::string print_pattern(const Pattern& p, const std::string* content_var);

inline std::string print_compartment_pattern(const CompartmentPattern& cp) {
  std::string out = "(";
  append_item(out, canonical_encoding(cp.wrap_atoms));
  append_item(out, "~" + cp.wrap_var);
  out += '|';
  append_item(out, print_pattern(cp.content, &cp.content_var));
  out += ")@" + cp.label;
  return out;
}

inline std::string print_pattern(const Pattern& p, const std::string* content_var) {
  std::string out;
  append_item(out, canonical_encoding(p.atoms));
  for (const auto& g : p.ground) append_item(out, canonical_encoding(g));
  for (const auto& cp : p.compartments) append_item(out, print_compartment_pattern(cp));
  if (content_var) append_item(out, "~" + *content_var);
  return out;
}

inline std::string print_open(const OpenTerm& o) {
  std::string out;
  append_item(out, canonical_encoding(o.atoms));
  for (const auto& oc : o.compartments) {
    std::string c = "(";
    append_item(c, canonical_encoding(oc.wrap_atoms));
    for (const auto& v : oc.wrap_vars) append_item(c, "~" + v);
    c += '|';
    append_item(c, print_open(oc.content));
    c += ")@" + oc.label;
    append_item(out, c);
  }
  for (const auto& v : o.vars) append_item(out, "~" + v);
  return out;
}

} // namespace detail

inline std::string print_rule(const Rule& r) {
  std::string out = "[" + r.name + "] " + r.label + " : " + detail::print_pattern(r.lhs, nullptr) + " =>";
  std::string rhs = detail::print_open(r.rhs);
  if (!rhs.empty()) out += " " + rhs;
  out += ", k=" + detail::format_number(r.k);
  return out;
}

inline std::string print_term(const Term& t) { return canonical_encoding(t); }

inline std::string print_model(const ModelFile& m) {
  std::string out;
  if (!m.labels.empty()) {
    out += "labels";
    for (const auto& l : m.labels) out += " " + l;
    out += '\n';
  }
  for (const auto& r : m.rules) out += print_rule(r) + '\n';
  out += "term " + print_term(m.initial.top) + '\n';
  out += "t_end " + detail::format_number(m.params.t_end) + '\n';
  out += "phi " + detail::format_number(m.params.phi) + '\n';
  out += "psi " + detail::format_number(m.params.psi) + '\n';
  out += "dt_max " + detail::format_number(m.params.dt_max) + '\n';
  out += "seed " + std::to_string(m.params.seed) + '\n';
  out += "mode " + std::string(to_string(m.params.mode)) + '\n';
  if (!m.observables.empty()) {
    out += "observe";
    for (const auto& o : m.observables) out += " " + o.name();
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rule sets

struct RulePartition {
  std::vector<std::size_t> biochemical;
  std::vector<std::size_t> non_biochemical;
};

inline RulePartition classify_rules(const std::vector<Rule>& rules) {
  RulePartition p;
  for (std::size_t i = 0; i < rules.size(); ++i)
    (rules[i].biochemical() ? p.biochemical : p.non_biochemical).push_back(i);
  return p;
}

/// Species that can occur at the top level of a compartment of each label
/// (rule sides, compartment-pattern contents, initial term).
inline std::map<std::string, std::set<std::string>> species_by_label(const ModelFile& m) {
  std::map<std::string, std::set<std::string>> out;
  out[std::string(kTopLabel)];
  for (const auto& l : m.labels) out[l];
  auto add = [&](const std::string& label, const Multiset& ms) {
    for (const auto& [name, n] : ms) out[label].insert(name);
  };
  auto walk_pattern = [&](auto& self, const Pattern& p, const std::string& label) -> void {
    add(label, p.atoms);
    for (const auto& cp : p.compartments) self(self, cp.content, cp.label);
  };
  auto walk_open = [&](auto& self, const OpenTerm& o, const std::string& label) -> void {
    add(label, o.atoms);
    for (const auto& oc : o.compartments) self(self, oc.content, oc.label);
  };
  for (const auto& r : m.rules) {
    walk_pattern(walk_pattern, r.lhs, r.label);
    walk_open(walk_open, r.rhs, r.label);
  }
  for_each_site(m.initial, [&](const Term& t, CompartmentId, std::string_view label,
                               std::optional<CompartmentId>) { add(std::string(label), t.atoms); });
  return out;
}

/// Every species at the top level and in each compartment of the initial term.
inline std::vector<Observable> default_observables(const ModelFile& m) {
  auto inventory = species_by_label(m);
  std::vector<Observable> out;
  for (const auto& s : inventory[std::string(kTopLabel)]) out.push_back({s, std::string(kTopLabel), {}});
  std::map<std::string, std::size_t> ordinals;
  for (const auto& info : enumerate_compartments(m.initial)) {
    if (!info.parent) continue;
    std::size_t ord = ordinals[info.label]++;
    for (const auto& s : inventory[info.label]) out.push_back({s, info.label, ord});
  }
  return out;
}

} // namespace cwc

#endif // CWC_MODEL_HPP
