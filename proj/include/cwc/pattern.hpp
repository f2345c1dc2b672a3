#ifndef CWC_PATTERN_HPP
#define CWC_PATTERN_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "multiset.hpp"
#include "term.hpp"

namespace cwc {

struct CompartmentPattern;

/// Left-hand side of a rule: a multiset of simple patterns. Ground compartments
/// must match up to congruence; compartment patterns bind a wrap variable and a
/// content variable to the unmatched remainders.
struct Pattern {
  Multiset atoms;
  std::vector<Compartment> ground;
  std::vector<CompartmentPattern> compartments;

  bool empty() const;
  friend bool operator==(const Pattern&, const Pattern&);
};

/// (ā x ⌋ p̄ X)^ℓ
struct CompartmentPattern {
  Multiset wrap_atoms;
  std::string wrap_var;
  Pattern content;
  std::string content_var;
  std::string label;

  friend bool operator==(const CompartmentPattern&, const CompartmentPattern&) = default;
};

inline bool Pattern::empty() const { return atoms.empty() && ground.empty() && compartments.empty(); }
inline bool operator==(const Pattern& a, const Pattern& b) {
  return a.atoms == b.atoms && a.ground == b.ground && a.compartments == b.compartments;
}

struct OpenCompartment;

/// Right-hand side of a rule: atoms, term variables and open compartments.
struct OpenTerm {
  Multiset atoms;
  std::vector<std::string> vars;
  std::vector<OpenCompartment> compartments;

  bool empty() const;
  friend bool operator==(const OpenTerm&, const OpenTerm&);
};

struct OpenCompartment {
  Multiset wrap_atoms;
  std::vector<std::string> wrap_vars;
  OpenTerm content;
  std::string label;

  friend bool operator==(const OpenCompartment&, const OpenCompartment&) = default;
};

inline bool OpenTerm::empty() const { return atoms.empty() && vars.empty() && compartments.empty(); }
inline bool operator==(const OpenTerm& a, const OpenTerm& b) {
  return a.atoms == b.atoms && a.vars == b.vars && a.compartments == b.compartments;
}

/// ℓ : P →ᵏ O, already expanded to a single label.
struct Rule {
  std::string name;
  std::string label;
  Pattern lhs;
  OpenTerm rhs;
  double k = 0.0;

  /// Variable-free, compartment-free on both sides.
  bool biochemical() const {
    return lhs.ground.empty() && lhs.compartments.empty() && rhs.vars.empty() &&
           rhs.compartments.empty();
  }

  friend bool operator==(const Rule&, const Rule&) = default;
};

/// σ: term variables to terms, wrap variables to atom multisets.
struct Instantiation {
  std::map<std::string, Term> terms;
  std::map<std::string, Multiset> wraps;

  friend bool operator==(const Instantiation&, const Instantiation&) = default;
};

struct CompartmentChoice;

/// Which compartments of a content a pattern consumed. Parallel to the
/// pattern's `ground` and `compartments` vectors. Atoms are indistinguishable
/// and need no selection.
struct Selection {
  std::vector<CompartmentId> ground;
  std::vector<CompartmentChoice> compartments;

  friend bool operator==(const Selection&, const Selection&);
};

struct CompartmentChoice {
  CompartmentId id;
  Selection inner;

  friend bool operator==(const CompartmentChoice&, const CompartmentChoice&) = default;
};

inline bool operator==(const Selection& a, const Selection& b) {
  return a.ground == b.ground && a.compartments == b.compartments;
}

/// One group of applications of a rule at one site that all yield the same
/// resulting term; multiplicity is Occ for that result.
struct Match {
  std::size_t rule = 0;
  CompartmentId site;
  std::uint64_t multiplicity = 0;
  Selection selection;
};

// ---------------------------------------------------------------------------
// Variables and validation

namespace detail {

inline void collect_vars(const Pattern& p, std::vector<std::string>& out) {
  for (const auto& cp : p.compartments) {
    out.push_back(cp.wrap_var);
    collect_vars(cp.content, out);
    out.push_back(cp.content_var);
  }
}

inline void collect_vars(const OpenTerm& o, std::vector<std::string>& wraps,
                         std::vector<std::string>& terms) {
  for (const auto& v : o.vars) terms.push_back(v);
  for (const auto& c : o.compartments) {
    for (const auto& v : c.wrap_vars) wraps.push_back(v);
    collect_vars(c.content, wraps, terms);
  }
}

} // namespace detail

/// All variables of P in occurrence order (wrap and term variables alike).
inline std::vector<std::string> pattern_variables(const Pattern& p) {
  std::vector<std::string> out;
  detail::collect_vars(p, out);
  return out;
}

inline bool is_linear(const Pattern& p) {
  auto vars = pattern_variables(p);
  std::sort(vars.begin(), vars.end());
  return std::adjacent_find(vars.begin(), vars.end()) == vars.end();
}

// ---------------------------------------------------------------------------
// Substitution

inline Term substitute(const Pattern& p, const Instantiation& sigma);

namespace detail {

template <typename Map>
const auto& lookup(const Map& m, const std::string& var) {
  auto it = m.find(var);
  if (it == m.end()) throw Error("unbound variable '" + var + "'");
  return it->second;
}

} // namespace detail

/// Pσ. Ground compartments keep whatever index they carry.
inline Term substitute(const Pattern& p, const Instantiation& sigma) {
  Term t;
  t.atoms = p.atoms;
  t.compartments = p.ground;
  for (const auto& cp : p.compartments) {
    Compartment c;
    c.label = cp.label;
    c.wrap = cp.wrap_atoms;
    c.wrap.add_all(detail::lookup(sigma.wraps, cp.wrap_var));
    c.content = substitute(cp.content, sigma);
    const Term& rest = detail::lookup(sigma.terms, cp.content_var);
    c.content.atoms.add_all(rest.atoms);
    c.content.compartments.insert(c.content.compartments.end(), rest.compartments.begin(),
                                  rest.compartments.end());
    t.compartments.push_back(std::move(c));
  }
  return canonicalize(std::move(t));
}

/// Oσ with all compartment indices left as bound (new compartments get 0).
inline Term instantiate(const OpenTerm& o, const Instantiation& sigma) {
  Term t;
  t.atoms = o.atoms;
  for (const auto& v : o.vars) {
    const Term& bound = detail::lookup(sigma.terms, v);
    t.atoms.add_all(bound.atoms);
    t.compartments.insert(t.compartments.end(), bound.compartments.begin(), bound.compartments.end());
  }
  for (const auto& oc : o.compartments) {
    Compartment c;
    c.label = oc.label;
    c.wrap = oc.wrap_atoms;
    for (const auto& v : oc.wrap_vars) c.wrap.add_all(detail::lookup(sigma.wraps, v));
    c.content = instantiate(oc.content, sigma);
    t.compartments.push_back(std::move(c));
  }
  return canonicalize(std::move(t));
}

// ---------------------------------------------------------------------------
// Matching

namespace detail {

struct Alternative {
  std::uint64_t multiplicity;
  Selection selection;
};

inline std::vector<Alternative> match_pattern(const Pattern& p, const Term& t);

struct CompartmentSearch {
  const Pattern& pattern;
  const Term& term;
  std::vector<std::size_t> ground_order;    // ground pattern indices sorted by code
  std::vector<std::string> ground_codes;    // per ground pattern
  std::vector<std::string> term_codes;      // per term compartment, only if needed
  std::vector<bool> used;
  std::vector<std::size_t> ground_choice;   // term index per ground pattern
  std::vector<CompartmentChoice> choices;
  std::vector<Alternative>& out;

  CompartmentSearch(const Pattern& p, const Term& t, std::vector<Alternative>& sink)
      : pattern(p), term(t), used(t.compartments.size(), false),
        ground_choice(p.ground.size()), out(sink) {
    choices.reserve(p.compartments.size());
    if (!p.ground.empty()) {
      for (const auto& g : p.ground) ground_codes.push_back(canonical_encoding(g));
      for (const auto& c : t.compartments) term_codes.push_back(canonical_encoding(c));
      ground_order.resize(p.ground.size());
      for (std::size_t i = 0; i < ground_order.size(); ++i) ground_order[i] = i;
      std::stable_sort(ground_order.begin(), ground_order.end(),
                       [&](std::size_t a, std::size_t b) { return ground_codes[a] < ground_codes[b]; });
    }
  }

  void ground_step(std::size_t k, std::uint64_t mult) {
    if (k == ground_order.size()) {
      choices.clear();
      pattern_step(0, mult);
      return;
    }
    std::size_t gi = ground_order[k];
    // identical ground patterns are interchangeable: pick increasing indices
    std::size_t first = 0;
    if (k > 0 && ground_codes[ground_order[k - 1]] == ground_codes[gi])
      first = ground_choice[ground_order[k - 1]] + 1;
    for (std::size_t j = first; j < term.compartments.size(); ++j) {
      if (used[j] || term_codes[j] != ground_codes[gi]) continue;
      used[j] = true;
      ground_choice[gi] = j;
      ground_step(k + 1, mult);
      used[j] = false;
    }
  }

  void pattern_step(std::size_t k, std::uint64_t mult) {
    if (k == pattern.compartments.size()) {
      Selection sel;
      sel.ground.reserve(pattern.ground.size());
      for (std::size_t gi = 0; gi < pattern.ground.size(); ++gi)
        sel.ground.push_back(term.compartments[ground_choice[gi]].id);
      sel.compartments = choices;
      out.push_back({mult, std::move(sel)});
      return;
    }
    const CompartmentPattern& cp = pattern.compartments[k];
    for (std::size_t j = 0; j < term.compartments.size(); ++j) {
      if (used[j]) continue;
      const Compartment& c = term.compartments[j];
      if (c.label != cp.label) continue;
      std::uint64_t wrap_ways = selections(c.wrap, cp.wrap_atoms);
      if (wrap_ways == 0) continue;
      if (cp.content.ground.empty() && cp.content.compartments.empty()) {
        std::uint64_t ways = selections(c.content.atoms, cp.content.atoms);
        if (ways == 0) continue;
        used[j] = true;
        choices.push_back({c.id, {}});
        pattern_step(k + 1, mult * wrap_ways * ways);
        choices.pop_back();
        used[j] = false;
        continue;
      }
      auto inner = match_pattern(cp.content, c.content);
      if (inner.empty()) continue;
      used[j] = true;
      for (auto& alt : inner) {
        choices.push_back({c.id, std::move(alt.selection)});
        pattern_step(k + 1, mult * wrap_ways * alt.multiplicity);
        choices.pop_back();
      }
      used[j] = false;
    }
  }
};

/// Every way of embedding p into the top level of t. Multiplicities count
/// distinct choices of explicit atoms and compartments.
inline std::vector<Alternative> match_pattern(const Pattern& p, const Term& t) {
  std::vector<Alternative> out;
  std::uint64_t atom_ways = selections(t.atoms, p.atoms);
  if (atom_ways == 0) return out;
  if (p.ground.empty() && p.compartments.empty()) {
    out.push_back({atom_ways, {}});
    return out;
  }
  if (p.ground.size() + p.compartments.size() > t.compartments.size()) return out;
  CompartmentSearch search(p, t, out);
  search.ground_step(0, atom_ways);
  return out;
}

inline std::size_t index_of(const Term& t, CompartmentId id) {
  for (std::size_t i = 0; i < t.compartments.size(); ++i)
    if (t.compartments[i].id == id) return i;
  return t.compartments.size();
}

inline void check_selection(const Term& t, const Pattern& p, const Selection& sel) {
  if (!t.atoms.contains(p.atoms)) throw StaleMatch("reactant atoms no longer present");
  if (sel.ground.size() != p.ground.size() || sel.compartments.size() != p.compartments.size())
    throw StaleMatch("selection does not fit the pattern");
  std::set<CompartmentId> seen;
  for (std::size_t i = 0; i < p.ground.size(); ++i) {
    std::size_t j = index_of(t, sel.ground[i]);
    if (j == t.compartments.size() || !seen.insert(sel.ground[i]).second)
      throw StaleMatch("matched compartment " + to_string(sel.ground[i]) + " is gone");
    if (canonical_encoding(t.compartments[j]) != canonical_encoding(p.ground[i]))
      throw StaleMatch("compartment " + to_string(sel.ground[i]) + " changed");
  }
  for (std::size_t i = 0; i < p.compartments.size(); ++i) {
    const auto& choice = sel.compartments[i];
    const auto& cp = p.compartments[i];
    std::size_t j = index_of(t, choice.id);
    if (j == t.compartments.size() || !seen.insert(choice.id).second)
      throw StaleMatch("matched compartment " + to_string(choice.id) + " is gone");
    const Compartment& c = t.compartments[j];
    if (c.label != cp.label || !c.wrap.contains(cp.wrap_atoms))
      throw StaleMatch("compartment " + to_string(choice.id) + " no longer matches");
    check_selection(c.content, cp.content, choice.inner);
  }
}

/// Bookkeeping for index inheritance while building the right-hand side.
struct Extraction {
  Instantiation sigma;
  Term removed;
  std::map<std::string, CompartmentId> var_owner;  // variable -> index of the compartment it came from
  std::vector<std::pair<std::string, CompartmentId>> removed_ground;  // (code, index)
};

/// Removes the selected material from t (already checked) and records σ.
/// Only the outermost call records into `removed`: selected compartments are
/// recorded whole, so material inside them is already there.
inline void extract(Term& t, const Pattern& p, const Selection& sel, Extraction& ex, bool outer = true) {
  t.atoms.remove_all(p.atoms);
  if (outer) ex.removed.atoms.add_all(p.atoms);
  for (std::size_t i = 0; i < p.ground.size(); ++i) {
    std::size_t j = index_of(t, sel.ground[i]);
    ex.removed_ground.emplace_back(canonical_encoding(t.compartments[j]), t.compartments[j].id);
    if (outer) ex.removed.compartments.push_back(t.compartments[j]);
    t.compartments.erase(t.compartments.begin() + static_cast<std::ptrdiff_t>(j));
  }
  for (std::size_t i = 0; i < p.compartments.size(); ++i) {
    const auto& cp = p.compartments[i];
    const auto& choice = sel.compartments[i];
    std::size_t j = index_of(t, choice.id);
    Compartment c = std::move(t.compartments[j]);
    t.compartments.erase(t.compartments.begin() + static_cast<std::ptrdiff_t>(j));
    if (outer) ex.removed.compartments.push_back(c);
    extract(c.content, cp.content, choice.inner, ex, false);
    c.wrap.remove_all(cp.wrap_atoms);
    ex.sigma.wraps[cp.wrap_var] = std::move(c.wrap);
    ex.sigma.terms[cp.content_var] = std::move(c.content);
    ex.var_owner[cp.wrap_var] = c.id;
    ex.var_owner[cp.content_var] = c.id;
  }
}

struct Builder {
  const Extraction& ex;
  State& state;
  std::set<CompartmentId> placed;

  void renumber_duplicates(Term& t) {
    for (auto& c : t.compartments) {
      if (!placed.insert(c.id).second) {
        c.id = state.fresh_id();
        placed.insert(c.id);
      }
      renumber_duplicates(c.content);
    }
  }

  std::optional<CompartmentId> inherited(const OpenCompartment& oc, const Term& built) {
    auto try_var = [&](const std::string& v) -> std::optional<CompartmentId> {
      auto it = ex.var_owner.find(v);
      if (it != ex.var_owner.end() && !placed.count(it->second)) return it->second;
      return std::nullopt;
    };
    for (const auto& v : oc.wrap_vars)
      if (auto id = try_var(v)) return id;
    for (const auto& v : oc.content.vars)
      if (auto id = try_var(v)) return id;
    if (oc.wrap_vars.empty() && oc.content.vars.empty()) {
      Compartment probe{oc.wrap_atoms, built, oc.label, {}};
      std::string code = canonical_encoding(probe);
      for (const auto& [c, id] : ex.removed_ground)
        if (c == code && !placed.count(id)) return id;
    }
    return std::nullopt;
  }

  Term build(const OpenTerm& o) {
    Term t;
    t.atoms = o.atoms;
    for (const auto& v : o.vars) {
      Term bound = lookup(ex.sigma.terms, v);
      renumber_duplicates(bound);
      t.atoms.add_all(bound.atoms);
      for (auto& c : bound.compartments) t.compartments.push_back(std::move(c));
    }
    for (const auto& oc : o.compartments) {
      Compartment c;
      c.label = oc.label;
      c.wrap = oc.wrap_atoms;
      for (const auto& v : oc.wrap_vars) c.wrap.add_all(lookup(ex.sigma.wraps, v));
      c.content = build(oc.content);
      auto id = inherited(oc, c.content);
      c.id = id ? *id : state.fresh_id();
      placed.insert(c.id);
      t.compartments.push_back(std::move(c));
    }
    return t;
  }
};

} // namespace detail

/// All applications of `rule` in every live compartment whose label matches,
/// grouped per site by resulting term. `rule_index` is copied into each Match.
inline std::vector<Match> match_rule(const State& state, const Rule& rule, std::size_t rule_index = 0);

/// Occ of one match group.
inline std::uint64_t occ(const Match& m) { return m.multiplicity; }

/// Sum of Occ over a rule's match groups (0 when the rule does not apply).
inline std::uint64_t total_occ(const std::vector<Match>& matches) {
  std::uint64_t total = 0;
  for (const auto& m : matches) total += m.multiplicity;
  return total;
}

/// Rewrites Pσ into Oσ at the match site, in place. Compartments matched by a
/// compartment pattern pass their index on to the right-hand compartment that
/// reuses their variables; other new compartments get fresh indices.
inline void apply_in_place(State& state, const Rule& rule, const Match& match) {
  Term* site = find_content(state, match.site);
  if (site == nullptr) throw StaleMatch("site " + to_string(match.site) + " is not live");
  if (rule.biochemical()) {
    if (!site->atoms.contains(rule.lhs.atoms)) throw StaleMatch("reactant atoms no longer present");
    site->atoms.remove_all(rule.lhs.atoms);
    site->atoms.add_all(rule.rhs.atoms);
    // sibling order depends on content, so only the top level can skip this
    if (match.site != kTopId) state.top = canonicalize(std::move(state.top));
    return;
  }
  detail::check_selection(*site, rule.lhs, match.selection);
  detail::Extraction ex;
  detail::extract(*site, rule.lhs, match.selection, ex);
  detail::Builder builder{ex, state, {}};
  Term produced = builder.build(rule.rhs);
  site->atoms.add_all(produced.atoms);
  for (auto& c : produced.compartments) site->compartments.push_back(std::move(c));
  state.top = canonicalize(std::move(state.top));
}

inline State apply(State state, const Rule& rule, const Match& match) {
  apply_in_place(state, rule, match);
  return state;
}

/// σ of a match against the current state.
inline Instantiation bindings(const State& state, const Rule& rule, const Match& match) {
  State copy = state;
  Term* site = find_content(copy, match.site);
  if (site == nullptr) throw StaleMatch("site " + to_string(match.site) + " is not live");
  detail::check_selection(*site, rule.lhs, match.selection);
  detail::Extraction ex;
  detail::extract(*site, rule.lhs, match.selection, ex);
  return ex.sigma;
}

/// The material a match removes from its site.
inline Term consumed(const State& state, const Rule& rule, const Match& match) {
  State copy = state;
  Term* site = find_content(copy, match.site);
  if (site == nullptr) throw StaleMatch("site " + to_string(match.site) + " is not live");
  detail::check_selection(*site, rule.lhs, match.selection);
  detail::Extraction ex;
  detail::extract(*site, rule.lhs, match.selection, ex);
  return canonicalize(std::move(ex.removed));
}

/// Atoms consumed by the match, per compartment they are taken from.
inline std::vector<std::pair<CompartmentId, Multiset>> consumed_reagents(const Rule& rule,
                                                                         const Match& match) {
  std::vector<std::pair<CompartmentId, Multiset>> out;
  auto walk = [&](auto& self, const Pattern& p, const Selection& sel, CompartmentId where) -> void {
    if (!p.atoms.empty()) out.emplace_back(where, p.atoms);
    for (std::size_t i = 0; i < p.compartments.size(); ++i) {
      const auto& cp = p.compartments[i];
      const auto& choice = sel.compartments[i];
      self(self, cp.content, choice.inner, choice.id);
    }
  };
  walk(walk, rule.lhs, match.selection, match.site);
  return out;
}

/// Calls visit(Match&&) for every grouped match of `rule` at the sites where
/// site_ok(id) holds.
template <typename SiteOk, typename Visit>
void for_each_match(const State& state, const Rule& rule, std::size_t rule_index, SiteOk&& site_ok, Visit&& visit) {
  bool simple = rule.lhs.ground.empty() && rule.lhs.compartments.empty();
  for_each_site(state, [&](const Term& content, CompartmentId id, std::string_view label,
                           std::optional<CompartmentId>) {
    if (label != rule.label || !site_ok(id)) return;
    if (simple) {
      std::uint64_t ways = selections(content.atoms, rule.lhs.atoms);
      if (ways > 0) visit(Match{rule_index, id, ways, {}});
      return;
    }
    auto alts = detail::match_pattern(rule.lhs, content);
    if (alts.empty()) return;
    if (alts.size() == 1) {
      visit(Match{rule_index, id, alts.front().multiplicity, std::move(alts.front().selection)});
      return;
    }
    // several embeddings: group those whose results are congruent
    std::vector<std::string> codes;
    std::vector<Match> groups;
    for (auto& alt : alts) {
      State scratch;
      scratch.top = content;
      scratch.next_id = state.next_id;
      Match probe{rule_index, kTopId, alt.multiplicity, alt.selection};
      apply_in_place(scratch, rule, probe);
      std::string code = canonical_encoding(scratch.top);
      auto it = std::find(codes.begin(), codes.end(), code);
      if (it == codes.end()) {
        codes.push_back(std::move(code));
        groups.push_back({rule_index, id, alt.multiplicity, std::move(alt.selection)});
      } else {
        groups[static_cast<std::size_t>(it - codes.begin())].multiplicity += alt.multiplicity;
      }
    }
    for (auto& g : groups) visit(std::move(g));
  });
}

template <typename Visit>
void for_each_match(const State& state, const Rule& rule, std::size_t rule_index, Visit&& visit) {
  for_each_match(state, rule, rule_index, [](CompartmentId) { return true; }, visit);
}

inline std::vector<Match> match_rule(const State& state, const Rule& rule, std::size_t rule_index) {
  std::vector<Match> out;
  for_each_match(state, rule, rule_index, [&](Match&& m) { out.push_back(std::move(m)); });
  return out;
}

} // namespace cwc

#endif // CWC_PATTERN_HPP
