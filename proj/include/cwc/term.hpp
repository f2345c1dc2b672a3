#ifndef CWC_TERM_HPP
#define CWC_TERM_HPP

#include <algorithm>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "error.hpp"
#include "multiset.hpp"

namespace cwc {

/// Reserved name of the top-level compartment type.
inline constexpr std::string_view kTopLabel = "T";

struct CompartmentId {
  std::uint64_t value = 0;
  friend auto operator<=>(const CompartmentId&, const CompartmentId&) = default;
};

/// Index of the implicit top level (ι₀).
inline constexpr CompartmentId kTopId{0};

inline std::string to_string(CompartmentId id) { return "#" + std::to_string(id.value); }

struct Compartment;

/// A CWC term: a multiset of atoms plus a multiset of compartments.
struct Term {
  Multiset atoms;
  std::vector<Compartment> compartments;

  bool empty() const;
  friend bool operator==(const Term&, const Term&);
};

/// (wrap ⌋ content)^label. Never carries the top label.
struct Compartment {
  Multiset wrap;
  Term content;
  std::string label;
  CompartmentId id{};

  friend bool operator==(const Compartment&, const Compartment&) = default;
};

inline bool Term::empty() const { return atoms.empty() && compartments.empty(); }
inline bool operator==(const Term& a, const Term& b) {
  return a.atoms == b.atoms && a.compartments == b.compartments;
}

/// The simulation state: the whole term plus the counter for fresh indices.
struct State {
  Term top;
  std::uint64_t next_id = 1;

  CompartmentId fresh_id() { return CompartmentId{next_id++}; }
  friend bool operator==(const State&, const State&) = default;
};

namespace detail {

inline void append_multiset(std::string& out, const Multiset& m) {
  for (const auto& [name, n] : m) {
    if (!out.empty() && out.back() != '(' && out.back() != '|') out += ' ';
    if (n > 1) {
      out += std::to_string(n);
      out += '*';
    }
    out += name;
  }
}

inline std::string encode_compartment(const Compartment& c);

inline std::vector<std::string> sorted_compartment_codes(const Term& t) {
  std::vector<std::tuple<std::string_view, std::string, std::string>> keys;
  keys.reserve(t.compartments.size());
  for (const auto& c : t.compartments) {
    std::string wrap;
    append_multiset(wrap, c.wrap);
    keys.emplace_back(c.label, std::move(wrap), encode_compartment(c));
  }
  std::sort(keys.begin(), keys.end());
  std::vector<std::string> codes;
  codes.reserve(keys.size());
  for (auto& k : keys) codes.push_back(std::move(std::get<2>(k)));
  return codes;
}

inline std::string encode_term(const Term& t) {
  std::string out;
  append_multiset(out, t.atoms);
  for (const auto& code : sorted_compartment_codes(t)) {
    if (!out.empty()) out += ' ';
    out += code;
  }
  return out;
}

inline std::string encode_compartment(const Compartment& c) {
  std::string out = "(";
  append_multiset(out, c.wrap);
  out += '|';
  out += encode_term(c.content);
  out += ")@";
  out += c.label;
  return out;
}

} // namespace detail

/// Canonical text of a term's congruence class. Compartment indices are not
/// part of it. The format is the model-file term syntax.
inline std::string canonical_encoding(const Term& t) { return detail::encode_term(t); }
inline std::string canonical_encoding(const Compartment& c) { return detail::encode_compartment(c); }
inline std::string canonical_encoding(const Multiset& m) {
  std::string out;
  detail::append_multiset(out, m);
  return out;
}

/// Canonical representative: atoms by name (already guaranteed by Multiset),
/// compartments by (label, wrap, content), ties broken by index.
inline Term canonicalize(Term t) {
  if (t.compartments.empty()) return t;
  for (auto& c : t.compartments) c.content = canonicalize(std::move(c.content));
  if (t.compartments.size() > 1) {
    std::vector<std::pair<std::tuple<std::string, std::string, std::string, CompartmentId>, std::size_t>> keys;
    keys.reserve(t.compartments.size());
    for (std::size_t i = 0; i < t.compartments.size(); ++i) {
      const auto& c = t.compartments[i];
      keys.push_back({{c.label, canonical_encoding(c.wrap), canonical_encoding(c.content), c.id}, i});
    }
    std::sort(keys.begin(), keys.end());
    std::vector<Compartment> sorted;
    sorted.reserve(keys.size());
    for (const auto& k : keys) sorted.push_back(std::move(t.compartments[k.second]));
    t.compartments = std::move(sorted);
  }
  return t;
}

inline bool congruent(const Term& t, const Term& u) {
  if (t.atoms != u.atoms || t.compartments.size() != u.compartments.size()) return false;
  return canonical_encoding(t) == canonical_encoding(u);
}

struct CompartmentInfo {
  CompartmentId id;
  std::string label;
  std::optional<CompartmentId> parent;

  friend bool operator==(const CompartmentInfo&, const CompartmentInfo&) = default;
};

namespace detail {

template <typename TermT, typename Visit>
void preorder(TermT& t, CompartmentId self, std::string_view label,
              std::optional<CompartmentId> parent, Visit& visit) {
  visit(t, self, label, parent);
  for (auto& c : t.compartments) preorder(c.content, c.id, c.label, std::optional(self), visit);
}

} // namespace detail

/// Calls visit(content, id, label, parent) for ι₀ and every compartment, preorder.
template <typename Visit>
void for_each_site(const State& s, Visit&& visit) {
  detail::preorder(s.top, kTopId, kTopLabel, std::nullopt, visit);
}
template <typename Visit>
void for_each_site(State& s, Visit&& visit) {
  detail::preorder(s.top, kTopId, kTopLabel, std::nullopt, visit);
}

inline std::vector<CompartmentInfo> enumerate_compartments(const State& s) {
  std::vector<CompartmentInfo> out;
  for_each_site(s, [&](const Term&, CompartmentId id, std::string_view label,
                       std::optional<CompartmentId> parent) {
    out.push_back({id, std::string(label), parent});
  });
  return out;
}

namespace detail {

template <typename TermT>
auto find_content(TermT& t, CompartmentId id) -> decltype(&t) {
  for (auto& c : t.compartments) {
    if (c.id == id) return &c.content;
    if (auto* found = find_content(c.content, id)) return found;
  }
  return nullptr;
}

template <typename TermT>
auto find_compartment(TermT& t, CompartmentId id) -> decltype(&t.compartments.front()) {
  for (auto& c : t.compartments) {
    if (c.id == id) return &c;
    if (auto* found = find_compartment(c.content, id)) return found;
  }
  return nullptr;
}

} // namespace detail

/// Content of compartment id (ι₀ is the whole term), or nullptr if not live.
inline Term* find_content(State& s, CompartmentId id) {
  return id == kTopId ? &s.top : detail::find_content(s.top, id);
}
inline const Term* find_content(const State& s, CompartmentId id) {
  return id == kTopId ? &s.top : detail::find_content(s.top, id);
}

inline const Compartment* find_compartment(const State& s, CompartmentId id) {
  return detail::find_compartment(s.top, id);
}

/// BR(ι): the atoms at the top level of compartment ι's content.
inline const Multiset& biochemical_reagents(const State& s, CompartmentId id) {
  const Term* content = find_content(s, id);
  if (content == nullptr) throw UnknownCompartment("no live compartment " + to_string(id));
  return content->atoms;
}

/// Gives every compartment of t (recursively, preorder) a fresh index.
inline void assign_fresh_ids(Term& t, State& s) {
  for (auto& c : t.compartments) {
    c.id = s.fresh_id();
    assign_fresh_ids(c.content, s);
  }
}

/// Canonical order everywhere, then indices renumbered 1.. in preorder.
inline State make_state(Term t) {
  State s;
  s.top = canonicalize(std::move(t));
  assign_fresh_ids(s.top, s);
  return s;
}

} // namespace cwc

#endif // CWC_TERM_HPP
