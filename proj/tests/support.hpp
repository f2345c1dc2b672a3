// Shared test helpers: random model text, an independent brute-force Occ
// oracle working on tagged occurrences, and small file utilities.
#ifndef CWC_TESTS_SUPPORT_HPP
#define CWC_TESTS_SUPPORT_HPP

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cwc/cwc.hpp"

namespace support {

inline std::string models_dir() { return CWC_MODELS_DIR; }

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline cwc::ModelFile load_model(const std::string& name) {
  return cwc::parse_model(read_file(models_dir() + "/" + name));
}

// ---------------------------------------------------------------------------
// Random text

class Gen {
public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool chance(double p) { return std::bernoulli_distribution(p)(rng_); }
  template <typename T>
  const T& pick(const std::vector<T>& v) { return v[static_cast<std::size_t>(uniform(0, int(v.size()) - 1))]; }

  /// Up to `max_atoms` atoms drawn from `names`, as "2*a b" items.
  std::string atoms(int max_atoms, const std::vector<std::string>& names) {
    std::map<std::string, int> counts;
    int n = uniform(0, max_atoms);
    for (int i = 0; i < n; ++i) ++counts[pick(names)];
    std::string out;
    for (const auto& [name, c] : counts) {
      if (!out.empty()) out += ' ';
      if (c > 1 || chance(0.1)) out += std::to_string(c) + "*";
      out += name;
    }
    return out;
  }

  /// Ground term text: ≤max_atoms atoms and ≤max_comps compartments per level.
  std::string term(int depth, int max_atoms, int max_comps, const std::vector<std::string>& labels) {
    std::vector<std::string> items;
    std::string a = atoms(max_atoms, kAtoms);
    if (!a.empty()) items.push_back(a);
    int comps = depth > 0 ? uniform(0, max_comps) : 0;
    for (int i = 0; i < comps; ++i)
      items.push_back("(" + atoms(2, kAtoms) + "|" + term(depth - 1, 3, 1, labels) + ")@" + pick(labels));
    return join(items);
  }

  /// A rule line over labels {T} ∪ labels. Variables are linear; the right
  /// side uses each left-side variable at most once.
  std::string rule(const std::vector<std::string>& labels, const std::string& name) {
    std::vector<std::string> all = labels;
    all.push_back("T");
    std::string header = pick(all);
    if (chance(0.2)) {
      std::string other = pick(all);
      if (other != header) header += ", " + other;
    }
    std::vector<std::string> wraps, terms;
    int var = 0;
    std::string lhs;
    do {
      wraps.clear();
      terms.clear();
      var = 0;
      lhs = pattern(1, labels, wraps, terms, var);
    } while (lhs.empty());
    std::string rhs = open(1, labels, wraps, terms);
    std::string out = name.empty() ? "" : "[" + name + "] ";
    out += header + " : " + lhs + " =>";
    if (!rhs.empty()) out += " " + rhs;
    out += ", k=" + rate();
    return out;
  }

  std::string rate() {
    switch (uniform(0, 3)) {
      case 0: return std::to_string(uniform(1, 9));
      case 1: return cwc::detail::format_number(std::uniform_real_distribution<double>(0, 2)(rng_));
      case 2: return std::to_string(uniform(1, 9)) + "e-" + std::to_string(uniform(1, 9));
      default: return "0." + std::to_string(uniform(1, 999));
    }
  }

  /// A whole model file.
  std::string model(int index) {
    std::vector<std::string> labels;
    int nl = uniform(0, 2);
    for (int i = 0; i < nl; ++i) labels.push_back(std::string("L") + char('a' + i) + std::to_string(index % 7));
    std::string out;
    if (!labels.empty()) out += "labels " + join(labels) + "\n";
    int rules = uniform(1, 5);
    for (int i = 0; i < rules; ++i) out += rule(labels, chance(0.8) ? "r" + std::to_string(i) : "") + "\n";
    std::vector<std::string> used = labels.empty() ? std::vector<std::string>{"La"} : labels;
    if (labels.empty()) out = "labels La\n" + out;
    out += "term " + term(2, 4, 2, used) + "\n";
    out += "t_end " + rate() + "\n";
    if (chance(0.5)) out += "phi " + (chance(0.3) ? std::string("inf") : rate()) + "\n";
    if (chance(0.5)) out += "psi " + rate() + "\n";
    if (chance(0.5)) out += "dt_max " + rate() + "\n";
    if (chance(0.5)) out += "seed " + std::to_string(uniform(0, 1000000)) + "\n";
    if (chance(0.5)) out += "mode " + pick(std::vector<std::string>{"stochastic", "deterministic", "hybrid"}) + "\n";
    if (chance(0.7)) {
      out += "observe " + pick(kAtoms) + "@top";
      if (chance(0.5)) out += " " + pick(kAtoms) + "@" + pick(used);
      if (chance(0.5)) out += " " + pick(kAtoms) + "@" + pick(used) + "[" + std::to_string(uniform(0, 2)) + "]";
      out += "\n";
    }
    return out;
  }

  std::mt19937_64& engine() { return rng_; }

  int lhs_atoms = 3;    // per level of a left side
  int inner_atoms = 2;  // inside compartment patterns

  inline static const std::vector<std::string> kAtoms{"a", "b", "c", "d"};

private:
  static std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) {
      if (s.empty()) continue;
      if (!out.empty()) out += ' ';
      out += s;
    }
    return out;
  }

  std::string pattern(int depth, const std::vector<std::string>& labels, std::vector<std::string>& wraps,
                      std::vector<std::string>& terms, int& var) {
    std::vector<std::string> items;
    items.push_back(atoms(depth > 0 ? lhs_atoms : inner_atoms, kAtoms));
    if (!labels.empty() && chance(0.15)) items.push_back("(" + atoms(1, kAtoms) + "|" + atoms(2, kAtoms) + ")@" + pick(labels));
    int comps = labels.empty() || depth == 0 ? 0 : uniform(0, 2);
    for (int i = 0; i < comps; ++i) {
      std::string w = "~w" + std::to_string(var);
      std::string t = "~X" + std::to_string(var);
      ++var;
      wraps.push_back(w);
      terms.push_back(t);
      std::string inner = pattern(depth - 1, labels, wraps, terms, var);
      items.push_back("(" + join({atoms(depth > 0 ? 1 : 0, kAtoms), w}) + "|" + join({inner, t}) + ")@" + pick(labels));
    }
    return join(items);
  }

  std::string open(int depth, const std::vector<std::string>& labels, std::vector<std::string>& wraps,
                   std::vector<std::string>& terms) {
    std::vector<std::string> items;
    items.push_back(atoms(3, kAtoms));
    auto take = [&](std::vector<std::string>& pool) -> std::string {
      if (pool.empty() || !chance(0.6)) return "";
      std::size_t i = static_cast<std::size_t>(uniform(0, int(pool.size()) - 1));
      std::string v = pool[i];
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(i));
      return v;
    };
    items.push_back(take(terms));
    int comps = labels.empty() || depth == 0 ? 0 : uniform(0, 2);
    for (int i = 0; i < comps; ++i) {
      std::string w = join({atoms(1, kAtoms), take(wraps)});
      std::string c = open(depth - 1, labels, wraps, terms);
      items.push_back("(" + w + "|" + c + ")@" + pick(labels));
    }
    return join(items);
  }

  std::mt19937_64 rng_;
};

// ---------------------------------------------------------------------------
// Brute-force Occ oracle
//
// Every atom occurrence carries a distinct tag, so choosing reactants means
// choosing tags. All embeddings of the left side are enumerated directly,
// each is rewritten with a separate substitution routine, and the results
// are counted per (site, canonical result).

struct TTerm;

struct TComp {
  std::vector<std::string> wrap;  // one entry per occurrence
  std::vector<TTerm> content;     // exactly one element (recursive type)
  std::string label;
  std::uint64_t id = 0;
};

struct TTerm {
  std::vector<std::string> atoms;  // one entry per occurrence
  std::vector<TComp> comps;
};

inline TTerm tag(const cwc::Term& t) {
  TTerm out;
  for (const auto& [name, n] : t.atoms)
    for (cwc::Count i = 0; i < n; ++i) out.atoms.push_back(name);
  for (const auto& c : t.compartments) {
    TComp tc;
    for (const auto& [name, n] : c.wrap)
      for (cwc::Count i = 0; i < n; ++i) tc.wrap.push_back(name);
    tc.content.push_back(tag(c.content));
    tc.label = c.label;
    tc.id = c.id.value;
    out.comps.push_back(std::move(tc));
  }
  return out;
}

/// Canonical text, written independently of the library's encoder.
inline std::string encode(const TTerm& t);

inline std::string encode_atoms(std::vector<std::string> atoms) {
  std::sort(atoms.begin(), atoms.end());
  std::string out;
  for (std::size_t i = 0; i < atoms.size();) {
    std::size_t j = i;
    while (j < atoms.size() && atoms[j] == atoms[i]) ++j;
    if (!out.empty()) out += ' ';
    if (j - i > 1) out += std::to_string(j - i) + "*";
    out += atoms[i];
    i = j;
  }
  return out;
}

inline std::string encode(const TComp& c) {
  return "(" + encode_atoms(c.wrap) + "|" + encode(c.content.front()) + ")@" + c.label;
}

inline std::string encode(const TTerm& t) {
  std::vector<std::tuple<std::string, std::string, std::string>> keys;
  for (const auto& c : t.comps) keys.emplace_back(c.label, encode_atoms(c.wrap), encode(c));
  std::sort(keys.begin(), keys.end());
  std::string out = encode_atoms(t.atoms);
  for (const auto& k : keys) {
    if (!out.empty()) out += ' ';
    out += std::get<2>(k);
  }
  return out;
}

struct Sigma {
  std::map<std::string, TTerm> terms;
  std::map<std::string, std::vector<std::string>> wraps;
};

inline std::vector<std::string> expand(const cwc::Multiset& m) {
  std::vector<std::string> out;
  for (const auto& [name, n] : m)
    for (cwc::Count i = 0; i < n; ++i) out.push_back(name);
  return out;
}

/// Calls k(rest, chosen) for every subset of `pool` whose multiset equals
/// `wanted`; `rest` is the complement.
inline void choose_atoms(const std::vector<std::string>& pool, const cwc::Multiset& wanted,
                         const std::function<void(std::vector<std::string>)>& k) {
  std::vector<std::string> want = expand(wanted);
  std::sort(want.begin(), want.end());
  std::size_t n = pool.size();
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcountll(mask)) != want.size()) continue;
    std::vector<std::string> chosen, rest;
    for (std::size_t i = 0; i < n; ++i) ((mask >> i) & 1 ? chosen : rest).push_back(pool[i]);
    std::sort(chosen.begin(), chosen.end());
    if (chosen == want) k(std::move(rest));
  }
}

inline std::string ground_code(const cwc::Compartment& c) {
  return encode(tag(cwc::Term{{}, {c}}));
}

/// Every embedding of p into t: k(remainder of t, σ accumulated so far).
inline void embed(const cwc::Pattern& p, const TTerm& t, const Sigma& sigma,
                  const std::function<void(TTerm, Sigma)>& k) {
  choose_atoms(t.atoms, p.atoms, [&](std::vector<std::string> rest_atoms) {
    TTerm rest{std::move(rest_atoms), t.comps};
    // ground compartments: ordered injective choices
    std::function<void(std::size_t, TTerm)> ground = [&](std::size_t gi, TTerm cur) {
      if (gi == p.ground.size()) {
        std::function<void(std::size_t, TTerm, Sigma)> pats = [&](std::size_t pi, TTerm cur2, Sigma s) {
          if (pi == p.compartments.size()) {
            k(std::move(cur2), std::move(s));
            return;
          }
          const auto& cp = p.compartments[pi];
          for (std::size_t j = 0; j < cur2.comps.size(); ++j) {
            const TComp& c = cur2.comps[j];
            if (c.label != cp.label) continue;
            TTerm without = cur2;
            without.comps.erase(without.comps.begin() + static_cast<std::ptrdiff_t>(j));
            choose_atoms(c.wrap, cp.wrap_atoms, [&](std::vector<std::string> wrap_rest) {
              embed(cp.content, c.content.front(), s, [&](TTerm inner_rest, Sigma s2) {
                s2.wraps[cp.wrap_var] = wrap_rest;
                s2.terms[cp.content_var] = std::move(inner_rest);
                pats(pi + 1, without, std::move(s2));
              });
            });
          }
        };
        pats(0, std::move(cur), sigma);
        return;
      }
      std::string want = encode(tag(cwc::Term{{}, {p.ground[gi]}}));
      for (std::size_t j = 0; j < cur.comps.size(); ++j) {
        TTerm probe;
        probe.comps.push_back(cur.comps[j]);
        if (encode(probe) != want) continue;
        TTerm without = cur;
        without.comps.erase(without.comps.begin() + static_cast<std::ptrdiff_t>(j));
        ground(gi + 1, std::move(without));
      }
    };
    ground(0, std::move(rest));
  });
}

inline TTerm substitute(const cwc::OpenTerm& o, const Sigma& s) {
  TTerm out;
  out.atoms = expand(o.atoms);
  for (const auto& v : o.vars) {
    const TTerm& b = s.terms.at(v);
    out.atoms.insert(out.atoms.end(), b.atoms.begin(), b.atoms.end());
    out.comps.insert(out.comps.end(), b.comps.begin(), b.comps.end());
  }
  for (const auto& oc : o.compartments) {
    TComp c;
    c.wrap = expand(oc.wrap_atoms);
    for (const auto& v : oc.wrap_vars) {
      const auto& w = s.wraps.at(v);
      c.wrap.insert(c.wrap.end(), w.begin(), w.end());
    }
    c.content.push_back(substitute(oc.content, s));
    c.label = oc.label;
    out.comps.push_back(std::move(c));
  }
  return out;
}

inline std::uint64_t factorial(std::uint64_t n) { return n <= 1 ? 1 : n * factorial(n - 1); }

using OccTable = std::map<std::pair<std::uint64_t, std::string>, std::uint64_t>;

/// Replaces the content of site `id` (0 = top) and returns the whole term.
inline bool replace_site(TTerm& t, std::uint64_t id, const TTerm& content) {
  for (auto& c : t.comps) {
    if (c.id == id) {
      c.content.front() = content;
      return true;
    }
    if (replace_site(c.content.front(), id, content)) return true;
  }
  return false;
}

inline void sites(const TTerm& t, std::uint64_t id, const std::string& label,
                  std::vector<std::tuple<std::uint64_t, std::string, const TTerm*>>& out) {
  out.emplace_back(id, label, &t);
  for (const auto& c : t.comps) sites(c.content.front(), c.id, c.label, out);
}

/// (site, canonical result) → number of embeddings, by exhaustive search.
inline OccTable brute_force_occ(const cwc::State& state, const cwc::Rule& rule) {
  TTerm top = tag(state.top);
  std::vector<std::tuple<std::uint64_t, std::string, const TTerm*>> all;
  sites(top, 0, "T", all);
  // identical ground patterns are interchangeable: count their choices once
  std::map<std::string, std::uint64_t> same;
  std::function<void(const cwc::Pattern&)> tally = [&](const cwc::Pattern& p) {
    std::map<std::string, std::uint64_t> local;
    for (const auto& g : p.ground) ++local[encode(tag(cwc::Term{{}, {g}}))];
    for (const auto& [code, n] : local) same[code + "#" + std::to_string(same.size())] = n;
    for (const auto& cp : p.compartments) tally(cp.content);
  };
  tally(rule.lhs);
  std::uint64_t divisor = 1;
  for (const auto& [code, n] : same) divisor *= factorial(n);

  OccTable table;
  for (const auto& [id, label, content] : all) {
    if (label != rule.label) continue;
    embed(rule.lhs, *content, {}, [&](TTerm rest, Sigma s) {
      TTerm produced = substitute(rule.rhs, s);
      rest.atoms.insert(rest.atoms.end(), produced.atoms.begin(), produced.atoms.end());
      rest.comps.insert(rest.comps.end(), produced.comps.begin(), produced.comps.end());
      TTerm whole = top;
      if (id == 0) whole = rest;
      else replace_site(whole, id, rest);
      ++table[{id, encode(whole)}];
    });
  }
  for (auto& [key, n] : table) n /= divisor;
  return table;
}

/// The same table from the library's matcher and rewriter.
inline OccTable library_occ(const cwc::State& state, const cwc::Rule& rule) {
  OccTable table;
  for (const auto& m : cwc::match_rule(state, rule)) {
    cwc::State next = cwc::apply(state, rule, m);
    table[{m.site.value, encode(tag(next.top))}] += m.multiplicity;
  }
  return table;
}

} // namespace support

#endif // CWC_TESTS_SUPPORT_HPP
