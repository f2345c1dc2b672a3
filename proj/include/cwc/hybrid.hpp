#ifndef CWC_HYBRID_HPP
#define CWC_HYBRID_HPP

#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "model.hpp"
#include "ode.hpp"
#include "pattern.hpp"
#include "rng.hpp"
#include "stochastic.hpp"
#include "term.hpp"
#include "trajectory.hpp"

namespace cwc {

/// Nearest integer, ties to even.
inline Count round_half_even(double x) { return static_cast<Count>(std::nearbyint(x)); }

/// Term with integer counts plus, per compartment and species, the fractional
/// part left over by rounding the ODE results. The real amount of a species is
/// count + residual; the integer term alone drives matching and propensities.
struct HybridState {
  using Residuals = std::map<std::string, double, std::less<>>;

  State state;
  std::map<CompartmentId, Residuals> residual;
  double time = 0.0;

  const Residuals* residuals_at(CompartmentId id) const {
    auto it = residual.find(id);
    return it == residual.end() || it->second.empty() ? nullptr : &it->second;
  }

  double residual_of(CompartmentId id, std::string_view species) const {
    const Residuals* r = residuals_at(id);
    if (r == nullptr) return 0.0;
    auto it = r->find(species);
    return it == r->end() ? 0.0 : it->second;
  }

  double real(CompartmentId id, const std::string& species) const {
    const Term* content = find_content(state, id);
    if (content == nullptr) throw UnknownCompartment("no live compartment " + to_string(id));
    return static_cast<double>(content->atoms.count(species)) + residual_of(id, species);
  }

  /// Stores a real amount: the count becomes its rounding, the rest is kept.
  void commit(CompartmentId id, Term& content, const std::string& species, double value) {
    Count n = round_half_even(value);
    content.atoms.set(species, n);
    double rest = value - static_cast<double>(n);
    if (rest == 0) {
      auto site = residual.find(id);
      if (site != residual.end()) site->second.erase(species);
    } else {
      residual[id][species] = rest;
    }
  }

  /// Forgets residuals of compartments that are no longer live.
  void prune() {
    if (residual.empty()) return;
    std::erase_if(residual, [&](const auto& kv) {
      return kv.second.empty() || (kv.first != kTopId && find_content(state, kv.first) == nullptr);
    });
  }
};

/// Real amounts at one site.
struct SiteAmounts {
  const Term& content;
  const HybridState::Residuals* residuals;

  double operator()(std::string_view species) const {
    double v = static_cast<double>(content.atoms.count(species));
    if (residuals != nullptr)
      if (auto it = residuals->find(species); it != residuals->end()) v += it->second;
    return v;
  }
};

struct SitePartition {
  CompartmentId id;
  std::string label;
  std::vector<std::size_t> deterministic;  // D_ι
  std::vector<std::size_t> stochastic;     // S_ι
};

struct Partition {
  std::vector<SitePartition> sites;          // preorder
  std::vector<std::size_t> non_biochemical;  // N

  bool deterministic(std::size_t rule, CompartmentId site) const {
    for (const auto& s : sites)
      if (s.id == site) return std::binary_search(s.deterministic.begin(), s.deterministic.end(), rule);
    return false;
  }

  std::size_t deterministic_count() const {
    std::size_t n = 0;
    for (const auto& s : sites) n += s.deterministic.size();
    return n;
  }

  std::size_t stochastic_count() const {
    std::size_t n = non_biochemical.size();
    for (const auto& s : sites) n += s.stochastic.size();
    return n;
  }
};

/// K = k · Π [a]^h over the reactants, on real amounts.
inline double rate_of(const Rule& rule, const SiteAmounts& amount) {
  double v = rule.k;
  for (const auto& [name, h] : rule.lhs.atoms) {
    double c = amount(name);
    for (Count p = 0; p < h; ++p) v *= c;
  }
  return v;
}

inline double min_reactant(const Rule& rule, const SiteAmounts& amount) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& [name, h] : rule.lhs.atoms) m = std::min(m, amount(name));
  return m;
}

/// As partition(), reusing the storage of `p`.
inline void partition_into(const HybridState& hs, const std::vector<Rule>& rules, double phi, double psi,
                           Partition& p) {
  if (phi < 0 || psi < 0) throw Error("thresholds must be non-negative");
  p.non_biochemical.clear();
  for (std::size_t r = 0; r < rules.size(); ++r)
    if (!rules[r].biochemical()) p.non_biochemical.push_back(r);
  std::size_t n = 0;
  for_each_site(hs.state, [&](const Term& content, CompartmentId id, std::string_view label,
                              std::optional<CompartmentId>) {
    if (p.sites.size() <= n) p.sites.emplace_back();
    SitePartition& site = p.sites[n++];
    site.id = id;
    site.label.assign(label);
    site.deterministic.clear();
    site.stochastic.clear();
    SiteAmounts amount{content, hs.residuals_at(id)};
    for (std::size_t r = 0; r < rules.size(); ++r) {
      const Rule& rule = rules[r];
      if (rule.label != label || !rule.biochemical()) continue;
      double k = rule.k, lowest = std::numeric_limits<double>::infinity();
      for (const auto& [name, h] : rule.lhs.atoms) {
        double c = amount(name);
        for (Count i = 0; i < h; ++i) k *= c;
        lowest = std::min(lowest, c);
      }
      bool slow = k < phi || lowest < psi;
      (slow ? site.stochastic : site.deterministic).push_back(r);
    }
  });
  p.sites.resize(n);
}

/// A biochemical rule goes to S_ι when K < φ or its scarcest reactant is
/// below ψ, otherwise to D_ι. Non-biochemical rules are always in N.
inline Partition partition(const HybridState& hs, const std::vector<Rule>& rules, double phi, double psi) {
  Partition p;
  partition_into(hs, rules, phi, psi, p);
  return p;
}

/// Species held constant during one ODE span: per compartment, either a set
/// of species or the whole compartment.
struct Frozen {
  std::vector<std::pair<CompartmentId, const Multiset*>> species;
  std::vector<CompartmentId> whole;

  void clear() {
    species.clear();
    whole.clear();
  }

  bool holds(CompartmentId id, std::string_view s) const {
    if (std::find(whole.begin(), whole.end(), id) != whole.end()) return true;
    for (const auto& [where, atoms] : species)
      if (where == id && atoms->count(s) > 0) return true;
    return false;
  }
};

/// Reactants of the chosen event, in every compartment they are taken from.
/// Compartments matched as ground terms (and everything inside them) are
/// frozen whole, since the rewrite needs them unchanged.
inline void freeze_reactants(const State& state, const Rule& rule, const Match& match, Frozen& f) {
  f.clear();
  auto freeze_tree = [&](auto& self, const Compartment& c) -> void {
    f.whole.push_back(c.id);
    for (const auto& inner : c.content.compartments) self(self, inner);
  };
  auto walk = [&](auto& self, const Pattern& p, const Selection& sel, CompartmentId where) -> void {
    if (!p.atoms.empty()) f.species.emplace_back(where, &p.atoms);
    for (CompartmentId id : sel.ground)
      if (const Compartment* c = find_compartment(state, id)) freeze_tree(freeze_tree, *c);
    for (std::size_t i = 0; i < p.compartments.size(); ++i)
      self(self, p.compartments[i].content, sel.compartments[i].inner, sel.compartments[i].id);
  };
  walk(walk, rule.lhs, match.selection, match.site);
}

/// Mass-action systems per (label, D set), built on first use, plus scratch
/// space reused across steps.
class HybridContext {
public:
  const OdeSystem& system(const std::vector<Rule>& rules, const SitePartition& site) {
    for (const auto& e : systems_)
      if (e.label == site.label && e.rules == site.deterministic) return e.system;
    std::vector<Rule> chosen;
    for (std::size_t r : site.deterministic) chosen.push_back(rules[r]);
    systems_.push_back({site.label, site.deterministic, build_ode(chosen)});
    return systems_.back().system;
  }

  Partition partition;
  std::vector<Event> events;
  Frozen frozen;
  std::vector<double> amounts;
  std::vector<char> mask;
  OdeWorkspace workspace;

private:
  struct Entry {
    std::string label;
    std::vector<std::size_t> rules;
    OdeSystem system;
  };
  std::deque<Entry> systems_;
};

/// Integrates every D_ι of ctx.partition for duration dt and commits the
/// results, keeping ctx.frozen species fixed.
inline void advance(HybridState& hs, const std::vector<Rule>& rules, HybridContext& ctx, double dt,
                    double dt_max) {
  if (dt <= 0) return;
  bool changed = false;
  for (const auto& site : ctx.partition.sites) {
    if (site.deterministic.empty()) continue;
    const OdeSystem& sys = ctx.system(rules, site);
    Term* content = find_content(hs.state, site.id);
    SiteAmounts amount{*content, hs.residuals_at(site.id)};
    auto& c = ctx.amounts;
    auto& mask = ctx.mask;
    c.clear();
    mask.clear();
    for (const auto& s : sys.species()) {
      c.push_back(amount(s));
      mask.push_back(ctx.frozen.holds(site.id, s) ? 1 : 0);
    }
    integrate_in_place(sys, c, dt, dt_max, mask, ctx.workspace);
    for (std::size_t j = 0; j < c.size(); ++j)
      if (!mask[j]) hs.commit(site.id, *content, sys.species()[j], c[j]);
    changed = true;
  }
  if (changed) hs.state.top = canonicalize(std::move(hs.state.top));
}

struct HybridStepResult {
  enum class Kind { stochastic, deterministic_only, deadlock };
  Kind kind = Kind::deadlock;
  double tau = 0.0;
  std::size_t rule = 0;  // chosen rule, for Kind::stochastic
  bool applied = false;  // false when δ+τ passed t_end
};

/// One iteration: partition, a Gillespie step over ∪S_ι ∪ N (or, with no
/// such event, τ from the D rules), ODE integration of every D_ι over τ with
/// the event's reactants frozen, then the stochastic rewrite. Reporting times
/// passed on the way are recorded into `rec` when given. Past t_end the state
/// is advanced to t_end and the event is dropped. The partition used stays
/// in ctx.partition.
inline HybridStepResult hybrid_step(HybridState& hs, const std::vector<Rule>& rules, double phi, double psi,
                                    double dt_max, Rng& rng, HybridContext& ctx, double t_end,
                                    Recorder* rec = nullptr) {
  HybridStepResult out;
  partition_into(hs, rules, phi, psi, ctx.partition);
  const Partition& p = ctx.partition;

  build_propensities(
      hs.state, rules, [&](std::size_t r, CompartmentId site) { return !p.deterministic(r, site); }, ctx.events);

  ctx.frozen.clear();
  std::optional<GillespieStep> step;
  if (!ctx.events.empty()) {
    step = gillespie_step(ctx.events, rng);
    const Event& e = ctx.events[step->chosen];
    out.kind = HybridStepResult::Kind::stochastic;
    out.tau = step->tau;
    out.rule = e.rule;
    freeze_reactants(hs.state, rules[e.rule], e.match, ctx.frozen);
  } else {
    double tau = 0;
    for (const auto& site : p.sites) {
      if (site.deterministic.empty()) continue;
      SiteAmounts amount{*find_content(hs.state, site.id), hs.residuals_at(site.id)};
      for (std::size_t r : site.deterministic) {
        double k = rate_of(rules[r], amount);
        if (k > 0) tau = std::max(tau, rng.exponential(k));
      }
    }
    if (!(tau > 0)) return out;
    out.kind = HybridStepResult::Kind::deterministic_only;
    out.tau = tau;
  }

  double next = hs.time + out.tau;
  double limit = std::min(next, t_end);
  while (rec != nullptr && !rec->done() && rec->next_time() <= limit) {
    double t = rec->next_time();
    advance(hs, rules, ctx, t - hs.time, dt_max);
    hs.time = std::max(hs.time, t);
    rec->record(hs.state);
  }
  advance(hs, rules, ctx, limit - hs.time, dt_max);
  hs.time = limit;
  if (next > t_end) return out;
  if (step) {
    const Event& e = ctx.events[step->chosen];
    apply_in_place(hs.state, rules[e.rule], e.match);
    if (!rules[e.rule].biochemical()) hs.prune();
    out.applied = true;
  }
  return out;
}

/// The hybrid simulation from the model's initial term. Observables are read
/// from the integer (rounded) view.
inline RunResult run_hybrid(const ModelFile& model, const RunOptions& opt, Rng& rng) {
  const auto& prm = model.params;
  Observer observer(opt.observables);
  Recorder rec(observer, report_times(opt.t_end, opt.report_interval));
  HybridState hs;
  hs.state = model.initial;
  HybridContext ctx;
  RunResult result;
  result.firings.assign(model.rules.size(), 0);
  while (!rec.done()) {
    auto r = hybrid_step(hs, model.rules, prm.phi, prm.psi, prm.dt_max, rng, ctx, opt.t_end, &rec);
    if (r.kind == HybridStepResult::Kind::deadlock) break;
    if (r.kind == HybridStepResult::Kind::stochastic && !r.applied) break;
    if (r.applied) ++result.firings[r.rule];
    ++result.steps;
    if (opt.step_log)
      opt.step_log({result.steps, hs.time, r.tau,
                    r.applied ? model.rules[r.rule].name + "@" + model.rules[r.rule].label : std::string("-"),
                    ctx.partition.deterministic_count(), ctx.partition.stochastic_count()});
  }
  rec.finish(hs.state);
  result.trajectory = rec.take();
  result.trajectory.rng = std::string(Rng::kAlgorithm);
  result.trajectory.seed = rng.seed();
  return result;
}

} // namespace cwc

#endif // CWC_HYBRID_HPP
