#ifndef CWC_ODE_HPP
#define CWC_ODE_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "model.hpp"
#include "pattern.hpp"
#include "stochastic.hpp"
#include "term.hpp"
#include "trajectory.hpp"

namespace cwc {

/// Mass-action system of one compartment type:
///   d[s_j]/dt = Σ_i ν_ij · k_i · Π_{a ∈ reactants_i} [a]^{α⁻_ia}
class OdeSystem {
public:
  using Term = std::pair<std::size_t, int>;  // (species index, multiplicity)

  const std::vector<std::string>& species() const { return species_; }
  const std::vector<double>& rates() const { return rates_; }
  std::size_t rule_count() const { return rates_.size(); }
  std::size_t species_count() const { return species_.size(); }

  /// α⁻ of rule i as (species index, multiplicity) pairs.
  const std::vector<Term>& reactants(std::size_t i) const { return reactants_[i]; }

  /// ν_ij = α⁺_ij − α⁻_ij
  int stoich(std::size_t i, std::size_t j) const { return stoich_[i * species_.size() + j]; }

  std::size_t index_of(std::string_view s) const {
    auto it = std::lower_bound(species_.begin(), species_.end(), s);
    if (it == species_.end() || *it != s) return species_.size();
    return static_cast<std::size_t>(it - species_.begin());
  }

  /// k_i · Π [a]^α for rule i.
  double rate(std::size_t i, std::span<const double> c) const {
    double v = rates_[i];
    for (const auto& [j, m] : reactants_[i])
      for (int p = 0; p < m; ++p) v *= c[j];
    return v;
  }

  /// dc = f(c). Species with frozen[j] set keep a zero derivative but still
  /// enter the rates with their current value.
  void derivative(std::span<const double> c, std::span<double> dc,
                  std::span<const char> frozen = {}) const {
    std::fill(dc.begin(), dc.end(), 0.0);
    for (std::size_t i = 0; i < rates_.size(); ++i) {
      double v = rate(i, c);
      if (v == 0) continue;
      for (const auto& [j, nu] : changes_[i]) dc[j] += nu * v;
    }
    if (!frozen.empty())
      for (std::size_t j = 0; j < dc.size(); ++j)
        if (frozen[j]) dc[j] = 0;
  }

  friend OdeSystem build_ode(std::span<const Rule> rules, std::vector<std::string> species);

private:
  std::vector<std::string> species_;
  std::vector<double> rates_;
  std::vector<std::vector<Term>> reactants_;
  std::vector<std::vector<std::pair<std::size_t, double>>> changes_;  // nonzero ν per rule
  std::vector<int> stoich_;
};

/// Builds the system for biochemical rules of one label. With an empty
/// species list the species are those named by the rules, sorted; otherwise
/// every rule species must appear in `species`.
inline OdeSystem build_ode(std::span<const Rule> rules, std::vector<std::string> species = {}) {
  OdeSystem sys;
  for (const auto& r : rules) {
    if (!r.biochemical()) throw Error("rule " + r.name + " is not biochemical");
    if (r.label != rules.front().label) throw Error("rules of different labels in one ODE system");
  }
  if (species.empty()) {
    std::set<std::string> names;
    for (const auto& r : rules) {
      for (const auto& [n, c] : r.lhs.atoms) names.insert(n);
      for (const auto& [n, c] : r.rhs.atoms) names.insert(n);
    }
    species.assign(names.begin(), names.end());
  } else {
    std::sort(species.begin(), species.end());
    species.erase(std::unique(species.begin(), species.end()), species.end());
  }
  sys.species_ = std::move(species);
  std::size_t n = sys.species_.size();
  sys.stoich_.assign(rules.size() * n, 0);
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const Rule& r = rules[i];
    sys.rates_.push_back(r.k);
    std::vector<OdeSystem::Term> reac;
    for (const auto& [name, m] : r.lhs.atoms) {
      std::size_t j = sys.index_of(name);
      if (j == n) throw Error("unknown species '" + name + "' in rule " + r.name);
      reac.emplace_back(j, static_cast<int>(m));
      sys.stoich_[i * n + j] -= static_cast<int>(m);
    }
    for (const auto& [name, m] : r.rhs.atoms) {
      std::size_t j = sys.index_of(name);
      if (j == n) throw Error("unknown species '" + name + "' in rule " + r.name);
      sys.stoich_[i * n + j] += static_cast<int>(m);
    }
    std::vector<std::pair<std::size_t, double>> changes;
    for (std::size_t j = 0; j < n; ++j)
      if (sys.stoich_[i * n + j] != 0) changes.emplace_back(j, sys.stoich_[i * n + j]);
    sys.reactants_.push_back(std::move(reac));
    sys.changes_.push_back(std::move(changes));
  }
  return sys;
}

/// Substeps used to cover duration tau with steps no longer than dt_max.
inline std::size_t substeps(double tau, double dt_max) {
  double n = std::ceil(tau / dt_max * (1 - 1e-12));
  return std::max<std::size_t>(1, static_cast<std::size_t>(n));
}

/// Scratch vectors for integrate_in_place.
struct OdeWorkspace {
  std::vector<double> k1, k2, k3, k4, tmp;

  void resize(std::size_t n) {
    for (auto* v : {&k1, &k2, &k3, &k4, &tmp}) v->resize(n);
  }
};

/// Classical RK4 over [0, tau] with h = tau / ⌈tau / dt_max⌉. Components are
/// clamped at zero after every substep; frozen components do not move.
inline void integrate_in_place(const OdeSystem& sys, std::span<double> c, double tau, double dt_max,
                               std::span<const char> frozen, OdeWorkspace& ws) {
  if (tau < 0) throw Error("negative integration time");
  if (!(dt_max > 0)) throw Error("dt_max must be positive");
  if (c.size() != sys.species_count()) throw Error("concentration vector does not fit the system");
  if (tau == 0 || sys.rule_count() == 0) return;
  std::size_t steps = substeps(tau, dt_max);
  double h = tau / static_cast<double>(steps);
  std::size_t n = c.size();
  ws.resize(n);
  auto &k1 = ws.k1, &k2 = ws.k2, &k3 = ws.k3, &k4 = ws.k4, &tmp = ws.tmp;
  for (std::size_t s = 0; s < steps; ++s) {
    sys.derivative(c, k1, frozen);
    for (std::size_t j = 0; j < n; ++j) tmp[j] = c[j] + 0.5 * h * k1[j];
    sys.derivative(tmp, k2, frozen);
    for (std::size_t j = 0; j < n; ++j) tmp[j] = c[j] + 0.5 * h * k2[j];
    sys.derivative(tmp, k3, frozen);
    for (std::size_t j = 0; j < n; ++j) tmp[j] = c[j] + h * k3[j];
    sys.derivative(tmp, k4, frozen);
    for (std::size_t j = 0; j < n; ++j) {
      if (!frozen.empty() && frozen[j]) continue;
      c[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
      if (!std::isfinite(c[j]))
        throw NonFiniteState("species '" + sys.species()[j] + "' became non-finite; reduce dt_max");
      if (c[j] < 0) c[j] = 0;
    }
  }
}

inline std::vector<double> integrate(const OdeSystem& sys, std::vector<double> c, double tau, double dt_max,
                                     std::span<const char> frozen = {}) {
  OdeWorkspace ws;
  integrate_in_place(sys, c, tau, dt_max, frozen, ws);
  return c;
}

/// Integrates every compartment with the biochemical rules of its label.
/// The compartment structure is fixed, so the initial term's structure is
/// kept and only amounts change.
inline RunResult run_deterministic(const ModelFile& model, const RunOptions& opt) {
  for (const auto& r : model.rules)
    if (!r.biochemical())
      throw Error("deterministic mode needs biochemical rules only; rule " + r.name + " is not");

  struct Site {
    CompartmentId id;
    OdeSystem sys;
    std::vector<double> c;
  };
  std::vector<Site> sites;
  for_each_site(model.initial, [&](const Term& t, CompartmentId id, std::string_view label,
                                   std::optional<CompartmentId>) {
    std::vector<Rule> mine;
    std::vector<std::string> species;
    for (const auto& r : model.rules) {
      if (r.label != label) continue;
      mine.push_back(r);
      for (const auto& [n, c] : r.lhs.atoms) species.push_back(n);
      for (const auto& [n, c] : r.rhs.atoms) species.push_back(n);
    }
    for (const auto& [n, c] : t.atoms) species.push_back(n);
    Site site{id, build_ode(mine, species), {}};
    for (const auto& s : site.sys.species()) site.c.push_back(static_cast<double>(t.atoms.count(s)));
    sites.push_back(std::move(site));
  });

  auto value = [&](const Term&, CompartmentId id, const std::string& species) {
    for (const auto& s : sites) {
      if (s.id != id) continue;
      std::size_t j = s.sys.index_of(species);
      return j < s.c.size() ? s.c[j] : 0.0;
    }
    return 0.0;
  };

  Observer observer(opt.observables);
  auto times = report_times(opt.t_end, opt.report_interval);
  Recorder rec(observer, times);
  double t = 0;
  for (double next : times) {
    for (auto& s : sites) s.c = integrate(s.sys, std::move(s.c), next - t, model.params.dt_max);
    t = next;
    rec.record(model.initial, value);
  }
  RunResult result;
  result.trajectory = rec.take();
  result.firings.assign(model.rules.size(), 0);
  return result;
}

} // namespace cwc

#endif // CWC_ODE_HPP
