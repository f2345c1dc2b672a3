#ifndef CWC_STOCHASTIC_HPP
#define CWC_STOCHASTIC_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "model.hpp"
#include "pattern.hpp"
#include "rng.hpp"
#include "term.hpp"
#include "trajectory.hpp"

namespace cwc {

/// One candidate transition: a rule applied at one site producing one
/// resulting term, with propensity k·Occ.
struct Event {
  std::size_t rule = 0;
  Match match;
  double propensity = 0.0;
};

/// Line of the optional per-step log.
struct StepRecord {
  std::uint64_t iteration = 0;
  double time = 0.0;  // δ after the step
  double tau = 0.0;
  std::string rule;   // "-" when only the ODE part ran
  std::size_t deterministic = 0;
  std::size_t stochastic = 0;
};

struct RunOptions {
  double t_end = 1.0;
  double report_interval = 0.01;
  std::vector<Observable> observables;
  std::function<void(const StepRecord&)> step_log;
};

struct RunResult {
  Trajectory trajectory;
  std::vector<std::uint64_t> firings;  // stochastic applications per rule
  std::uint64_t steps = 0;
};

inline RunOptions default_options(const ModelFile& m) {
  RunOptions o;
  o.t_end = m.params.t_end;
  o.report_interval = m.params.t_end / 100;
  o.observables = m.observables.empty() ? default_observables(m) : m.observables;
  return o;
}

/// Events of every rule r and site ι with allow(r, ι) true, rule-major in
/// preorder of sites. Zero-propensity entries are omitted.
template <typename Allow>
void build_propensities(const State& s, const std::vector<Rule>& rules, Allow&& allow, std::vector<Event>& events) {
  events.clear();
  for (std::size_t r = 0; r < rules.size(); ++r) {
    if (rules[r].k <= 0) continue;
    auto site_ok = [&](CompartmentId id) { return allow(r, id); };
    for_each_match(s, rules[r], r, site_ok, [&](Match&& m) {
      double a = rules[r].k * static_cast<double>(m.multiplicity);
      if (a > 0) events.push_back({r, std::move(m), a});
    });
  }
}

template <typename Allow>
std::vector<Event> build_propensities(const State& s, const std::vector<Rule>& rules, Allow&& allow) {
  std::vector<Event> events;
  build_propensities(s, rules, allow, events);
  return events;
}

inline std::vector<Event> build_propensities(const State& s, const std::vector<Rule>& rules) {
  return build_propensities(s, rules, [](std::size_t, CompartmentId) { return true; });
}

inline double total_propensity(std::span<const Event> events) {
  double r = 0;
  for (const auto& e : events) r += e.propensity;
  return r;
}

struct GillespieStep {
  double tau;
  std::size_t chosen;
};

/// Direct method: τ ~ Exp(r), then event i with probability r_i / r.
/// Consumes exactly two draws.
inline GillespieStep gillespie_step(std::span<const Event> events, Rng& rng) {
  double r = total_propensity(events);
  if (events.empty() || !(r > 0)) throw NoEvent("no event with positive propensity");
  double tau = rng.exponential(r);
  double target = rng.uniform() * r;
  double acc = 0;
  std::size_t chosen = events.size() - 1;
  for (std::size_t i = 0; i < events.size(); ++i) {
    acc += events[i].propensity;
    if (target < acc) {
      chosen = i;
      break;
    }
  }
  return {tau, chosen};
}

/// Exact SSA over all rules from the model's initial term.
inline RunResult run_stochastic(const ModelFile& model, const RunOptions& opt, Rng& rng) {
  Observer observer(opt.observables);
  Recorder rec(observer, report_times(opt.t_end, opt.report_interval));
  State state = model.initial;
  RunResult result;
  result.firings.assign(model.rules.size(), 0);
  double t = 0;
  std::vector<Event> events;
  auto all = [](std::size_t, CompartmentId) { return true; };
  while (!rec.done()) {
    build_propensities(state, model.rules, all, events);
    if (events.empty()) break;
    auto step = gillespie_step(events, rng);
    double next = t + step.tau;
    rec.until(next, state);
    if (next > opt.t_end) break;
    const Event& e = events[step.chosen];
    apply_in_place(state, model.rules[e.rule], e.match);
    t = next;
    ++result.firings[e.rule];
    ++result.steps;
    if (opt.step_log)
      opt.step_log({result.steps, t, step.tau, model.rules[e.rule].name + "@" + model.rules[e.rule].label, 0,
                    model.rules.size()});
  }
  rec.finish(state);
  result.trajectory = rec.take();
  result.trajectory.rng = std::string(Rng::kAlgorithm);
  result.trajectory.seed = rng.seed();
  return result;
}

} // namespace cwc

#endif // CWC_STOCHASTIC_HPP
