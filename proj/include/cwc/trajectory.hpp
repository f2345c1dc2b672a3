#ifndef CWC_TRAJECTORY_HPP
#define CWC_TRAJECTORY_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "model.hpp"
#include "term.hpp"

namespace cwc {

/// Observable time series sampled at fixed reporting times.
struct Trajectory {
  std::vector<std::string> columns;
  std::vector<double> times;
  std::vector<std::vector<double>> rows;  // rows[i][j] = columns[j] at times[i]
  std::string rng;                        // generator id, or empty
  std::uint64_t seed = 0;

  /// Value of column `name` at the last row.
  double final_value(const std::string& name) const {
    auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end() || rows.empty()) throw Error("no column '" + name + "'");
    return rows.back()[static_cast<std::size_t>(it - columns.begin())];
  }

  std::vector<double> column(const std::string& name) const {
    auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw Error("no column '" + name + "'");
    std::size_t j = static_cast<std::size_t>(it - columns.begin());
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[j]);
    return out;
  }

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// 0, Δ, 2Δ, … up to t_end; t_end itself is always the last entry.
inline std::vector<double> report_times(double t_end, double interval) {
  if (!(interval > 0)) throw Error("report interval must be positive");
  std::vector<double> out;
  for (std::uint64_t i = 0;; ++i) {
    double t = static_cast<double>(i) * interval;
    if (t > t_end * (1 + 1e-12)) break;
    out.push_back(std::min(t, t_end));
  }
  if (out.back() < t_end) out.push_back(t_end);
  return out;
}

/// Evaluates observables on a state. `value(content, id, species)` supplies
/// the amount of a species in one compartment; the default is the integer
/// count held in the term.
class Observer {
public:
  explicit Observer(std::vector<Observable> observables) : observables_(std::move(observables)) {}

  std::vector<std::string> columns() const {
    std::vector<std::string> out;
    for (const auto& o : observables_) out.push_back(o.name());
    return out;
  }

  template <typename Value>
  std::vector<double> sample(const State& s, Value&& value) const {
    struct Site {
      CompartmentId id;
      std::string_view label;
      const Term* content;
    };
    std::vector<Site> sites;
    for_each_site(s, [&](const Term& t, CompartmentId id, std::string_view label,
                         std::optional<CompartmentId>) { sites.push_back({id, label, &t}); });
    std::sort(sites.begin(), sites.end(), [](const Site& a, const Site& b) { return a.id < b.id; });
    std::vector<double> row;
    row.reserve(observables_.size());
    for (const auto& o : observables_) {
      double v = 0;
      std::size_t seen = 0;
      for (const auto& site : sites) {
        if (site.label != o.label) continue;
        if (!o.ordinal || *o.ordinal == seen) v += value(*site.content, site.id, o.species);
        ++seen;
      }
      row.push_back(v);
    }
    return row;
  }

  std::vector<double> sample(const State& s) const {
    return sample(s, [](const Term& t, CompartmentId, const std::string& species) {
      return static_cast<double>(t.atoms.count(species));
    });
  }

private:
  std::vector<Observable> observables_;
};

/// Collects rows at the reporting times as a run advances.
class Recorder {
public:
  Recorder(const Observer& observer, std::vector<double> times)
      : observer_(observer), times_(std::move(times)) {
    traj_.columns = observer.columns();
  }

  bool done() const { return next_ >= times_.size(); }
  double next_time() const { return times_[next_]; }

  /// Records every pending reporting time ≤ t with the current state.
  template <typename... Value>
  void until(double t, const State& s, Value&&... value) {
    while (!done() && times_[next_] <= t) record(s, value...);
  }

  template <typename... Value>
  void record(const State& s, Value&&... value) {
    traj_.times.push_back(times_[next_++]);
    traj_.rows.push_back(observer_.sample(s, value...));
  }

  /// Fills the remaining reporting times with the current state.
  template <typename... Value>
  void finish(const State& s, Value&&... value) {
    while (!done()) record(s, value...);
  }

  Trajectory take() { return std::move(traj_); }

private:
  const Observer& observer_;
  std::vector<double> times_;
  std::size_t next_ = 0;
  Trajectory traj_;
};

inline void write_csv(std::ostream& out, const Trajectory& t) {
  if (!t.rng.empty()) out << "# rng=" << t.rng << " seed=" << t.seed << '\n';
  out << "time";
  for (const auto& c : t.columns) out << ',' << c;
  out << '\n';
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    out << detail::format_number(t.times[i]);
    for (double v : t.rows[i]) out << ',' << detail::format_number(v);
    out << '\n';
  }
}

} // namespace cwc

#endif // CWC_TRAJECTORY_HPP
