#ifndef CWC_ENSEMBLE_HPP
#define CWC_ENSEMBLE_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "hybrid.hpp"
#include "model.hpp"
#include "ode.hpp"
#include "rng.hpp"
#include "stochastic.hpp"

namespace cwc {

/// Runs one trajectory in the model's mode.
inline RunResult run_model(const ModelFile& model, const RunOptions& opt, std::uint64_t seed) {
  Rng rng(seed);
  switch (model.params.mode) {
    case Mode::stochastic: return run_stochastic(model, opt, rng);
    case Mode::deterministic: return run_deterministic(model, opt);
    case Mode::hybrid: return run_hybrid(model, opt, rng);
  }
  throw Error("unknown mode");
}

struct Replica {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  RunResult result;
  double seconds = 0.0;  // wall clock
};

/// `replicas` independent runs with seeds replica_seed(master, i), on up to
/// `jobs` threads. Results are ordered by index whatever the schedule.
/// `customize(i, options)` may adjust the options of replica i.
inline std::vector<Replica> run_ensemble(
    const ModelFile& model, const RunOptions& opt, std::size_t replicas, std::uint64_t master,
    std::size_t jobs = 1, const std::function<void(std::size_t, RunOptions&)>& customize = {}) {
  if (replicas == 0) throw Error("replicas must be at least 1");
  std::vector<Replica> out(replicas);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next++) < replicas;) {
      try {
        Replica& r = out[i];
        r.index = i;
        r.seed = replica_seed(master, i);
        auto start = std::chrono::steady_clock::now();
        RunOptions mine = opt;
        if (customize) customize(i, mine);
        r.result = run_model(model, mine, r.seed);
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = replicas;
      }
    }
  };
  jobs = std::clamp<std::size_t>(jobs, 1, replicas);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

inline double mean_seconds(const std::vector<Replica>& rs) {
  double s = 0;
  for (const auto& r : rs) s += r.seconds;
  return rs.empty() ? 0.0 : s / static_cast<double>(rs.size());
}

struct Bench {
  std::vector<Replica> stochastic;
  std::vector<Replica> hybrid;
  double stochastic_mean = 0.0;
  double hybrid_mean = 0.0;
  double speedup = 0.0;  // stochastic / hybrid mean wall clock
};

/// Matched stochastic and hybrid ensembles on the same seeds.
inline Bench bench(ModelFile model, const RunOptions& opt, std::size_t replicas, std::uint64_t master,
                   std::size_t jobs = 1) {
  Bench b;
  model.params.mode = Mode::stochastic;
  b.stochastic = run_ensemble(model, opt, replicas, master, jobs);
  model.params.mode = Mode::hybrid;
  b.hybrid = run_ensemble(model, opt, replicas, master, jobs);
  b.stochastic_mean = mean_seconds(b.stochastic);
  b.hybrid_mean = mean_seconds(b.hybrid);
  b.speedup = b.hybrid_mean > 0 ? b.stochastic_mean / b.hybrid_mean : 0.0;
  return b;
}

} // namespace cwc

#endif // CWC_ENSEMBLE_HPP
