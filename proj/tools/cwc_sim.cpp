// cwc-sim: command-line front end for the CWC simulator.

#include <openssl/evp.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cwc/cwc.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct Config {
  std::string model_path;
  std::string mode;
  std::optional<double> t_end;
  std::string phi;
  std::optional<double> psi;
  std::optional<double> dt_max;
  std::optional<std::uint64_t> seed;
  std::size_t replicas = 1;
  std::size_t jobs = 1;
  std::optional<double> report_interval;
  std::string out = "out";
  bool step_log = false;
  bool aggregate = false;
  std::vector<std::string> observe;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw cwc::Error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return out.str();
}

json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

struct Loaded {
  cwc::ModelFile model;
  cwc::RunOptions options;
  std::string hash;
};

Loaded load(const Config& cfg) {
  Loaded l;
  std::string text = read_file(cfg.model_path);
  l.hash = sha256_hex(text);
  l.model = cwc::parse_model(text);
  for (const auto& w : l.model.warnings) std::cerr << cfg.model_path << ": warning: " << w << '\n';
  auto& p = l.model.params;
  if (!cfg.mode.empty()) {
    auto m = cwc::parse_mode(cfg.mode);
    if (!m) throw cwc::Error("--mode must be stochastic, deterministic or hybrid");
    p.mode = *m;
  }
  if (cfg.t_end) p.t_end = *cfg.t_end;
  if (!cfg.phi.empty()) {
    char* end = nullptr;
    p.phi = std::strtod(cfg.phi.c_str(), &end);
    if (end == cfg.phi.c_str() || *end != '\0') throw cwc::Error("--phi must be a number or inf");
  }
  if (cfg.psi) p.psi = *cfg.psi;
  if (cfg.dt_max) p.dt_max = *cfg.dt_max;
  if (cfg.seed) p.seed = *cfg.seed;
  if (!(p.t_end > 0) || !std::isfinite(p.t_end)) throw cwc::Error("t_end must be positive and finite");
  if (!(p.dt_max > 0)) throw cwc::Error("dt_max must be positive");
  if (!(p.phi >= 0) || !(p.psi >= 0)) throw cwc::Error("phi and psi must be nonnegative");
  if (cfg.replicas < 1) throw cwc::Error("--replicas must be at least 1");

  l.options = cwc::default_options(l.model);
  if (cfg.report_interval) {
    if (!(*cfg.report_interval > 0)) throw cwc::Error("--report-interval must be positive");
    l.options.report_interval = *cfg.report_interval;
  }
  if (!cfg.observe.empty()) {
    std::set<std::string> declared(l.model.labels.begin(), l.model.labels.end());
    l.options.observables.clear();
    for (const auto& o : cfg.observe) l.options.observables.push_back(cwc::detail::parse_observable(o, 1, 1, &declared));
  }
  return l;
}

json base_manifest(const Config& cfg, const Loaded& l, const std::string& command) {
  const auto& p = l.model.params;
  json j;
  j["command"] = command;
  j["model"] = cfg.model_path;
  j["model_sha256"] = l.hash;
  j["mode"] = std::string(cwc::to_string(p.mode));
  j["seed"] = p.seed;
  j["replicas"] = cfg.replicas;
  j["t_end"] = p.t_end;
  j["phi"] = number(p.phi);
  j["psi"] = p.psi;
  j["dt_max"] = p.dt_max;
  j["report_interval"] = l.options.report_interval;
  json obs = json::array();
  for (const auto& o : l.options.observables) obs.push_back(o.name());
  j["observables"] = obs;
  j["rng"] = std::string(cwc::Rng::kAlgorithm);
  j["replica_seed"] = "splitmix64(seed ^ splitmix64(index))";
  return j;
}

json replica_entries(const std::vector<cwc::Replica>& rs, const std::string& prefix) {
  json runs = json::array();
  for (const auto& r : rs) {
    json e;
    e["index"] = r.index;
    e["seed"] = r.seed;
    if (!prefix.empty()) e["file"] = prefix + std::to_string(r.index) + ".csv";
    e["wall_seconds"] = r.seconds;
    e["steps"] = r.result.steps;
    runs.push_back(e);
  }
  return runs;
}

/// Mean, minimum and maximum of every column across replicas, one line per
/// reporting time, whitespace separated for gnuplot.
void write_aggregate(std::ostream& out, const std::vector<cwc::Replica>& rs) {
  const auto& first = rs.front().result.trajectory;
  out << "# time";
  for (const auto& c : first.columns) out << ' ' << c << ":mean " << c << ":min " << c << ":max";
  out << '\n';
  for (std::size_t i = 0; i < first.times.size(); ++i) {
    out << cwc::detail::format_number(first.times[i]);
    for (std::size_t j = 0; j < first.columns.size(); ++j) {
      double sum = 0, lo = INFINITY, hi = -INFINITY;
      for (const auto& r : rs) {
        double v = r.result.trajectory.rows[i][j];
        sum += v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      out << ' ' << cwc::detail::format_number(sum / static_cast<double>(rs.size())) << ' '
          << cwc::detail::format_number(lo) << ' ' << cwc::detail::format_number(hi);
    }
    out << '\n';
  }
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  if (!out) throw cwc::Error("cannot write " + path.string());
}

int cmd_run(const Config& cfg) {
  Loaded l = load(cfg);
  fs::path dir(cfg.out);
  fs::create_directories(dir);

  std::vector<std::unique_ptr<std::ofstream>> logs(cfg.replicas);
  std::function<void(std::size_t, cwc::RunOptions&)> customize;
  if (cfg.step_log) {
    customize = [&](std::size_t i, cwc::RunOptions& o) {
      logs[i] = std::make_unique<std::ofstream>(dir / ("steps-" + std::to_string(i) + ".csv"));
      auto* out = logs[i].get();
      *out << "iteration,time,tau,rule,deterministic,stochastic\n";
      o.step_log = [out](const cwc::StepRecord& s) {
        *out << s.iteration << ',' << cwc::detail::format_number(s.time) << ','
             << cwc::detail::format_number(s.tau) << ',' << s.rule << ',' << s.deterministic << ','
             << s.stochastic << '\n';
      };
    };
  }
  auto runs = cwc::run_ensemble(l.model, l.options, cfg.replicas, l.model.params.seed, cfg.jobs, customize);
  logs.clear();

  for (const auto& r : runs) {
    std::ofstream out(dir / ("run-" + std::to_string(r.index) + ".csv"));
    cwc::write_csv(out, r.result.trajectory);
    if (!out) throw cwc::Error("cannot write run-" + std::to_string(r.index) + ".csv");
  }
  if (cfg.aggregate) {
    std::ofstream out(dir / "aggregate.dat");
    write_aggregate(out, runs);
  }
  json manifest = base_manifest(cfg, l, "run");
  manifest["runs"] = replica_entries(runs, "run-");
  write_json(dir / "manifest.json", manifest);
  std::cout << "wrote " << runs.size() << " trajectories to " << dir.string() << '\n';
  return 0;
}

int cmd_bench(const Config& cfg) {
  Loaded l = load(cfg);
  fs::path dir(cfg.out);
  fs::create_directories(dir);
  auto b = cwc::bench(l.model, l.options, cfg.replicas, l.model.params.seed, cfg.jobs);
  json manifest = base_manifest(cfg, l, "bench");
  manifest.erase("mode");
  manifest["stochastic"] = {{"mean_wall_seconds", b.stochastic_mean}, {"runs", replica_entries(b.stochastic, "")}};
  manifest["hybrid"] = {{"mean_wall_seconds", b.hybrid_mean}, {"runs", replica_entries(b.hybrid, "")}};
  manifest["speedup"] = b.speedup;
  write_json(dir / "manifest.json", manifest);
  std::cout << std::setprecision(4) << "stochastic mean " << b.stochastic_mean << " s\n"
            << "hybrid mean     " << b.hybrid_mean << " s\n"
            << "speedup         " << b.speedup << "x\n";
  return 0;
}

int cmd_validate(const std::string& path) {
  auto model = cwc::parse_model(read_file(path));
  for (const auto& w : model.warnings) std::cerr << path << ": warning: " << w << '\n';
  auto part = cwc::classify_rules(model.rules);
  std::cout << "non-biochemical rules: " << part.non_biochemical.size() << '\n';
  for (auto i : part.non_biochemical) std::cout << "  " << cwc::print_rule(model.rules[i]) << '\n';
  std::cout << "biochemical rules: " << part.biochemical.size() << '\n';
  for (auto i : part.biochemical) std::cout << "  " << cwc::print_rule(model.rules[i]) << '\n';
  std::cout << "species by label:\n";
  for (const auto& [label, species] : cwc::species_by_label(model)) {
    std::cout << "  " << label << ':';
    for (const auto& s : species) std::cout << ' ' << s;
    std::cout << '\n';
  }
  std::cout << "initial term: " << cwc::print_term(model.initial.top) << '\n';
  return 0;
}

void add_common(CLI::App* cmd, Config& cfg) {
  cmd->add_option("--model", cfg.model_path, "model file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--t-end", cfg.t_end, "simulated time");
  cmd->add_option("--phi", cfg.phi, "rate threshold (number or inf)");
  cmd->add_option("--psi", cfg.psi, "amount threshold");
  cmd->add_option("--dt-max", cfg.dt_max, "largest ODE substep");
  cmd->add_option("--seed", cfg.seed, "master seed");
  cmd->add_option("--replicas", cfg.replicas, "number of runs");
  cmd->add_option("--jobs", cfg.jobs, "concurrent runs (default $CWC_SIM_JOBS or 1)");
  cmd->add_option("--report-interval", cfg.report_interval, "time between CSV rows (default t_end/100)");
  cmd->add_option("--out", cfg.out, "output directory");
  cmd->add_option("--observe", cfg.observe, "observables such as GFP@top or A@IN[0]");
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulator for the Calculus of Wrapped Compartments"};
  app.require_subcommand(1);
  Config cfg;
  if (const char* env = std::getenv("CWC_SIM_JOBS")) {
    char* end = nullptr;
    unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) cfg.jobs = v;
  }

  auto* run = app.add_subcommand("run", "simulate one or more trajectories");
  add_common(run, cfg);
  run->add_option("--mode", cfg.mode, "stochastic | deterministic | hybrid");
  run->add_flag("--step-log", cfg.step_log, "write steps-<i>.csv per replica");
  run->add_flag("--aggregate", cfg.aggregate, "write aggregate.dat (mean, min, max per column)");

  auto* bench = app.add_subcommand("bench", "time stochastic against hybrid on the same seeds");
  add_common(bench, cfg);

  auto* validate = app.add_subcommand("validate", "check a model file and list its rules");
  std::string validate_path;
  validate->add_option("model", validate_path, "model file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(cfg);
    if (*bench) return cmd_bench(cfg);
    if (*validate) return cmd_validate(validate_path);
  } catch (const cwc::ParseError& e) {
    std::cerr << (*validate ? validate_path : cfg.model_path) << ':' << e.what() << '\n';
    return 1;
  } catch (const cwc::NonFiniteState& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
