#pragma once

// Run configuration for the command-line driver. Every field has a default;
// the defaults depend on the training mode:
//
//   field                       rl / backprop         circuit
//   num_qubits                  2                     2
//   schedule                    "fourier"             "piecewise"
//   T_ns                        1000                  8
//   steps                       200                   200
//   n_max / segments            3                     4
//   tied                        true                  false
//   K_init_rad_per_ns           2.5e-3                2.0e-3
//   eps_init_rad_per_ns         1.0e-4                1.0e-4
//   zeta_init_rad_per_ns        1.0e-4                1.0e-4
//   eta_K / eta_eps / eta_zeta  2e-7 / 0 / 4e-7       1e-2 / 1e-3 / 1e-3
//   perturb_rel                 2e-4                  2e-4 exact, 1e-2 with shots
//   perturb_floor_rad_per_ns    perturb_rel x init value of each kind
//   epochs                      2000 (backprop 100)   2000
//
// Other keys: seed, output_map ("square" | "identity"), observable_pair
// ([a, b]), nominal_policy ("per_pair" | "per_coefficient"), update_policy
// ("per_pair" | "per_epoch"), trace_interval (epochs between trace dumps),
// divergence_factor, wall_clock (false zeroes the wall_seconds column),
// initial_schedule (schedule file path), training_set (training-set file
// path) and backend {"shots": "exact" | n, "p_dep", "p_ro", "seed"}.
// Unknown keys are rejected. Relative paths resolve against the config file.

#include "qdl/backprop.hpp"
#include "qdl/circuit.hpp"
#include "qdl/io.hpp"
#include "qdl/rl.hpp"
#include "qdl/schedules.hpp"
#include "qdl/witness.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace qdl {

enum class TrainMode { rl, backprop, circuit };

inline const char* train_mode_name(TrainMode m) {
  switch (m) {
    case TrainMode::rl: return "rl";
    case TrainMode::backprop: return "backprop";
    case TrainMode::circuit: return "circuit";
  }
  return "?";
}

inline TrainMode parse_train_mode(const std::string& s) {
  if (s == "rl") return TrainMode::rl;
  if (s == "backprop") return TrainMode::backprop;
  if (s == "circuit") return TrainMode::circuit;
  throw FormatError("unknown mode '" + s + "' (expected rl, backprop or circuit)");
}

struct RunConfig {
  TrainMode mode = TrainMode::rl;
  int num_qubits = 2;
  ScheduleMode schedule_mode = ScheduleMode::fourier;
  double final_time = 1000.0;
  int steps = 200;
  int n_max = 3;
  int segments = 4;
  Tying tying = Tying::all();
  PerKind<double> init{2.5e-3, 1e-4, 1e-4};
  PerKind<double> rates{2e-7, 0.0, 4e-7};
  double perturb_rel = 2e-4;
  PerKind<double> perturb_floor{};
  int epochs = 2000;
  std::uint64_t seed = 1;
  OutputMap map = OutputMap::square;
  std::pair<int, int> observable_pair{0, 1};
  NominalPolicy nominal = NominalPolicy::per_pair;
  UpdatePolicy update = UpdatePolicy::per_pair;
  int trace_interval = 100;
  double divergence_factor = 10.0;
  bool wall_clock = true;
  std::string initial_schedule;  // empty: built from the fields above
  std::string training_set;      // empty: the built-in four-state set
  ShotBackend backend;

  static RunConfig defaults(TrainMode mode) {
    RunConfig c;
    c.mode = mode;
    if (mode == TrainMode::backprop) c.epochs = 100;
    if (mode == TrainMode::circuit) {
      c.schedule_mode = ScheduleMode::piecewise;
      c.final_time = 8.0;
      c.tying = Tying::none();
      c.init = {2e-3, 1e-4, 1e-4};
      c.rates = {1e-2, 1e-3, 1e-3};
    }
    c.perturb_floor = RLConfig::floors_for(c.init, c.perturb_rel);
    return c;
  }

  TimeGrid grid() const { return {final_time, steps}; }

  WitnessTask task() const {
    return {zz_observable(observable_pair.first, observable_pair.second, num_qubits), map, grid()};
  }

  Schedule initial() const {
    return schedule_mode == ScheduleMode::fourier
               ? Schedule::fourier(num_qubits, final_time, n_max, tying, init)
               : Schedule::piecewise(num_qubits, final_time, segments, tying, init);
  }

  RLConfig rl_config() const {
    RLConfig r;
    r.perturb_rel = perturb_rel;
    r.perturb_floor = perturb_floor;
    r.learning_rates = rates;
    r.epochs = epochs;
    r.seed = seed;
    r.nominal = nominal;
    r.divergence_factor = divergence_factor;
    r.wall_clock = wall_clock;
    return r;
  }

  BackpropConfig backprop_config() const {
    BackpropConfig b;
    b.learning_rates = rates;
    b.epochs = epochs;
    b.update = update;
    b.divergence_factor = divergence_factor;
    b.wall_clock = wall_clock;
    return b;
  }

  void validate() const {
    if (num_qubits < 2 || num_qubits > kMaxQubits)
      throw FormatError("num_qubits must lie in 2..6");
    if (!(final_time > 0.0)) throw FormatError("T_ns must be > 0");
    if (steps < 1) throw FormatError("steps must be >= 1");
    if (n_max < 0) throw FormatError("n_max must be >= 0");
    if (segments < 1) throw FormatError("segments must be >= 1");
    if (trace_interval < 1) throw FormatError("trace_interval must be >= 1");
    const auto [a, b] = observable_pair;
    if (a < 0 || b < 0 || a >= num_qubits || b >= num_qubits || a == b)
      throw FormatError("observable_pair must name two distinct qubits");
    if (mode == TrainMode::circuit && schedule_mode != ScheduleMode::piecewise)
      throw FormatError("circuit mode needs a piecewise schedule");
    try {
      rl_config().validate();
      backprop_config().validate();
      backend.validate();
    } catch (const std::invalid_argument& e) {
      throw FormatError(e.what());
    }
  }
};

namespace detail {

inline void reject_unknown(const json& j, const std::set<std::string>& known, const char* where) {
  for (const auto& [key, value] : j.items())
    if (!known.count(key))
      throw FormatError(std::string("unknown key '") + key + "' in " + where);
}

inline std::string resolve_path(const std::string& path, const std::string& base_dir) {
  if (path.empty() || base_dir.empty()) return path;
  const std::filesystem::path p(path);
  return p.is_absolute() ? path : (std::filesystem::path(base_dir) / p).string();
}

}  // namespace detail

// Builds a configuration from JSON. `mode_override` (e.g. from the command
// line) takes precedence over the file's "mode" and selects the defaults.
inline RunConfig parse_run_config(const json& j, const std::optional<std::string>& mode_override = {},
                                  const std::string& base_dir = {}) {
  if (!j.is_object()) throw FormatError("config must be a JSON object");
  detail::reject_unknown(
      j,
      {"mode", "num_qubits", "schedule", "T_ns", "steps", "n_max", "segments", "tied",
       "K_init_rad_per_ns", "eps_init_rad_per_ns", "zeta_init_rad_per_ns", "eta_K", "eta_eps",
       "eta_zeta", "perturb_rel", "perturb_floor_rad_per_ns", "epochs", "seed", "output_map",
       "observable_pair", "nominal_policy", "update_policy", "trace_interval",
       "divergence_factor", "wall_clock", "initial_schedule", "training_set", "backend"},
      "config");
  try {
    const std::string mode_text =
        mode_override ? *mode_override : j.value("mode", std::string("rl"));
    RunConfig c = RunConfig::defaults(parse_train_mode(mode_text));

    c.num_qubits = j.value("num_qubits", c.num_qubits);
    if (j.contains("schedule")) {
      const std::string s = j.at("schedule");
      if (s == "fourier") c.schedule_mode = ScheduleMode::fourier;
      else if (s == "piecewise") c.schedule_mode = ScheduleMode::piecewise;
      else throw FormatError("schedule must be 'fourier' or 'piecewise'");
    }
    c.final_time = j.value("T_ns", c.final_time);
    c.steps = j.value("steps", c.steps);
    c.n_max = j.value("n_max", c.n_max);
    c.segments = j.value("segments", c.segments);
    if (j.contains("tied")) {
      const auto& t = j.at("tied");
      if (t.is_boolean()) {
        c.tying = t.get<bool>() ? Tying::all() : Tying::none();
      } else {
        detail::reject_unknown(t, {"tunneling", "bias", "coupling"}, "tied");
        c.tying = {t.value("tunneling", c.tying.tunneling), t.value("bias", c.tying.bias),
                   t.value("coupling", c.tying.coupling)};
      }
    }
    c.init[ParamKind::tunneling] = j.value("K_init_rad_per_ns", c.init[ParamKind::tunneling]);
    c.init[ParamKind::bias] = j.value("eps_init_rad_per_ns", c.init[ParamKind::bias]);
    c.init[ParamKind::coupling] = j.value("zeta_init_rad_per_ns", c.init[ParamKind::coupling]);
    c.rates[ParamKind::tunneling] = j.value("eta_K", c.rates[ParamKind::tunneling]);
    c.rates[ParamKind::bias] = j.value("eta_eps", c.rates[ParamKind::bias]);
    c.rates[ParamKind::coupling] = j.value("eta_zeta", c.rates[ParamKind::coupling]);

    if (j.contains("backend")) {
      const auto& b = j.at("backend");
      detail::reject_unknown(b, {"shots", "p_dep", "p_ro", "seed"}, "backend");
      if (b.contains("shots")) {
        const auto& s = b.at("shots");
        if (s.is_string()) {
          if (s.get<std::string>() != "exact") throw FormatError("shots must be \"exact\" or a count");
          c.backend.shots.reset();
        } else {
          c.backend.shots = s.get<long>();
        }
      }
      c.backend.p_dep = b.value("p_dep", c.backend.p_dep);
      c.backend.p_ro = b.value("p_ro", c.backend.p_ro);
      c.backend.seed = b.value("seed", c.backend.seed);
    }

    // Sampled estimates need a nudge well above the shot noise.
    if (c.mode == TrainMode::circuit && !c.backend.exact()) c.perturb_rel = 1e-2;
    c.perturb_rel = j.value("perturb_rel", c.perturb_rel);
    c.perturb_floor = RLConfig::floors_for(c.init, c.perturb_rel);
    if (j.contains("perturb_floor_rad_per_ns")) {
      const auto& f = j.at("perturb_floor_rad_per_ns");
      if (f.is_number()) {
        for (ParamKind k : kAllKinds) c.perturb_floor[k] = f.get<double>();
      } else {
        detail::reject_unknown(f, {"K", "eps", "zeta"}, "perturb_floor_rad_per_ns");
        c.perturb_floor[ParamKind::tunneling] = f.value("K", c.perturb_floor[ParamKind::tunneling]);
        c.perturb_floor[ParamKind::bias] = f.value("eps", c.perturb_floor[ParamKind::bias]);
        c.perturb_floor[ParamKind::coupling] = f.value("zeta", c.perturb_floor[ParamKind::coupling]);
      }
    }

    c.epochs = j.value("epochs", c.epochs);
    c.seed = j.value("seed", c.seed);
    if (!j.contains("backend") || !j.at("backend").contains("seed")) c.backend.seed = c.seed;
    if (j.contains("output_map")) c.map = parse_output_map(j.at("output_map"));
    if (j.contains("observable_pair")) {
      const auto p = j.at("observable_pair").get<std::vector<int>>();
      if (p.size() != 2) throw FormatError("observable_pair must have two entries");
      c.observable_pair = {p[0], p[1]};
    }
    if (j.contains("nominal_policy")) {
      const std::string s = j.at("nominal_policy");
      if (s == "per_pair") c.nominal = NominalPolicy::per_pair;
      else if (s == "per_coefficient") c.nominal = NominalPolicy::per_coefficient;
      else throw FormatError("nominal_policy must be 'per_pair' or 'per_coefficient'");
    }
    if (j.contains("update_policy")) {
      const std::string s = j.at("update_policy");
      if (s == "per_pair") c.update = UpdatePolicy::per_pair;
      else if (s == "per_epoch") c.update = UpdatePolicy::per_epoch;
      else throw FormatError("update_policy must be 'per_pair' or 'per_epoch'");
    }
    c.trace_interval = j.value("trace_interval", c.trace_interval);
    c.divergence_factor = j.value("divergence_factor", c.divergence_factor);
    c.wall_clock = j.value("wall_clock", c.wall_clock);
    c.initial_schedule = detail::resolve_path(j.value("initial_schedule", std::string()), base_dir);
    c.training_set = detail::resolve_path(j.value("training_set", std::string()), base_dir);
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("invalid config: ") + e.what());
  }
}

// The fully resolved configuration, in the same vocabulary as the input.
inline json to_json(const RunConfig& c) {
  json j;
  j["mode"] = train_mode_name(c.mode);
  j["num_qubits"] = c.num_qubits;
  j["schedule"] = mode_name(c.schedule_mode);
  j["T_ns"] = c.final_time;
  j["steps"] = c.steps;
  j["n_max"] = c.n_max;
  j["segments"] = c.segments;
  j["tied"] = {{"tunneling", c.tying.tunneling},
               {"bias", c.tying.bias},
               {"coupling", c.tying.coupling}};
  j["K_init_rad_per_ns"] = c.init[ParamKind::tunneling];
  j["eps_init_rad_per_ns"] = c.init[ParamKind::bias];
  j["zeta_init_rad_per_ns"] = c.init[ParamKind::coupling];
  j["eta_K"] = c.rates[ParamKind::tunneling];
  j["eta_eps"] = c.rates[ParamKind::bias];
  j["eta_zeta"] = c.rates[ParamKind::coupling];
  j["perturb_rel"] = c.perturb_rel;
  j["perturb_floor_rad_per_ns"] = {{"K", c.perturb_floor[ParamKind::tunneling]},
                                   {"eps", c.perturb_floor[ParamKind::bias]},
                                   {"zeta", c.perturb_floor[ParamKind::coupling]}};
  j["epochs"] = c.epochs;
  j["seed"] = c.seed;
  j["output_map"] = map_name(c.map);
  j["observable_pair"] = {c.observable_pair.first, c.observable_pair.second};
  j["nominal_policy"] = c.nominal == NominalPolicy::per_pair ? "per_pair" : "per_coefficient";
  j["update_policy"] = c.update == UpdatePolicy::per_pair ? "per_pair" : "per_epoch";
  j["trace_interval"] = c.trace_interval;
  j["divergence_factor"] = c.divergence_factor;
  j["wall_clock"] = c.wall_clock;
  j["initial_schedule"] = c.initial_schedule;
  j["training_set"] = c.training_set;
  json b;
  if (c.backend.shots) b["shots"] = *c.backend.shots;
  else b["shots"] = "exact";
  b["p_dep"] = c.backend.p_dep;
  b["p_ro"] = c.backend.p_ro;
  b["seed"] = c.backend.seed;
  j["backend"] = std::move(b);
  return j;
}

}  // namespace qdl
