// qdl: train, stage, evaluate and export quantum-dynamics entanglement
// witnesses.
//
// Exit codes: 0 success, 1 runtime failure (including divergence),
// 2 usage or configuration error.

#include "qdl/qdl.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

// Usage problems detected by the driver itself.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_file(const std::string& path, const char* what) {
  if (!fs::is_regular_file(path)) throw UsageError(std::string(what) + " not found: " + path);
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  std::optional<std::string> mode;
};

int run_train(const TrainArgs& args) {
  require_file(args.config, "config");
  qdl::json raw = qdl::read_json_file(args.config);
  if (!raw.is_object()) throw qdl::FormatError("config must be a JSON object");
  if (args.seed) raw["seed"] = *args.seed;
  if (args.epochs) raw["epochs"] = *args.epochs;
  const auto base_dir = fs::path(args.config).parent_path().string();
  const qdl::RunConfig cfg = qdl::parse_run_config(raw, args.mode, base_dir);

  const auto pairs = cfg.training_set.empty()
                         ? qdl::build_training_set(cfg.num_qubits, cfg.map)
                         : qdl::training_set_from_json(qdl::read_json_file(cfg.training_set));
  for (const auto& p : pairs)
    if (p.input.num_qubits() != cfg.num_qubits)
      throw qdl::FormatError("training pair '" + p.label + "' has the wrong qubit count");

  qdl::Schedule schedule = cfg.initial();
  if (!cfg.initial_schedule.empty()) {
    require_file(cfg.initial_schedule, "initial schedule");
    schedule = qdl::load_schedule(cfg.initial_schedule);
    if (schedule.num_qubits() != cfg.num_qubits)
      throw qdl::FormatError("initial schedule qubit count differs from num_qubits");
    if (schedule.mode() != cfg.schedule_mode)
      throw qdl::FormatError("initial schedule type differs from the configured schedule");
  }
  const auto task = cfg.task();
  const auto trainable = qdl::list_trainable(schedule, cfg.rates);

  fs::create_directories(args.out);
  std::ostringstream traces;
  traces << qdl::trace_header(cfg.num_qubits);
  const auto on_epoch = [&](int epoch, const qdl::Schedule& s) {
    if (epoch % cfg.trace_interval == 0 || epoch == cfg.epochs)
      qdl::write_trace_rows(traces, epoch, s, task.grid);
  };

  qdl::TrainResult result{schedule, {}};
  try {
    switch (cfg.mode) {
      case qdl::TrainMode::rl:
        result = qdl::train_rl(pairs, schedule, task, cfg.rl_config(), on_epoch);
        break;
      case qdl::TrainMode::backprop:
        result = qdl::train_backprop(pairs, schedule, task, cfg.backprop_config(), on_epoch);
        break;
      case qdl::TrainMode::circuit:
        result = qdl::train_circuit_rl(
            pairs, schedule, cfg.rl_config(),
            qdl::circuit_evaluator(pairs, cfg.backend, cfg.map, cfg.observable_pair.first,
                                   cfg.observable_pair.second),
            on_epoch);
        break;
    }
  } catch (const qdl::DivergenceError&) {
    qdl::write_text_file((fs::path(args.out) / "traces.csv").string(), traces.str());
    throw;
  }

  const auto& log = result.log;
  std::ostringstream epochs_csv;
  qdl::write_epochs_csv(epochs_csv, log);
  qdl::save_schedule((fs::path(args.out) / "schedule.json").string(), result.schedule);
  qdl::write_text_file((fs::path(args.out) / "epochs.csv").string(), epochs_csv.str());
  qdl::write_text_file((fs::path(args.out) / "traces.csv").string(), traces.str());

  qdl::json manifest;
  manifest["format"] = "qdl-manifest/1";
  manifest["created_utc"] = utc_timestamp();
  manifest["seed"] = cfg.seed;
  manifest["config"] = qdl::to_json(cfg);
  qdl::json set = qdl::json::array();
  for (const auto& p : pairs) set.push_back({{"label", p.label}, {"target", p.target}});
  manifest["training_set"] = std::move(set);
  qdl::json names = qdl::json::array();
  for (const auto& c : trainable) names.push_back(qdl::describe(schedule, c));
  manifest["trainable_coefficients"] = std::move(names);
  manifest["epochs_run"] = log.epochs.size();
  manifest["initial_rms"] = log.initial_rms;
  manifest["final_rms"] = log.epochs.empty() ? log.initial_rms : log.epochs.back().rms;
  manifest["solves"] = {{"training", log.solves.training},
                        {"reporting", log.solves.reporting},
                        {"training_per_epoch", log.training_solves_per_epoch.empty()
                                                   ? 0L
                                                   : log.training_solves_per_epoch.front()}};
  qdl::write_text_file((fs::path(args.out) / "manifest.json").string(), manifest.dump(2) + "\n");

  std::printf("mode %s, %zu trainable coefficients, %zu epochs\n", qdl::train_mode_name(cfg.mode),
              trainable.size(), log.epochs.size());
  std::printf("rms %.6g -> %.6g\n", log.initial_rms,
              log.epochs.empty() ? log.initial_rms : log.epochs.back().rms);
  std::printf("wrote %s\n", args.out.c_str());
  return kOk;
}

// ---------------------------------------------------------------------------
// stage

int run_stage(const std::string& in, const std::string& out, std::optional<int> qubits) {
  require_file(in, "schedule");
  const auto source = qdl::load_schedule(in);
  const int target = qubits.value_or(source.num_qubits() + 1);
  if (target <= source.num_qubits())
    throw UsageError("target qubit count " + std::to_string(target) +
                     " must exceed the source's " + std::to_string(source.num_qubits()));
  if (target > qdl::kMaxQubits) throw UsageError("target qubit count exceeds 6");
  const auto staged = qdl::stage_to(source, target);
  qdl::save_schedule(out, staged);
  std::printf("staged %d -> %d qubits: %s\n", source.num_qubits(), target, out.c_str());
  return kOk;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string schedule;
  std::string states;
  bool sweep = false;
  int points = 21;
  std::string out;
  int steps = 200;
  std::string map = "square";
  std::vector<int> pair{0, 1};
};

int run_eval(const EvalArgs& args) {
  require_file(args.schedule, "schedule");
  const auto schedule = qdl::load_schedule(args.schedule);
  const int n = schedule.num_qubits();
  if (args.pair.size() != 2) throw UsageError("--pair needs two qubit indices");
  if (args.pair[0] == args.pair[1] || args.pair[0] < 0 || args.pair[1] < 0 ||
      args.pair[0] >= n || args.pair[1] >= n)
    throw UsageError("--pair must name two distinct qubits of the schedule");
  if (args.points < 2) throw UsageError("--points must be >= 2");
  const qdl::WitnessTask task{qdl::zz_observable(args.pair[0], args.pair[1], n),
                              qdl::parse_output_map(args.map),
                              {schedule.final_time(), args.steps}};

  std::vector<qdl::LabeledState> states;
  if (!args.states.empty()) {
    require_file(args.states, "states file");
    int file_qubits = 0;
    states = qdl::states_from_json(qdl::read_json_file(args.states), &file_qubits);
    if (file_qubits != n) throw qdl::FormatError("states file qubit count differs from schedule");
  }
  const bool sweep = args.sweep || args.states.empty();

  std::vector<qdl::DensityMatrix> inputs;
  for (const auto& s : states) inputs.push_back(qdl::DensityMatrix::pure(s.amplitudes));
  const auto report = qdl::evaluate_witness(schedule, inputs, task, sweep ? args.points : 0);

  std::ostringstream csv;
  csv << "label,oracle,output\n";
  for (std::size_t i = 0; i < states.size(); ++i)
    csv << qdl::csv_escape(states[i].label) << ','
        << qdl::format_double(qdl::entanglement_oracle(states[i].amplitudes)) << ','
        << qdl::format_double(report.outputs[i]) << '\n';
  if (sweep)
    for (std::size_t k = 0; k < report.sweep_theta.size(); ++k)
      csv << "theta=" << qdl::format_double(report.sweep_theta[k]) << ','
          << qdl::format_double(report.sweep_oracle[k]) << ','
          << qdl::format_double(report.sweep_outputs[k]) << '\n';

  if (args.out.empty())
    std::cout << csv.str();
  else
    qdl::write_text_file(args.out, csv.str());
  if (sweep) std::printf("spearman %.6f\n", report.spearman);
  return kOk;
}

// ---------------------------------------------------------------------------
// oracle

int run_oracle(const std::string& spec, int qubits, double a, std::optional<double> theta) {
  qdl::CVector psi;
  if (!spec.empty() && spec.front() == '[') {
    qdl::json amps;
    try {
      amps = qdl::json::parse(spec);
    } catch (const qdl::json::exception& e) {
      throw UsageError(std::string("amplitude list is not valid JSON: ") + e.what());
    }
    int n = 0;
    while ((std::size_t{1} << n) < amps.size()) ++n;
    if ((std::size_t{1} << n) != amps.size() || n < 2)
      throw UsageError("amplitude list length must be 2^N with N >= 2");
    psi = qdl::state_from_json({{"amplitudes", amps}}, n);
  } else {
    qdl::json params = {{"a", a}};
    if (theta) params["theta"] = *theta;
    const std::string name = spec == "product" ? "product_plus" : spec;
    psi = qdl::state_preset(name, qubits, params);
  }
  const double c = qdl::entanglement_oracle(psi);
  if (std::isnan(c)) {
    std::fprintf(stderr, "error: no oracle for this %d-qubit state (outside a|0..0> + b|1..1>)\n",
                 qdl::qubits_for_dim(psi.size()));
    return kFailure;
  }
  std::printf("%.17g\n", c);
  return kOk;
}

// ---------------------------------------------------------------------------
// export

int run_export(const std::string& schedule_path, const std::string& out, int steps) {
  require_file(schedule_path, "schedule");
  if (steps < 1) throw UsageError("--steps must be >= 1");
  const auto s = qdl::load_schedule(schedule_path);
  std::ostringstream csv;
  csv << qdl::trace_header(s.num_qubits());
  qdl::write_trace_rows(csv, 0, s, {s.final_time(), steps});
  qdl::write_text_file(out, csv.str());
  std::printf("wrote %s\n", out.c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Train and evaluate entanglement witnesses from quantum dynamics"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "qdl 0.1.0");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train a schedule from a JSON run config");
  train_cmd->add_option("--config", train.config, "Run config (JSON)")->required();
  train_cmd->add_option("--out", train.out, "Output directory")->required();
  train_cmd->add_option("--seed", train.seed, "Override the config seed");
  train_cmd->add_option("--epochs", train.epochs, "Override the epoch count")
      ->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--mode", train.mode, "Override the training mode")
      ->check(CLI::IsMember({"rl", "backprop", "circuit"}));

  std::string stage_in, stage_out;
  std::optional<int> stage_qubits;
  auto* stage_cmd = app.add_subcommand("stage", "Seed a larger system from a trained schedule");
  stage_cmd->add_option("--in", stage_in, "Trained schedule")->required();
  stage_cmd->add_option("--out", stage_out, "Staged schedule to write")->required();
  stage_cmd->add_option("--qubits", stage_qubits, "Target qubit count (default: source + 1)");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a trained witness");
  eval_cmd->add_option("--schedule", eval.schedule, "Trained schedule")->required();
  eval_cmd->add_option("--states", eval.states, "States file (JSON)");
  eval_cmd->add_flag("--sweep", eval.sweep, "Include the cos/sin theta sweep (default without --states)");
  eval_cmd->add_option("--points", eval.points, "Sweep points")->capture_default_str();
  eval_cmd->add_option("--out", eval.out, "Report CSV (default: stdout)");
  eval_cmd->add_option("--steps", eval.steps, "Time steps")->capture_default_str();
  eval_cmd->add_option("--map", eval.map, "Output map")
      ->check(CLI::IsMember({"square", "identity"}))
      ->capture_default_str();
  eval_cmd->add_option("--pair", eval.pair, "Measured qubit pair")->expected(2);

  std::string oracle_state;
  int oracle_qubits = 2;
  double oracle_a = 0.6;
  std::optional<double> oracle_theta;
  auto* oracle_cmd = app.add_subcommand("oracle", "Print the entanglement oracle of a state");
  oracle_cmd
      ->add_option("state", oracle_state,
                   "Preset (zeros, bell, ghz, product, partial, theta) or JSON amplitude list")
      ->required();
  oracle_cmd->add_option("--qubits", oracle_qubits, "Qubit count for presets")
      ->check(CLI::Range(2, qdl::kMaxQubits))
      ->capture_default_str();
  oracle_cmd->add_option("--a", oracle_a, "Amplitude for the partial preset")->capture_default_str();
  oracle_cmd->add_option("--theta", oracle_theta, "Angle for the theta preset (rad)");

  std::string export_schedule, export_out;
  int export_steps = 200;
  auto* export_cmd = app.add_subcommand("export", "Write the parameter trace of a schedule");
  export_cmd->add_option("--schedule", export_schedule, "Schedule file")->required();
  export_cmd->add_option("--out", export_out, "Trace CSV to write")->required();
  export_cmd->add_option("--steps", export_steps, "Time steps")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*train_cmd) return run_train(train);
    if (*stage_cmd) return run_stage(stage_in, stage_out, stage_qubits);
    if (*eval_cmd) return run_eval(eval);
    if (*oracle_cmd) return run_oracle(oracle_state, oracle_qubits, oracle_a, oracle_theta);
    if (*export_cmd) return run_export(export_schedule, export_out, export_steps);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const qdl::FormatError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const std::invalid_argument& e) {
    // Input that parsed but violates a precondition.
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const qdl::DivergenceError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  }
  return kUsage;
}
