#pragma once

// File formats: schedule JSON, training-set / state-list JSON and the CSV
// outputs (epoch log, parameter traces, evaluation report).
//
// Schedule file (format "qdl-schedule/1"):
//   {
//     "format": "qdl-schedule/1",
//     "mode": "fourier" | "piecewise",
//     "num_qubits": 2,
//     "T_ns": 1000.0,
//     "n_max": 3,                       // fourier only
//     "segments": 4,                    // piecewise only
//     "tying": {"tunneling": true, "bias": true, "coupling": true},
//     "coefficients": {
//       "tunneling": [ {"P0": 2.5e-3, "S": [s1, s2, s3], "C": [c1, c2, c3]} ],
//       "bias":      [ ... one entry per channel ... ],
//       "coupling":  [ ... ]
//     }
//   }
// Piecewise channels are plain arrays of segment values. A tied kind has one
// channel; an untied kind has one per qubit (tunneling, bias) or per pair in
// lexicographic order (coupling). Values are rad/ns.

#include "qdl/circuit.hpp"
#include "qdl/schedules.hpp"
#include "qdl/training.hpp"
#include "qdl/witness.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qdl {

using json = nlohmann::json;

inline constexpr const char* kScheduleFormat = "qdl-schedule/1";

// Thrown for malformed input files (maps to a usage/config error).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Schedules

inline json schedule_to_json(const Schedule& s) {
  json j;
  j["format"] = kScheduleFormat;
  j["mode"] = mode_name(s.mode());
  j["num_qubits"] = s.num_qubits();
  j["T_ns"] = s.final_time();
  if (s.mode() == ScheduleMode::fourier)
    j["n_max"] = s.n_max();
  else
    j["segments"] = s.segments();
  j["tying"] = {{"tunneling", s.tying().tunneling},
                {"bias", s.tying().bias},
                {"coupling", s.tying().coupling}};
  json coeffs = json::object();
  for (ParamKind k : kAllKinds) {
    json arr = json::array();
    for (int ch = 0; ch < s.channel_count(k); ++ch) {
      const auto c = s.channel(k, ch);
      if (s.mode() == ScheduleMode::piecewise) {
        arr.push_back(std::vector<double>(c.begin(), c.end()));
      } else {
        const int n = s.n_max();
        arr.push_back({{"P0", c[0]},
                       {"S", std::vector<double>(c.begin() + 1, c.begin() + 1 + n)},
                       {"C", std::vector<double>(c.begin() + 1 + n, c.end())}});
      }
    }
    coeffs[kind_name(k)] = std::move(arr);
  }
  j["coefficients"] = std::move(coeffs);
  return j;
}

inline Schedule schedule_from_json(const json& j) {
  try {
    if (j.contains("format") && j.at("format") != kScheduleFormat)
      throw FormatError("unsupported schedule format");
    const std::string mode = j.at("mode");
    const int n = j.at("num_qubits");
    const double t = j.at("T_ns");
    Tying tying;
    if (j.contains("tying")) {
      const auto& ty = j.at("tying");
      tying = {ty.value("tunneling", false), ty.value("bias", false), ty.value("coupling", false)};
    }
    Schedule s = mode == "fourier"     ? Schedule::fourier(n, t, j.at("n_max"), tying, {})
                 : mode == "piecewise" ? Schedule::piecewise(n, t, j.at("segments"), tying, {})
                                       : throw FormatError("unknown schedule mode '" + mode + "'");
    const auto& coeffs = j.at("coefficients");
    for (ParamKind k : kAllKinds) {
      const auto& arr = coeffs.at(kind_name(k));
      if (static_cast<int>(arr.size()) != s.channel_count(k))
        throw FormatError(std::string("wrong channel count for ") + kind_name(k));
      for (int ch = 0; ch < s.channel_count(k); ++ch) {
        std::vector<double> values;
        if (s.mode() == ScheduleMode::piecewise) {
          values = arr[ch].get<std::vector<double>>();
        } else {
          const auto& e = arr[ch];
          const auto sines = e.at("S").get<std::vector<double>>();
          const auto cosines = e.at("C").get<std::vector<double>>();
          if (static_cast<int>(sines.size()) != s.n_max() ||
              static_cast<int>(cosines.size()) != s.n_max())
            throw FormatError("Fourier coefficient lists must have n_max entries");
          values.push_back(e.at("P0").get<double>());
          values.insert(values.end(), sines.begin(), sines.end());
          values.insert(values.end(), cosines.begin(), cosines.end());
        }
        if (static_cast<int>(values.size()) != s.basis_count())
          throw FormatError("wrong coefficient count in channel");
        for (double v : values)
          if (!std::isfinite(v)) throw FormatError("non-finite coefficient");
        auto dest = s.channel(k, ch);
        std::copy(values.begin(), values.end(), dest.begin());
      }
    }
    return s;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed schedule: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("invalid schedule: ") + e.what());
  }
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

inline Schedule load_schedule(const std::string& path) {
  return schedule_from_json(read_json_file(path));
}

inline void save_schedule(const std::string& path, const Schedule& s) {
  write_text_file(path, schedule_to_json(s).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// States and training sets
//
// A state entry is either {"preset": name, ...} or {"amplitudes": [...]}.
// Presets: "zeros", "ghz" (alias "bell"), "product_plus",
// "partial" (optional "a", default 0.6), "theta" (required "theta", rad).
// Amplitudes are reals or [re, im] pairs, normalized on load.

struct LabeledState {
  std::string label;
  CVector amplitudes;
  std::optional<double> target;
};

inline CVector state_preset(const std::string& name, int num_qubits, const json& params = {}) {
  if (name == "zeros") return states::zeros(num_qubits);
  if (name == "ghz" || name == "bell") return states::ghz(num_qubits);
  if (name == "product_plus") return states::product_plus(num_qubits);
  if (name == "partial") {
    const double a = params.is_object() ? params.value("a", 0.6) : 0.6;
    if (!(a >= 0.0 && a <= 1.0)) throw FormatError("partial amplitude must lie in [0, 1]");
    return states::ghz_family(num_qubits, a, std::sqrt(1.0 - a * a));
  }
  if (name == "theta") {
    if (!params.is_object() || !params.contains("theta"))
      throw FormatError("theta preset needs a 'theta' value");
    return states::theta(num_qubits, params.at("theta").get<double>());
  }
  throw FormatError("unknown state preset '" + name + "'");
}

inline CVector state_from_json(const json& e, int num_qubits) {
  try {
    if (e.contains("preset")) return state_preset(e.at("preset"), num_qubits, e);
    if (!e.contains("amplitudes")) throw FormatError("state needs 'preset' or 'amplitudes'");
    const auto& amps = e.at("amplitudes");
    const auto dim = Eigen::Index{1} << num_qubits;
    if (static_cast<Eigen::Index>(amps.size()) != dim)
      throw FormatError("amplitude list must have 2^N entries");
    CVector v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
      const auto& a = amps[i];
      v(i) = a.is_array() ? Complex(a.at(0).get<double>(), a.at(1).get<double>())
                          : Complex(a.get<double>(), 0.0);
    }
    if (v.norm() == 0.0) throw FormatError("zero amplitude vector");
    return v / v.norm();
  } catch (const json::exception& ex) {
    throw FormatError(std::string("malformed state: ") + ex.what());
  }
}

// {"num_qubits": N, "states" | "pairs": [{"label", preset/amplitudes, "target"?}]}
inline std::vector<LabeledState> states_from_json(const json& j, int* num_qubits_out = nullptr) {
  try {
    const int n = j.at("num_qubits");
    if (n < 1 || n > kMaxQubits) throw FormatError("num_qubits out of range");
    const auto& list = j.contains("pairs") ? j.at("pairs") : j.at("states");
    std::vector<LabeledState> out;
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto& e = list[i];
      LabeledState s;
      s.label = e.value("label", "state" + std::to_string(i));
      s.amplitudes = state_from_json(e, n);
      if (e.contains("target")) s.target = e.at("target").get<double>();
      out.push_back(std::move(s));
    }
    if (num_qubits_out) *num_qubits_out = n;
    return out;
  } catch (const json::exception& ex) {
    throw FormatError(std::string("malformed state list: ") + ex.what());
  }
}

inline std::vector<TrainingPair> training_set_from_json(const json& j) {
  std::vector<TrainingPair> pairs;
  for (auto& s : states_from_json(j)) {
    if (!s.target) throw FormatError("training pair '" + s.label + "' has no target");
    try {
      pairs.emplace_back(DensityMatrix::pure(s.amplitudes), *s.target, s.label);
    } catch (const std::invalid_argument& e) {
      throw FormatError("training pair '" + s.label + "': " + e.what());
    }
  }
  if (pairs.empty()) throw FormatError("training set is empty");
  return pairs;
}

// ---------------------------------------------------------------------------
// CSV outputs

inline void write_epochs_csv(std::ostream& os, const EpochLog& log) {
  os << "epoch,rms,wall_seconds\n";
  for (const auto& e : log.epochs)
    os << e.epoch << ',' << format_double(e.rms) << ',' << format_double(e.wall_seconds) << '\n';
}

inline std::string trace_header(int num_qubits) {
  std::string h = "epoch,t_ns";
  for (int i = 0; i < num_qubits; ++i) h += ",K_" + std::to_string(i);
  for (int i = 0; i < num_qubits; ++i) h += ",eps_" + std::to_string(i);
  for (int p = 0; p < pair_count(num_qubits); ++p) {
    const auto [i, j] = pair_qubits(p, num_qubits);
    h += ",zeta_" + std::to_string(i) + std::to_string(j);
  }
  return h + "\n";
}

// Physical parameter values on every grid point t_k, k = 0..M.
inline void write_trace_rows(std::ostream& os, int epoch, const Schedule& s, const TimeGrid& grid) {
  const int n = s.num_qubits();
  for (int k = 0; k <= grid.steps; ++k) {
    const double t = grid.time(k);
    const auto p = s.eval(t);
    os << epoch << ',' << format_double(t);
    for (double v : p.tunneling) os << ',' << format_double(v);
    for (double v : p.bias) os << ',' << format_double(v);
    for (int q = 0; q < pair_count(n); ++q) {
      const auto [i, j] = pair_qubits(q, n);
      os << ',' << format_double(p.coupling(i, j));
    }
    os << '\n';
  }
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

}  // namespace qdl
