#pragma once

// Time-dependent Hamiltonian weights. Each physical parameter (K_i, eps_i,
// zeta_ij) is a "channel" of coefficients; with tying enabled all sites of
// a kind share one channel. Two representations:
//
//   fourier:   P(t) = P0 + sum_{n=1..n_max} [S_n sin(n pi t/T) + C_n cos(n pi t/T)]
//              stored as [P0, S_1..S_n, C_1..C_n]
//   piecewise: constant on S equal segments, stored as [w_0..w_{S-1}]

#include "qdl/qcore.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qdl {

template <class T>
struct PerKind {
  std::array<T, 3> values{};

  PerKind() = default;
  PerKind(T tunneling, T bias, T coupling) : values{tunneling, bias, coupling} {}

  T& operator[](ParamKind k) { return values[static_cast<int>(k)]; }
  const T& operator[](ParamKind k) const { return values[static_cast<int>(k)]; }
  bool operator==(const PerKind&) const = default;
};

enum class ScheduleMode { fourier, piecewise };

inline const char* mode_name(ScheduleMode m) {
  return m == ScheduleMode::fourier ? "fourier" : "piecewise";
}

struct BasisTerm {
  enum class Type { constant, sine, cosine, segment };
  Type type = Type::constant;
  int index = 0;  // harmonic n for sine/cosine, segment number for segment

  static BasisTerm constant() { return {Type::constant, 0}; }
  static BasisTerm sine(int n) { return {Type::sine, n}; }
  static BasisTerm cosine(int n) { return {Type::cosine, n}; }
  static BasisTerm segment(int s) { return {Type::segment, s}; }
  bool operator==(const BasisTerm&) const = default;
};

struct CoefficientId {
  ParamKind kind = ParamKind::tunneling;
  int channel = 0;
  BasisTerm term;
  bool operator==(const CoefficientId&) const = default;
};

struct Tying {
  bool tunneling = false;
  bool bias = false;
  bool coupling = false;

  static Tying all() { return {true, true, true}; }
  static Tying none() { return {}; }
  bool of(ParamKind k) const {
    switch (k) {
      case ParamKind::tunneling: return tunneling;
      case ParamKind::bias: return bias;
      case ParamKind::coupling: return coupling;
    }
    return false;
  }
  bool operator==(const Tying&) const = default;
};

class Schedule {
 public:
  static Schedule fourier(int num_qubits, double final_time, int n_max, Tying tying,
                          const PerKind<double>& initial) {
    if (n_max < 0) throw std::invalid_argument("n_max must be >= 0");
    Schedule s(ScheduleMode::fourier, num_qubits, final_time, n_max, 0, tying);
    for (ParamKind k : kAllKinds)
      for (auto& ch : s.channels_[static_cast<int>(k)]) ch[0] = initial[k];
    return s;
  }

  static Schedule piecewise(int num_qubits, double final_time, int segments, Tying tying,
                            const PerKind<double>& initial) {
    if (segments < 1) throw std::invalid_argument("segment count must be >= 1");
    Schedule s(ScheduleMode::piecewise, num_qubits, final_time, 0, segments, tying);
    for (ParamKind k : kAllKinds)
      for (auto& ch : s.channels_[static_cast<int>(k)])
        std::fill(ch.begin(), ch.end(), initial[k]);
    return s;
  }

  ScheduleMode mode() const { return mode_; }
  int num_qubits() const { return num_qubits_; }
  double final_time() const { return final_time_; }
  int n_max() const { return n_max_; }
  int segments() const { return segments_; }
  const Tying& tying() const { return tying_; }

  int basis_count() const {
    return mode_ == ScheduleMode::fourier ? 1 + 2 * n_max_ : segments_;
  }
  int channel_count(ParamKind k) const {
    return static_cast<int>(channels_[static_cast<int>(k)].size());
  }
  int channel_of_site(ParamKind k, int site) const {
    if (site < 0 || site >= site_count(k, num_qubits_))
      throw std::out_of_range("site index out of range");
    return tying_.of(k) ? 0 : site;
  }

  std::span<const double> channel(ParamKind k, int ch) const {
    return channels_[static_cast<int>(k)].at(ch);
  }
  std::span<double> channel(ParamKind k, int ch) { return channels_[static_cast<int>(k)].at(ch); }

  // Flat position of a basis term inside a channel; throws if the term does
  // not belong to this schedule's representation.
  int slot(const BasisTerm& term) const {
    using T = BasisTerm::Type;
    if (mode_ == ScheduleMode::fourier) {
      if (term.type == T::constant && term.index == 0) return 0;
      if ((term.type == T::sine || term.type == T::cosine) && term.index >= 1 &&
          term.index <= n_max_)
        return term.type == T::sine ? term.index : n_max_ + term.index;
    } else if (term.type == T::segment && term.index >= 0 && term.index < segments_) {
      return term.index;
    }
    throw std::invalid_argument("basis term does not belong to this schedule");
  }

  BasisTerm term_at(int slot_index) const {
    if (slot_index < 0 || slot_index >= basis_count())
      throw std::out_of_range("basis slot out of range");
    if (mode_ == ScheduleMode::piecewise) return BasisTerm::segment(slot_index);
    if (slot_index == 0) return BasisTerm::constant();
    if (slot_index <= n_max_) return BasisTerm::sine(slot_index);
    return BasisTerm::cosine(slot_index - n_max_);
  }

  void check(const CoefficientId& id) const {
    if (id.channel < 0 || id.channel >= channel_count(id.kind))
      throw std::invalid_argument("coefficient channel out of range");
    (void)slot(id.term);
  }

  double value(const CoefficientId& id) const {
    check(id);
    return channel(id.kind, id.channel)[slot(id.term)];
  }
  void set_value(const CoefficientId& id, double v) {
    check(id);
    channel(id.kind, id.channel)[slot(id.term)] = v;
  }

  void check_time(double t) const {
    if (!(t >= 0.0 && t <= final_time_))
      throw std::out_of_range("time " + std::to_string(t) + " outside [0, T]");
  }

  // Segment containing t; t = T belongs to the last segment.
  int segment_of(double t) const {
    check_time(t);
    const int s = static_cast<int>(std::floor(t * segments_ / final_time_));
    return std::min(s, segments_ - 1);
  }

  // Value of a single basis function at t (chain-rule factor dP/dcoefficient).
  double basis_value(const BasisTerm& term, double t) const {
    check_time(t);
    (void)slot(term);
    using T = BasisTerm::Type;
    const double phase = term.index * std::numbers::pi * t / final_time_;
    switch (term.type) {
      case T::constant: return 1.0;
      case T::sine: return std::sin(phase);
      case T::cosine: return std::cos(phase);
      case T::segment: return segment_of(t) == term.index ? 1.0 : 0.0;
    }
    return 0.0;
  }
  double basis_value(const CoefficientId& id, double t) const {
    check(id);
    return basis_value(id.term, t);
  }

  double channel_value(ParamKind k, int ch, double t) const {
    check_time(t);
    const auto c = channel(k, ch);
    if (mode_ == ScheduleMode::piecewise) return c[segment_of(t)];
    double v = c[0];
    for (int n = 1; n <= n_max_; ++n) {
      const double phase = n * std::numbers::pi * t / final_time_;
      v += c[n] * std::sin(phase) + c[n_max_ + n] * std::cos(phase);
    }
    return v;
  }

  HamiltonianParams eval(double t) const {
    check_time(t);
    auto p = HamiltonianParams::zeros(num_qubits_);
    std::array<std::vector<double>, 3> per_channel;
    for (ParamKind k : kAllKinds) {
      auto& vals = per_channel[static_cast<int>(k)];
      for (int ch = 0; ch < channel_count(k); ++ch) vals.push_back(channel_value(k, ch, t));
    }
    const auto site_value = [&](ParamKind k, int site) {
      return per_channel[static_cast<int>(k)][channel_of_site(k, site)];
    };
    for (int i = 0; i < num_qubits_; ++i) {
      p.tunneling[i] = site_value(ParamKind::tunneling, i);
      p.bias[i] = site_value(ParamKind::bias, i);
    }
    for (int pi = 0; pi < pair_count(num_qubits_); ++pi) {
      const auto [i, j] = pair_qubits(pi, num_qubits_);
      p.coupling(i, j) = p.coupling(j, i) = site_value(ParamKind::coupling, pi);
    }
    return p;
  }

  // Sum of term generators over every site fed by a channel.
  RMatrix channel_generator(ParamKind k, int ch) const {
    const Eigen::Index dim = Eigen::Index{1} << num_qubits_;
    RMatrix g = RMatrix::Zero(dim, dim);
    for (int site = 0; site < site_count(k, num_qubits_); ++site)
      if (channel_of_site(k, site) == ch) g += term_generator(k, site, num_qubits_);
    return g;
  }

  bool operator==(const Schedule&) const = default;

 private:
  Schedule(ScheduleMode mode, int num_qubits, double final_time, int n_max, int segments,
           Tying tying)
      : mode_(mode),
        num_qubits_(num_qubits),
        final_time_(final_time),
        n_max_(n_max),
        segments_(segments),
        tying_(tying) {
    if (num_qubits < 1 || num_qubits > kMaxQubits)
      throw std::invalid_argument("num_qubits out of range");
    if (!(final_time > 0.0) || !std::isfinite(final_time))
      throw std::invalid_argument("final time must be positive");
    for (ParamKind k : kAllKinds) {
      const int sites = site_count(k, num_qubits);
      const int count = sites == 0 ? 0 : (tying.of(k) ? 1 : sites);
      channels_[static_cast<int>(k)].assign(count, std::vector<double>(basis_count(), 0.0));
    }
  }

  ScheduleMode mode_;
  int num_qubits_;
  double final_time_;
  int n_max_;
  int segments_;
  Tying tying_;
  std::array<std::vector<std::vector<double>>, 3> channels_;
};

// Trainable coefficients in deterministic order: kind (K, eps, zeta), then
// channel, then basis slot. Kinds with a zero learning rate are skipped.
inline std::vector<CoefficientId> list_trainable(const Schedule& s,
                                                 const PerKind<double>& learning_rates) {
  std::vector<CoefficientId> out;
  for (ParamKind k : kAllKinds) {
    if (learning_rates[k] == 0.0) continue;
    for (int ch = 0; ch < s.channel_count(k); ++ch)
      for (int b = 0; b < s.basis_count(); ++b) out.push_back({k, ch, s.term_at(b)});
  }
  return out;
}

inline std::string short_kind(ParamKind k) {
  switch (k) {
    case ParamKind::tunneling: return "K";
    case ParamKind::bias: return "eps";
    case ParamKind::coupling: return "zeta";
  }
  return "?";
}

inline std::string describe(const Schedule& s, const CoefficientId& id) {
  std::string site;
  if (s.tying().of(id.kind)) {
    site = "*";
  } else if (id.kind == ParamKind::coupling) {
    const auto [i, j] = pair_qubits(id.channel, s.num_qubits());
    site = std::to_string(i) + std::to_string(j);
  } else {
    site = std::to_string(id.channel);
  }
  std::string term;
  switch (id.term.type) {
    case BasisTerm::Type::constant: term = "P0"; break;
    case BasisTerm::Type::sine: term = "S" + std::to_string(id.term.index); break;
    case BasisTerm::Type::cosine: term = "C" + std::to_string(id.term.index); break;
    case BasisTerm::Type::segment: term = "seg" + std::to_string(id.term.index); break;
  }
  return short_kind(id.kind) + "[" + site + "]." + term;
}

}  // namespace qdl
