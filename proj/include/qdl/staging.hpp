#pragma once

// Iterative staging: seed an (N+1)-qubit schedule from a trained N-qubit one.

#include "qdl/schedules.hpp"

#include <algorithm>
#include <stdexcept>

namespace qdl {

// Every qubit inherits the source tunneling and bias channel (the shared one
// when tied, qubit 0's otherwise); every pair inherits the source coupling
// channel (pair (0,1) when untied).
inline Schedule stage_up(const Schedule& trained) {
  const int n = trained.num_qubits();
  if (n < 2) throw std::invalid_argument("staging needs a source with at least two qubits");
  if (n + 1 > kMaxQubits) throw std::invalid_argument("staging beyond 6 qubits");

  Schedule out = trained.mode() == ScheduleMode::fourier
                     ? Schedule::fourier(n + 1, trained.final_time(), trained.n_max(),
                                         trained.tying(), {})
                     : Schedule::piecewise(n + 1, trained.final_time(), trained.segments(),
                                           trained.tying(), {});
  for (ParamKind k : kAllKinds) {
    const auto source = trained.channel(k, 0);
    for (int ch = 0; ch < out.channel_count(k); ++ch) {
      auto dest = out.channel(k, ch);
      std::copy(source.begin(), source.end(), dest.begin());
    }
  }
  return out;
}

inline Schedule stage_to(const Schedule& trained, int num_qubits) {
  if (num_qubits <= trained.num_qubits())
    throw std::invalid_argument("staging target must have more qubits than the source");
  Schedule s = trained;
  while (s.num_qubits() < num_qubits) s = stage_up(s);
  return s;
}

}  // namespace qdl
