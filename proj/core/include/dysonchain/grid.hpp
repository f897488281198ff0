#pragma once

#include <stdexcept>

namespace dyson {

/// Uniform time grid t0 + k*dt, k = 0..steps. Solvers extend it internally by
/// two steps on each side so five-point stencils cover every reported point.
struct TimeGrid {
  double t0 = 0.0;
  double dt = 1e-3;
  int steps = 1000;

  void validate() const {
    if (dt <= 0) throw std::invalid_argument("TimeGrid: step must be > 0");
    if (steps < 4) throw std::invalid_argument("TimeGrid: need at least 4 steps");
  }
  int points() const { return steps + 1; }
  double time(int k) const { return t0 + dt * k; }
  double t1() const { return time(steps); }
  bool aligned_with(const TimeGrid& o) const {
    return t0 == o.t0 && dt == o.dt && steps == o.steps;
  }
};

}  // namespace dyson
