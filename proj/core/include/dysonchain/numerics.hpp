#pragma once

#include <functional>

namespace dyson {

/// One classical Runge-Kutta-4 step. State needs +, and scalar*State.
template <class State, class Rhs>
State rk4_step(Rhs&& f, double t, const State& y, double h) {
  State k1 = f(t, y);
  State k2 = f(t + 0.5 * h, State(y + 0.5 * h * k1));
  State k3 = f(t + 0.5 * h, State(y + 0.5 * h * k2));
  State k4 = f(t + h, State(y + h * k3));
  return State(y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

/// Five-point centered derivative (centered differences with one Richardson
/// level), O(h^4). `at` maps an integer offset to the sampled value.
template <class Value, class Accessor>
Value fd_derivative_5pt(Accessor&& at, double h) {
  return Value((-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) / (12.0 * h));
}

/// Plain centered derivative, O(h^2).
template <class Value, class Accessor>
Value fd_derivative_3pt(Accessor&& at, double h) {
  return Value((at(1) - at(-1)) / (2.0 * h));
}

}  // namespace dyson
