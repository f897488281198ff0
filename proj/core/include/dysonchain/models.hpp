#pragma once

#include "dysonchain/fock.hpp"
#include "dysonchain/track.hpp"

namespace dyson {

/// Oscillator with linear (one-photon) drive: H_t = w_t a^dag a + alpha_t a + beta_t a^dag.
/// Non-Hermitian whenever w_t is not real or alpha_t != beta_t^*.
struct LinearModel {
  CoefficientTrack omega;
  CoefficientTrack alpha;
  CoefficientTrack beta;
};

/// Swanson-type quadratic (parametric) model:
/// H_t = w_t (a^dag a + 1/2) + alpha_t a^2 + beta_t a^dag^2.
struct SwansonModel {
  CoefficientTrack omega;
  CoefficientTrack alpha;
  CoefficientTrack beta;
};

OperatorMatrix build_linear_hamiltonian(const LinearModel& model, double t, const FockConfig& config);
OperatorMatrix build_swanson_hamiltonian(const SwansonModel& model, double t, const FockConfig& config);

/// ||M - M^dag||_F / max(||M||_F, 1) with the top config.tail_guard
/// rows/columns excluded.
double hermiticity_residual(const OperatorMatrix& m, const FockConfig& config);

/// PT-symmetry diagnostic. For the linear model the symmetry requires an even
/// omega and odd alpha, beta in t; for the Swanson model all three even.
/// The analytic-continuation variant (generic functions of it) is not
/// checked and is reported as such.
struct PtSymmetryReport {
  double max_omega_deviation = 0.0;
  double max_alpha_deviation = 0.0;
  double max_beta_deviation = 0.0;
  bool pass = false;
  double tolerance = 1e-10;
  std::string note;  // records the unchecked imaginary-argument alternative
};

PtSymmetryReport pt_symmetry_check(const LinearModel& model, double horizon, int samples);
PtSymmetryReport pt_symmetry_check(const SwansonModel& model, double horizon, int samples);

}  // namespace dyson
