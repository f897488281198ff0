#pragma once

#include "dysonchain/chain.hpp"
#include "dysonchain/dyson.hpp"

namespace dyson {

/// Time series of a propagated state with conservation diagnostics.
struct TrajectoryRecord {
  TimeGrid grid;
  std::vector<StateCol> states;
  std::vector<double> flat_norm;
  std::vector<double> metric_norm;
  double max_flat_norm_drift = 0.0;
  double max_metric_norm_drift = 0.0;
  double max_transport_deviation = 0.0;  // metric propagation vs eta^-1 phi
  std::string note;
};

/// Coherent state D(amplitude)|0>.
StateCol coherent_state(Complex amplitude, const FockConfig& config);

struct FlatPropagationOptions {
  double hermiticity_abort = 1e-6;
};

/// Exponential-midpoint propagation of i phi' = h(t) phi for Hermitian h.
/// Aborts when the guarded Hermiticity residual of h exceeds the cap; each
/// step is exactly unitary up to the matrix-exponential kernel error.
TrajectoryRecord propagate_flat(const TimeMatrix& h, const StateCol& phi0, const TimeGrid& grid,
                                const FockConfig& config, const FlatPropagationOptions& opts = {});

/// Same stepper on the non-Hermitian generator, never renormalized. Records
/// the metric norm <psi|rho psi> from the supplied map and, for
/// parameter-family maps, the deviation of eta psi from an independently
/// propagated flat trajectory of the mapped Hermitian generator.
TrajectoryRecord propagate_metric(const TimeMatrix& hamiltonian, const StateCol& psi0,
                                  const DysonMapSolution& map, const TimeGrid& grid,
                                  const FockConfig& config);

/// Specification of the displaced-Fock analytic solution.
struct AnalyticPropagatorSpec {
  Complex theta0{};
  int fock_label = 0;  // m of the phase track
};

/// Analytic evolution U_t = Y_t D(theta_t) R(chi_t) D(theta_0)^dag applied to
/// a coherent state. The displacement track is integrated from
/// i theta' = w theta + u^*, which zeroes the flat Schrodinger residual; the
/// drive-free track theta_0 e^{-i chi} is also evaluated and its residual
/// reported alongside (they coincide only when u = 0).
struct AnalyticTrajectory {
  TrajectoryRecord traj;
  std::vector<Complex> theta;          // resolved track
  std::vector<Complex> theta_drift_free;
  std::vector<double> chi;             // integral of omega
  std::vector<double> lr_phase;        // Lewis-Riesenfeld phase for fock_label
  std::vector<double> lr_phase_drift_free;
  double max_residual = 0.0;            // ||(i d/dt - h) phi|| with resolved theta
  double max_residual_drift_free = 0.0; // same for the drive-free track
};

AnalyticTrajectory analytic_propagate(const LinearModel& model, const DysonMapSolution& map,
                                      const AnalyticPropagatorSpec& spec, Complex phi0_amplitude,
                                      const TimeGrid& grid, const FockConfig& config);

/// Field quadratures x1 = (a + a^dag)/2, x2 = (a - a^dag)/(2i).
OperatorMatrix quadrature(int k, const FockConfig& config);

/// Quadrature expectations along a flat trajectory, evaluated three ways:
/// transported metric-space form, flat form, and the coherent closed form
/// Re/Im{ e^{-i chi}(phi0 - theta0) + theta_t }.
struct QuadratureReport {
  std::vector<double> x1_metric, x2_metric;
  std::vector<double> x1_flat, x2_flat;
  std::vector<double> x1_closed, x2_closed;
  double max_metric_vs_flat = 0.0;
  double max_closed_vs_flat = 0.0;
};

QuadratureReport quadrature_expectations(const DysonMapSolution& map,
                                         const TrajectoryRecord& flat_traj,
                                         const AnalyticTrajectory& analytic, Complex phi0_amplitude,
                                         const FockConfig& config);

/// Matrix elements of one observable across three neighbouring spaces at a
/// single grid time, with states transported by the maps and gauge factors.
struct CrossSpaceElements {
  Complex flat;           // <phi| o phi~>
  Complex level_down;     // <psi_bar | O_bar psi_bar~>_rho_bar
  Complex level_zero;     // <psi | O psi~>_rho
  Complex level_up;       // <psi' | O' psi'~>_rho'
  double max_equality_deviation = 0.0;

  // H' as an observable of the lower space vs its non-observability upstairs
  Complex h_prime_element;       // <psi'| H' psi'~>_rho'
  Complex h_prime_conjugated;    // <phi'| eta' eta^-1 h eta eta'^-1 phi'~>
  Complex h_flat_element;        // <phi'| h' phi'~>
  double h_prime_identity_deviation = 0.0;  // first two must agree
};

/// node_down/node_zero/node_up are three consecutive chain levels with their
/// link maps and counterparts filled in (node_up carries H' as its
/// Hamiltonian and h' as its counterpart).
CrossSpaceElements cross_space_matrix_elements(const OperatorMatrix& observable,
                                               const ChainNode& node_down,
                                               const ChainNode& node_zero,
                                               const ChainNode& node_up,
                                               const GaugeLink& gauge_down,
                                               const GaugeLink& gauge_up, const StateCol& phi,
                                               const StateCol& phi_tilde, int k);

}  // namespace dyson
