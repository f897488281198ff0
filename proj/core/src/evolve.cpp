#include "dysonchain/evolve.hpp"

#include <cmath>

namespace dyson {

StateCol coherent_state(Complex amplitude, const FockConfig& config) {
  return displacement(amplitude, config).col(0);
}

TrajectoryRecord propagate_flat(const TimeMatrix& h, const StateCol& phi0, const TimeGrid& grid,
                                const FockConfig& config, const FlatPropagationOptions& opts) {
  grid.validate();
  TrajectoryRecord rec;
  rec.grid = grid;
  rec.states.resize(grid.points());
  rec.flat_norm.resize(grid.points());
  rec.states[0] = phi0;
  rec.flat_norm[0] = phi0.norm();
  for (int k = 0; k < grid.steps; ++k) {
    const double tm = grid.time(k) + grid.dt / 2.0;
    OperatorMatrix hm = h(tm);
    if (hermiticity_residual_guarded(hm, config.tail_guard) > opts.hermiticity_abort) {
      throw std::runtime_error("propagate_flat: generator is not Hermitian within tolerance");
    }
    rec.states[k + 1] = matrix_exp(-kI * grid.dt * hm) * rec.states[k];
    rec.flat_norm[k + 1] = rec.states[k + 1].norm();
    rec.max_flat_norm_drift =
        std::max(rec.max_flat_norm_drift, std::abs(rec.flat_norm[k + 1] - rec.flat_norm[0]));
  }
  return rec;
}

TrajectoryRecord propagate_metric(const TimeMatrix& hamiltonian, const StateCol& psi0,
                                  const DysonMapSolution& map, const TimeGrid& grid,
                                  const FockConfig& config) {
  grid.validate();
  if (!grid.aligned_with(map.grid())) {
    throw std::invalid_argument("propagate_metric: map grid mismatch");
  }
  TrajectoryRecord rec;
  rec.grid = grid;
  rec.states.resize(grid.points());
  rec.metric_norm.resize(grid.points());
  rec.flat_norm.resize(grid.points());
  rec.states[0] = psi0;

  const bool parameter_family = map.family() != MapFamily::kMatrixPropagated;
  StateCol phi_parallel;
  if (parameter_family) {
    phi_parallel = map.eta(0) * psi0;
  } else {
    rec.note = "transport check skipped for matrix-propagated maps";
  }

  auto metric_norm_at = [&](int k) {
    return (rec.states[k].adjoint() * map.rho(k) * rec.states[k])(0, 0).real();
  };
  rec.metric_norm[0] = metric_norm_at(0);
  rec.flat_norm[0] = psi0.norm();

  for (int k = 0; k < grid.steps; ++k) {
    const double tm = grid.time(k) + grid.dt / 2.0;
    rec.states[k + 1] = matrix_exp(-kI * grid.dt * hamiltonian(tm)) * rec.states[k];
    rec.metric_norm[k + 1] = metric_norm_at(k + 1);
    rec.flat_norm[k + 1] = rec.states[k + 1].norm();
    if (rec.metric_norm[k + 1] > 1e6 * std::max(rec.metric_norm[0], 1e-300)) {
      throw std::runtime_error("propagate_metric: metric norm blow-up, map inconsistent");
    }
    rec.max_metric_norm_drift =
        std::max(rec.max_metric_norm_drift,
                 std::abs(rec.metric_norm[k + 1] - rec.metric_norm[0]) /
                     std::max(std::abs(rec.metric_norm[0]), 1e-300));
  }

  if (parameter_family) {
    // parallel flat propagation of phi = eta psi under the mapped generator,
    // built at half-grid resolution so the stepper sees true midpoints
    for (int k = 0; k < grid.steps; ++k) {
      const int hmid = 2 * k + 5;
      OperatorMatrix e = map.eta_half(hmid);
      OperatorMatrix einv = map.eta_inverse_half(hmid);
      OperatorMatrix edot = map.eta_dot_half(hmid);
      const double tm = grid.time(k) + grid.dt / 2.0;
      OperatorMatrix hm = e * hamiltonian(tm) * einv + kI * edot * einv;
      phi_parallel = matrix_exp(-kI * grid.dt * hm) * phi_parallel;
      StateCol transported = map.eta(k + 1) * rec.states[k + 1];
      rec.max_transport_deviation =
          std::max(rec.max_transport_deviation, (transported - phi_parallel).norm());
    }
  }
  return rec;
}

// ---------------------------------------------------------------------------
// analytic displaced-Fock propagation
// ---------------------------------------------------------------------------

namespace {

struct LinearCoeffsAt {
  Complex omega, u, f;
};

LinearCoeffsAt coeffs_at_half(const LinearModel& model, const DysonMapSolution& map, int hidx,
                              double t) {
  LinearCoeffsAt c;
  c.omega = model.omega(t);
  const Complex a = model.alpha(t), b = model.beta(t);
  c.u = (a + std::conj(b)) / 2.0;
  const Complex g = map.gamma_half(hidx);
  // gamma' from the generating ODE (all displacement maps here carry it)
  const Complex gd = kI * c.omega * g + kI * (a - std::conj(b)) / 2.0;
  c.f = -c.omega * std::norm(g) - a * std::conj(g) + b * g +
        0.5 * kI * (g * std::conj(gd) - std::conj(g) * gd);
  return c;
}

}  // namespace

AnalyticTrajectory analytic_propagate(const LinearModel& model, const DysonMapSolution& map,
                                      const AnalyticPropagatorSpec& spec, Complex phi0_amplitude,
                                      const TimeGrid& grid, const FockConfig& config) {
  grid.validate();
  if (!grid.aligned_with(map.grid())) {
    throw std::invalid_argument("analytic_propagate: map grid mismatch");
  }
  if (std::abs(phi0_amplitude) + std::abs(spec.theta0) >
      0.5 * std::sqrt(double(config.dim - config.tail_guard))) {
    throw std::runtime_error("analytic_propagate: amplitudes exceed the truncation budget");
  }

  // joint state: (theta, chi, phase integral resolved, phase integral drive-free)
  using Y = Eigen::Vector4cd;
  auto rhs = [&](int hidx, double t, const Y& y) {
    LinearCoeffsAt c = coeffs_at_half(model, map, hidx, t);
    Y dy;
    dy[0] = -kI * (c.omega * y[0] + std::conj(c.u));     // i theta' = w theta + u^*
    dy[1] = c.omega.real();                              // chi' = w
    dy[2] = c.f.real() + (c.u * y[0]).real();            // resolved phase integrand
    dy[3] = c.f.real();                                  // drive-free phase integrand
    return dy;
  };
  // full-step RK4 with midpoint coefficients taken from the half grid
  const int ext = grid.steps + 5;  // grid indices -2 .. steps+2 stored at +2 offset
  std::vector<Y> ys(ext);
  ys[2] = Y(spec.theta0, 0.0, 0.0, 0.0);
  auto step = [&](int kfrom, int dir) {
    const double t = grid.time(kfrom);
    const double h = dir * grid.dt;
    const int h0 = 2 * kfrom + 4;
    const Y& y = ys[kfrom + 2];
    Y k1 = rhs(h0, t, y);
    Y k2 = rhs(h0 + dir, t + h / 2, Y(y + (h / 2) * k1));
    Y k3 = rhs(h0 + dir, t + h / 2, Y(y + (h / 2) * k2));
    Y k4 = rhs(h0 + 2 * dir, t + h, Y(y + h * k3));
    ys[kfrom + dir + 2] = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  };
  for (int k = 0; k < grid.steps + 2; ++k) step(k, +1);
  for (int k = 0; k > -2; --k) step(k, -1);

  AnalyticTrajectory out;
  out.traj.grid = grid;
  out.theta.resize(grid.points());
  out.theta_drift_free.resize(grid.points());
  out.chi.resize(grid.points());
  out.lr_phase.resize(grid.points());
  out.lr_phase_drift_free.resize(grid.points());

  const OperatorMatrix d0_dag = displacement(spec.theta0, config).adjoint();
  const StateCol phi0 = coherent_state(phi0_amplitude, config);

  // states on the extended grid for the derivative stencil, both tracks
  std::vector<StateCol> st(ext), st_free(ext);
  for (int k = -2; k <= grid.steps + 2; ++k) {
    const Y& y = ys[k + 2];
    const double chi = y[1].real();
    const Complex theta_free = spec.theta0 * std::exp(-kI * chi);
    StateCol base = rotation(chi, config) * (d0_dag * phi0);
    st[k + 2] = std::exp(-kI * y[2]) * (displacement(y[0], config) * base);
    st_free[k + 2] = std::exp(-kI * y[3]) * (displacement(theta_free, config) * base);
    if (k >= 0 && k <= grid.steps) {
      out.theta[k] = y[0];
      out.theta_drift_free[k] = theta_free;
      out.chi[k] = chi;
      out.lr_phase[k] = -double(spec.fock_label) * chi - y[2].real();
      out.lr_phase_drift_free[k] = -double(spec.fock_label) * chi - y[3].real();
    }
  }
  out.traj.states.assign(st.begin() + 2, st.begin() + 2 + grid.points());
  out.traj.flat_norm.resize(grid.points());
  for (int k = 0; k <= grid.steps; ++k) out.traj.flat_norm[k] = out.traj.states[k].norm();

  // flat Schrodinger residual for both tracks
  auto [a, ad] = build_ladder(config);
  OperatorMatrix n_op = ad * a;
  OperatorMatrix eye = OperatorMatrix::Identity(config.dim, config.dim);
  for (int k = 0; k <= grid.steps; ++k) {
    LinearCoeffsAt c = coeffs_at_half(model, map, 2 * k + 4, grid.time(k));
    OperatorMatrix h = c.omega * n_op + c.u * a + std::conj(c.u) * ad + c.f.real() * eye;
    auto resid = [&](const std::vector<StateCol>& s) {
      StateCol dphi = (-s[k + 4] + 8.0 * s[k + 3] - 8.0 * s[k + 1] + s[k]) / (12.0 * grid.dt);
      return (kI * dphi - h * s[k + 2]).norm();
    };
    out.max_residual = std::max(out.max_residual, resid(st));
    out.max_residual_drift_free = std::max(out.max_residual_drift_free, resid(st_free));
  }
  return out;
}

OperatorMatrix quadrature(int k, const FockConfig& config) {
  auto [a, ad] = build_ladder(config);
  if (k == 1) return 0.5 * (a + ad);
  if (k == 2) return (a - ad) / (2.0 * kI);
  throw std::invalid_argument("quadrature: k must be 1 or 2");
}

QuadratureReport quadrature_expectations(const DysonMapSolution& map,
                                         const TrajectoryRecord& flat_traj,
                                         const AnalyticTrajectory& analytic,
                                         Complex phi0_amplitude, const FockConfig& config) {
  const TimeGrid& grid = flat_traj.grid;
  QuadratureReport rep;
  const int points = grid.points();
  rep.x1_metric.resize(points);
  rep.x2_metric.resize(points);
  rep.x1_flat.resize(points);
  rep.x2_flat.resize(points);
  rep.x1_closed.resize(points);
  rep.x2_closed.resize(points);
  OperatorMatrix x1 = quadrature(1, config), x2 = quadrature(2, config);
  for (int k = 0; k < points; ++k) {
    const StateCol& phi = flat_traj.states[k];
    rep.x1_flat[k] = (phi.adjoint() * x1 * phi)(0, 0).real();
    rep.x2_flat[k] = (phi.adjoint() * x2 * phi)(0, 0).real();

    OperatorMatrix e = map.eta(k), einv = map.eta_inverse(k);
    StateCol psi = einv * phi;
    OperatorMatrix rho = e.adjoint() * e;
    rep.x1_metric[k] = (psi.adjoint() * rho * (einv * (x1 * (e * psi))))(0, 0).real();
    rep.x2_metric[k] = (psi.adjoint() * rho * (einv * (x2 * (e * psi))))(0, 0).real();

    const Complex amp = std::exp(-kI * analytic.chi[k]) * (phi0_amplitude - analytic.theta[0]) +
                        analytic.theta[k];
    rep.x1_closed[k] = amp.real();
    rep.x2_closed[k] = amp.imag();

    rep.max_metric_vs_flat = std::max({rep.max_metric_vs_flat,
                                       std::abs(rep.x1_metric[k] - rep.x1_flat[k]),
                                       std::abs(rep.x2_metric[k] - rep.x2_flat[k])});
    rep.max_closed_vs_flat = std::max({rep.max_closed_vs_flat,
                                       std::abs(rep.x1_closed[k] - rep.x1_flat[k]),
                                       std::abs(rep.x2_closed[k] - rep.x2_flat[k])});
  }
  return rep;
}

CrossSpaceElements cross_space_matrix_elements(const OperatorMatrix& observable,
                                               const ChainNode& node_down,
                                               const ChainNode& node_zero,
                                               const ChainNode& node_up,
                                               const GaugeLink& gauge_down,
                                               const GaugeLink& gauge_up, const StateCol& phi,
                                               const StateCol& phi_tilde, int k) {
  if (!node_down.dyson || !node_zero.dyson || !node_up.dyson) {
    throw std::invalid_argument("cross_space_matrix_elements: chain nodes must carry maps");
  }
  const DysonMapSolution& md = *node_down.dyson;
  const DysonMapSolution& mz = *node_zero.dyson;
  const DysonMapSolution& mu = *node_up.dyson;

  CrossSpaceElements out;
  auto metric_element = [&](const DysonMapSolution& m, const StateCol& f,
                            const StateCol& ft) -> Complex {
    OperatorMatrix e = m.eta(k), einv = m.eta_inverse(k);
    StateCol psi = einv * f, psit = einv * ft;
    OperatorMatrix rho = e.adjoint() * e;
    return (psi.adjoint() * rho * (einv * (observable * (e * psit))))(0, 0);
  };

  out.flat = (phi.adjoint() * observable * phi_tilde)(0, 0);
  out.level_zero = metric_element(mz, phi, phi_tilde);

  const Complex a_down_inv = Complex(1.0, 0.0) / gauge_down.gauge_factor(k);
  out.level_down = metric_element(md, a_down_inv * phi, a_down_inv * phi_tilde);

  const Complex a_up = gauge_up.gauge_factor(k);
  StateCol phi_up = a_up * phi, phi_up_tilde = a_up * phi_tilde;
  out.level_up = metric_element(mu, phi_up, phi_up_tilde);

  out.max_equality_deviation = std::max({std::abs(out.flat - out.level_zero),
                                         std::abs(out.flat - out.level_down),
                                         std::abs(out.flat - out.level_up)});

  // H' in its own space against its conjugated form downstairs, plus the flat
  // element of h' it visibly differs from
  OperatorMatrix e_up = mu.eta(k), e_up_inv = mu.eta_inverse(k);
  OperatorMatrix rho_up = e_up.adjoint() * e_up;
  StateCol psi_up = e_up_inv * phi_up, psi_up_tilde = e_up_inv * phi_up_tilde;
  out.h_prime_element =
      (psi_up.adjoint() * rho_up * node_up.hamiltonian[k] * psi_up_tilde)(0, 0);
  OperatorMatrix conjugated = e_up * mz.eta_inverse(k) * node_zero.hermitian_counterpart[k] *
                              mz.eta(k) * e_up_inv;
  out.h_prime_conjugated = (phi_up.adjoint() * conjugated * phi_up_tilde)(0, 0);
  out.h_flat_element = (phi_up.adjoint() * node_up.hermitian_counterpart[k] * phi_up_tilde)(0, 0);
  out.h_prime_identity_deviation = std::abs(out.h_prime_element - out.h_prime_conjugated);
  return out;
}

}  // namespace dyson
