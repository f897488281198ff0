#include "dysonchain/models.hpp"

namespace dyson {

OperatorMatrix build_linear_hamiltonian(const LinearModel& model, double t,
                                        const FockConfig& config) {
  auto [a, ad] = build_ladder(config);
  return model.omega(t) * (ad * a) + model.alpha(t) * a + model.beta(t) * ad;
}

OperatorMatrix build_swanson_hamiltonian(const SwansonModel& model, double t,
                                         const FockConfig& config) {
  auto [a, ad] = build_ladder(config);
  OperatorMatrix half = 0.5 * OperatorMatrix::Identity(config.dim, config.dim);
  return model.omega(t) * (ad * a + half) + model.alpha(t) * (a * a) + model.beta(t) * (ad * ad);
}

double hermiticity_residual(const OperatorMatrix& m, const FockConfig& config) {
  return hermiticity_residual_guarded(m, config.tail_guard);
}

namespace {

PtSymmetryReport pt_check(const CoefficientTrack& omega, const CoefficientTrack& alpha,
                          const CoefficientTrack& beta, double horizon, int samples,
                          bool alpha_beta_odd) {
  PtSymmetryReport r;
  for (int k = 0; k <= samples; ++k) {
    const double t = horizon * double(k) / double(std::max(samples, 1));
    r.max_omega_deviation = std::max(r.max_omega_deviation, std::abs(omega(t) - omega(-t)));
    const double sgn = alpha_beta_odd ? 1.0 : -1.0;
    r.max_alpha_deviation = std::max(r.max_alpha_deviation, std::abs(alpha(t) + sgn * alpha(-t)));
    r.max_beta_deviation = std::max(r.max_beta_deviation, std::abs(beta(t) + sgn * beta(-t)));
  }
  r.pass = r.max_omega_deviation < r.tolerance && r.max_alpha_deviation < r.tolerance &&
           r.max_beta_deviation < r.tolerance;
  r.note = "real-time parity test only; the imaginary-argument alternative is unchecked";
  return r;
}

}  // namespace

PtSymmetryReport pt_symmetry_check(const LinearModel& model, double horizon, int samples) {
  return pt_check(model.omega, model.alpha, model.beta, horizon, samples, /*alpha_beta_odd=*/true);
}

PtSymmetryReport pt_symmetry_check(const SwansonModel& model, double horizon, int samples) {
  return pt_check(model.omega, model.alpha, model.beta, horizon, samples, /*alpha_beta_odd=*/false);
}

}  // namespace dyson
