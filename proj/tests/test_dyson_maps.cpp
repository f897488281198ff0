#include <doctest.h>

#include "dysonchain/dyson.hpp"
#include "dysonchain/numerics.hpp"

using namespace dyson;

namespace {
const FockConfig kCfg{40, 5, 1e-8};
const TimeGrid kGrid{0.0, 1e-3, 200};

LinearModel linear(Complex w, Complex a, Complex b) {
  return {constant_track(w), constant_track(a), constant_track(b)};
}
}  // namespace

TEST_CASE("closed-form bar coefficients") {
  LinearModel m = linear(1.0, 0.2, 0.4);
  CHECK(std::abs(bar_gamma(m, 0.0) - Complex(0.1, 0)) < 1e-15);
  CHECK(std::abs(bar_f(m, 0.0) - Complex(0.01, 0)) < 1e-16);
  CHECK(bar_side_condition(m, 0.0) < 1e-16);

  // equal drive needs no map
  CHECK(std::abs(bar_gamma(linear(1.0, 0.3, 0.3), 0.0)) < 1e-16);

  // imaginary symmetric drive
  LinearModel mi = linear(2.0, Complex(0, 0.1), Complex(0, 0.3));
  CHECK(std::abs(bar_gamma(mi, 0.0) - Complex(0, -0.1)) < 1e-15);
  CHECK(std::abs(bar_f(mi, 0.0) - Complex(0.02, 0)) < 1e-16);
  CHECK(bar_side_condition(mi, 0.0) < 1e-16);

  CHECK_THROWS_AS(bar_gamma(linear(0.0, 0.2, 0.4), 0.0), std::domain_error);
}

TEST_CASE("bar map conjugation matches the closed-form target") {
  LinearModel m = linear(1.0, 0.2, 0.4);
  DysonMapSolution map = build_bar_map_linear(m, kGrid, kCfg);

  auto [a, ad] = build_ladder(kCfg);
  const Complex ubar = 0.3;  // omega*gbar + alpha = 0.1 + 0.2
  OperatorMatrix target = (ad * a) + ubar * a + std::conj(ubar) * ad +
                          0.01 * OperatorMatrix::Identity(40, 40);
  OperatorMatrix h = map.eta(0) * build_linear_hamiltonian(m, 0.0, kCfg) * map.eta_inverse(0);
  CHECK(relative_deviation_guarded(target, h, 5) < 1e-9);
  CHECK(hermiticity_residual(h, kCfg) < 1e-10);
}

TEST_CASE("bar map with trivial drive is the identity") {
  DysonMapSolution map = build_bar_map_linear(linear(1.0, 0.0, 0.0), kGrid, kCfg);
  CHECK((map.eta(7) - OperatorMatrix::Identity(40, 40)).norm() < 1e-14);
}

TEST_CASE("time-dependent bar map stays Hermitian-making across the grid") {
  LinearModel m{constant_track(1.0), CoefficientTrack("0.2*sin(t)"),
                CoefficientTrack("0.4*sin(t)")};
  DysonMapSolution map = build_bar_map_linear(m, kGrid, kCfg);
  double worst = 0.0;
  for (int k = 0; k <= kGrid.steps; k += 40) {
    OperatorMatrix h =
        map.eta(k) * build_linear_hamiltonian(m, kGrid.time(k), kCfg) * map.eta_inverse(k);
    worst = std::max(worst, hermiticity_residual(h, kCfg));
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("gamma ODE: fixed point and integrating-factor oracle") {
  LinearModel m = linear(1.0, 0.2, 0.4);

  // the stationary value is the closed-form bar coefficient
  DysonMapSolution fixed = solve_gamma_ode(m, Complex(0.1, 0.0), kGrid, kCfg);
  CHECK(std::abs(fixed.gamma(kGrid.steps) - Complex(0.1, 0)) < 1e-14);

  // generic start: gamma_t = e^{i w t}(g0 - gbar) + gbar
  const Complex g0(0.05, 0.05);
  TimeGrid grid{0.0, 1e-3, 1000};
  DysonMapSolution map = solve_gamma_ode(m, g0, grid, kCfg);
  const double t = 1.0;
  const Complex oracle = std::exp(kI * t) * (g0 - Complex(0.1, 0)) + Complex(0.1, 0);
  CHECK(std::abs(map.gamma(1000) - oracle) < 1e-9);

  // trivial model holds at zero
  DysonMapSolution zero = solve_gamma_ode(linear(1.0, 0.0, 0.0), Complex(0, 0), kGrid, kCfg);
  CHECK(std::abs(zero.gamma(100)) < 1e-15);
}

TEST_CASE("mapped-generator coefficients after the gamma ODE") {
  LinearModel m = linear(1.0, 0.2, 0.4);
  DysonMapSolution map = solve_gamma_ode(m, Complex(0.05, 0.02), kGrid, kCfg);
  HermitianCoefficients c = linear_hermitian_coeffs(m, map);
  for (int k = 0; k <= kGrid.steps; k += 25) {
    CHECK(std::abs(c.u[k] - Complex(0.3, 0)) < 1e-8);  // (alpha + beta^*)/2
  }
  CHECK(c.max_v_minus_u_conj < 1e-8);

  // identity coefficient against the matrix conjugation
  OperatorMatrix hp = build_linear_hamiltonian(m, 0.0, kCfg) +
                      kI * (map.eta_inverse(0) * map.eta_dot(0));
  OperatorMatrix h = map.eta(0) * hp * map.eta_inverse(0);
  CHECK(std::abs(h(0, 0) - c.f[0]) < 1e-9);
}

TEST_CASE("gamma towers keep the drive coefficient chain-invariant") {
  LinearModel m{constant_track(1.0), CoefficientTrack("0.3*i"), CoefficientTrack("0.3*i")};
  auto maps = solve_gamma_tower(m, {Complex(0.05, 0.0), Complex(0.02, 0.0)}, kGrid, kCfg);
  REQUIRE(maps.size() == 2);
  // level-1 effective drive: alpha + i gamma0', beta + i gamma0'^*
  const Complex a1 = Complex(0, 0.3) + kI * maps[0].gamma_dot(0);
  const Complex b1 = Complex(0, 0.3) + kI * std::conj(maps[0].gamma_dot(0));
  CHECK(std::abs((a1 + std::conj(b1)) / 2.0 - Complex(0, 0)) < 1e-14);
}

TEST_CASE("stationary-condition residuals and the quadratic-map root") {
  SwansonModel m{constant_track(1.0), constant_track(0.2), constant_track(0.3)};
  SwansonRootOptions opts;  // epsilon = 0.2
  Su11Params root = solve_swanson_bar(m, 0.0, opts);
  CHECK(swanson_stationary_residuals(1.0, 0.2, 0.3, opts.epsilon, std::abs(root.mu),
                                     std::arg(root.mu))
            .cwiseAbs()
            .maxCoeff() < 1e-12);

  FockConfig cfg{60, 30, 1e-8};
  OperatorMatrix hbar = su11_product(root, cfg) * build_swanson_hamiltonian(m, 0.0, cfg) *
                        su11_product_inverse(root, cfg);
  CHECK(hermiticity_residual_guarded(hbar, 30) < 1e-8);

  // trivial drive root: mu = 0 solves for any epsilon
  SwansonModel trivial{constant_track(1.0), constant_track(0.0), constant_track(0.0)};
  Su11Params r0 = solve_swanson_bar(trivial, 0.0, opts);
  CHECK(std::abs(r0.mu) < 1e-10);
}

TEST_CASE("invariant quadratic map: stationarity at the root") {
  SwansonModel m{constant_track(1.0), constant_track(0.2), constant_track(0.3)};
  FockConfig cfg{60, 5, 1e-8};
  TimeGrid grid{0.0, 1e-3, 200};
  Su11Params root = solve_swanson_bar(m, 0.0, {});
  SwansonInvariantOptions io;
  io.oracle_stride = 200;
  io.allow_fallback = false;
  SwansonInvariantResult res = solve_swanson_invariant(m, root, grid, cfg, io);
  CHECK((res.map.su11_chart(200) - res.map.su11_chart(0)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(res.max_hermiticity_residual < 1e-8);
  CHECK(res.path == "ode");
}

TEST_CASE("invariant quadratic map: long-horizon stationarity") {
  SwansonModel m{constant_track(1.0), constant_track(0.2), constant_track(0.3)};
  FockConfig cfg{60, 5, 1e-8};
  TimeGrid grid{0.0, 1e-3, 5000};
  Su11Params root = solve_swanson_bar(m, 0.0, {});
  SwansonInvariantOptions io;
  io.oracle_stride = 5000;
  io.allow_fallback = false;
  SwansonInvariantResult res = solve_swanson_invariant(m, root, grid, cfg, io);
  CHECK((res.map.su11_chart(5000) - res.map.su11_chart(0)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("any chart start yields a Hermitian invariant flow") {
  // the derivative closure cancels the anti-Hermitian channels pointwise, so
  // the solution family is parameterized by the full chart initial condition
  SwansonModel m{constant_track(1.0), constant_track(0.2), constant_track(0.3)};
  FockConfig cfg{40, 5, 1e-8};
  TimeGrid grid{0.0, 1e-3, 20};
  Su11Params off = solve_swanson_bar(m, 0.0, {});
  off.phi += 0.02;
  off.chi -= 0.03;
  SwansonInvariantOptions io;
  io.oracle_stride = 5;
  io.oracle_guard = 20;
  io.allow_fallback = false;
  SwansonInvariantResult res = solve_swanson_invariant(m, off, grid, cfg, io);
  CHECK(res.max_hermiticity_residual < 1e-7);
}

TEST_CASE("invariant solver fallback path stays on the manifold when forced") {
  SwansonModel m{constant_track(1.0), constant_track(0.2), constant_track(0.3)};
  FockConfig cfg{40, 5, 1e-8};
  TimeGrid grid{0.0, 1e-3, 20};
  Su11Params root = solve_swanson_bar(m, 0.0, {});
  SwansonInvariantOptions io;
  io.oracle_stride = 5;
  io.oracle_guard = 20;
  io.oracle_tolerance = 0.0;  // unreachable: forces the re-minimization pass
  io.allow_fallback = true;
  SwansonInvariantResult res = solve_swanson_invariant(m, root, grid, cfg, io);
  CHECK(res.path == "fallback");
  CHECK(res.max_hermiticity_residual < 1e-6);
}

TEST_CASE("invariant quadratic map under a time-dependent drive") {
  SwansonModel m{constant_track(1.0), CoefficientTrack("0.2*cos(t)"),
                 CoefficientTrack("0.3*cos(t)")};
  FockConfig cfg{60, 5, 1e-8};
  TimeGrid grid{0.0, 1e-3, 300};
  Su11Params root = solve_swanson_bar(m, 0.0, {});
  SwansonInvariantOptions io;
  io.oracle_stride = 50;
  SwansonInvariantResult res = solve_swanson_invariant(m, root, grid, cfg, io);
  CHECK(res.max_hermiticity_residual < 1e-6);
  CHECK(res.max_w_dev < 1e-6);
  CHECK(res.max_v_dev < 1e-6);
}

TEST_CASE("dual-space map: Hermitian generator stays unitary") {
  LinearModel m = linear(1.0, 0.3, 0.3);  // Hermitian
  auto H = [&](double t) { return build_linear_hamiltonian(m, t, kCfg); };
  DysonMapSolution map =
      solve_schrodinger_like(H, OperatorMatrix::Identity(40, 40), kGrid, kCfg);
  OperatorMatrix rho = map.rho(kGrid.steps);
  CHECK((rho - OperatorMatrix::Identity(40, 40)).norm() < 1e-6);  // RK4 floor
}

TEST_CASE("dual-space map: metric frozen and generator doubled") {
  LinearModel m = linear(1.0, 0.2, 0.4);
  auto H = [&](double t) { return build_linear_hamiltonian(m, t, kCfg); };
  DysonMapSolution bar = build_bar_map_linear(m, kGrid, kCfg);
  DysonMapSolution map = solve_schrodinger_like(H, bar.eta(0), kGrid, kCfg);

  OperatorMatrix rho0 = map.rho(0);
  const int n = 20;  // deep guard: boundary defect travels inward
  double drift = 0.0, doubling = 0.0;
  for (int k = 0; k <= kGrid.steps; k += 25) {
    drift = std::max(drift, (map.rho(k) - rho0).topLeftCorner(n, n).norm() /
                                rho0.topLeftCorner(n, n).norm());
    OperatorMatrix h0 = H(kGrid.time(k));
    OperatorMatrix recon = h0 + kI * (map.eta_inverse(k) * map.eta_dot(k));
    doubling = std::max(doubling, (recon - 2.0 * h0).norm() / h0.norm());
  }
  CHECK(drift < 1e-8);
  CHECK(doubling < 1e-6);
}

TEST_CASE("dual-space map growth cap") {
  // a generator with a large anti-Hermitian part blows up the map norm
  LinearModel m = linear(Complex(0.0, 8.0), 0.0, 0.0);
  auto H = [&](double t) { return build_linear_hamiltonian(m, t, kCfg); };
  SchrodingerLikeOptions opts;
  opts.growth_cap = 1e6;
  TimeGrid grid{0.0, 1e-2, 1000};
  CHECK_THROWS_AS(
      solve_schrodinger_like(H, OperatorMatrix::Identity(40, 40), grid, kCfg, opts),
      std::overflow_error);
}

TEST_CASE("quasi-Hermiticity residual") {
  OperatorMatrix h = build_linear_hamiltonian(linear(1.0, 0.3, 0.3), 0.0, kCfg);
  OperatorMatrix eye = OperatorMatrix::Identity(40, 40);
  OperatorMatrix zero = OperatorMatrix::Zero(40, 40);
  CHECK(quasi_hermiticity_residual(h, eye, zero, kCfg) < 1e-14);

  // static intertwining of the constant-coefficient closed-form map
  LinearModel m = linear(1.0, 0.2, 0.4);
  DysonMapSolution bar = build_bar_map_linear(m, kGrid, kCfg);
  FockConfig deep = kCfg;
  deep.tail_guard = 20;
  CHECK(quasi_hermiticity_residual(build_linear_hamiltonian(m, 0.0, kCfg), bar.rho(0), zero,
                                   deep) < 1e-8);
}

TEST_CASE("map solutions expose sane diagnostics") {
  LinearModel m = linear(1.0, 0.2, 0.4);
  DysonMapSolution map = build_bar_map_linear(m, kGrid, kCfg);
  auto d = map.point_diagnostics(0);
  CHECK(d.eta_hermiticity < 1e-13);
  CHECK(d.rho_min_eigenvalue > 0.0);
  CHECK(d.eta_condition >= 1.0);
}

TEST_CASE("derivative stencils converge at their nominal orders") {
  // Hermiticity of the mapped generator is limited by the eta' stencil: the
  // plain centered difference scales at O(h^2), the five-point at O(h^4).
  // The probe model keeps the identity coefficient real for every gamma, so
  // nothing masks the stencil error; evaluation time is fixed across steps.
  LinearModel m{constant_track(1.0), CoefficientTrack("0.3*i"), CoefficientTrack("0.3*i")};
  auto residual_at = [&](double dt, int order) {
    const int k_eval = int(std::llround(0.064 / dt));
    TimeGrid grid{0.3, dt, 2 * k_eval};
    DysonMapSolution map = solve_gamma_ode(m, Complex(0.05, 0.0), grid, kCfg);
    map.set_fd_order(order);
    OperatorMatrix hp = build_linear_hamiltonian(m, grid.time(k_eval), kCfg) +
                        kI * (map.eta_inverse(k_eval) * map.eta_dot(k_eval));
    OperatorMatrix h = map.eta(k_eval) * hp * map.eta_inverse(k_eval);
    return hermiticity_residual_guarded(h, 20);
  };
  const double c1 = residual_at(8e-3, 2), c2 = residual_at(4e-3, 2);
  CHECK(c1 / c2 == doctest::Approx(4.0).epsilon(0.05));  // second order
  const double f1 = residual_at(8e-3, 4), f2 = residual_at(4e-3, 4);
  CHECK(f1 / f2 == doctest::Approx(16.0).epsilon(0.15));  // fourth order
}
