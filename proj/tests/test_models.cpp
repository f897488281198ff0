#include <doctest.h>

#include <random>

#include "dysonchain/models.hpp"

using namespace dyson;

namespace {
const FockConfig kCfg{40, 5, 1e-8};

LinearModel linear(Complex w, Complex a, Complex b) {
  return {constant_track(w), constant_track(a), constant_track(b)};
}
SwansonModel swanson(Complex w, Complex a, Complex b) {
  return {constant_track(w), constant_track(a), constant_track(b)};
}
}  // namespace

TEST_CASE("linear Hamiltonian structure") {
  FockConfig cfg{4, 0, 1e-8};
  OperatorMatrix h = build_linear_hamiltonian(linear(1, 0, 0), 0.0, cfg);
  CHECK(std::abs(h(0, 0)) < 1e-15);
  CHECK(std::abs(h(1, 1) - Complex(1, 0)) < 1e-15);
  CHECK(std::abs(h(2, 2) - Complex(2, 0)) < 1e-14);

  // anti-Hermitian part of the drive: H - H^dag = (alpha - beta^*)(a - a^dag)
  OperatorMatrix g = build_linear_hamiltonian(linear(1, 0.2, 0.4), 0.0, kCfg);
  OperatorMatrix anti = g - g.adjoint();
  for (int m = 0; m < 6; ++m) {
    CHECK(std::abs(anti(m, m + 1) - Complex(-0.2 * std::sqrt(m + 1.0), 0)) < 1e-14);
    CHECK(std::abs(anti(m + 1, m) - Complex(0.2 * std::sqrt(m + 1.0), 0)) < 1e-14);
  }
}

TEST_CASE("Hermitian drive gives zero residual") {
  OperatorMatrix h = build_linear_hamiltonian(linear(1.0, Complex(0.3, 0.1), Complex(0.3, -0.1)),
                                              0.0, kCfg);
  CHECK(hermiticity_residual(h, kCfg) < 1e-15);
}

TEST_CASE("Swanson Hamiltonian structure") {
  FockConfig cfg{4, 0, 1e-8};
  OperatorMatrix h = build_swanson_hamiltonian(swanson(1, 0, 0), 0.0, cfg);
  CHECK(std::abs(h(0, 0) - Complex(0.5, 0)) < 1e-15);
  CHECK(std::abs(h(1, 1) - Complex(1.5, 0)) < 1e-15);
  CHECK(std::abs(h(2, 2) - Complex(2.5, 0)) < 1e-14);

  OperatorMatrix hr = build_swanson_hamiltonian(swanson(1, 0.25, 0.25), 0.0, kCfg);
  CHECK(hermiticity_residual(hr, kCfg) < 1e-15);
}

TEST_CASE("quasi-Hermitian Swanson spectrum is real in the interior") {
  FockConfig cfg{60, 5, 1e-8};
  OperatorMatrix h = build_swanson_hamiltonian(swanson(1, 0.2, 0.3), 0.0, cfg);
  Eigen::ComplexEigenSolver<OperatorMatrix> es(h);
  std::vector<double> imags;
  std::vector<std::pair<double, double>> eigs;
  for (int i = 0; i < 60; ++i) {
    eigs.emplace_back(es.eigenvalues()(i).real(), std::abs(es.eigenvalues()(i).imag()));
  }
  std::sort(eigs.begin(), eigs.end());
  double worst = 0.0;
  for (int i = 0; i < 40; ++i) worst = std::max(worst, eigs[i].second);
  CHECK(worst < 1e-8);
}

TEST_CASE("builders are linear in the drive coefficients") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int trial = 0; trial < 4; ++trial) {
    const Complex w(u(rng), u(rng)), a(u(rng), u(rng)), ap(u(rng), u(rng)), b(u(rng), u(rng));
    OperatorMatrix lhs = build_linear_hamiltonian(linear(w, a + ap, b), 0.0, kCfg);
    OperatorMatrix rhs = build_linear_hamiltonian(linear(w, a, b), 0.0, kCfg) +
                         build_linear_hamiltonian(linear(0, ap, 0), 0.0, kCfg);
    CHECK((lhs - rhs).norm() < 1e-13);
  }
}

TEST_CASE("hermiticity_residual reference points") {
  CHECK(hermiticity_residual(OperatorMatrix::Identity(40, 40), kCfg) == 0.0);
  OperatorMatrix anti = kI * OperatorMatrix::Identity(40, 40);
  CHECK(hermiticity_residual(anti, kCfg) == doctest::Approx(2.0).epsilon(1e-13));
  // symmetrization kills the residual for arbitrary input
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(-1, 1);
  OperatorMatrix m(40, 40);
  for (int i = 0; i < 40; ++i)
    for (int j = 0; j < 40; ++j) m(i, j) = Complex(u(rng), u(rng));
  CHECK(hermiticity_residual(OperatorMatrix(m + m.adjoint()), kCfg) < 1e-14);
}

TEST_CASE("parity diagnostics for the linear model") {
  LinearModel pt{CoefficientTrack("cos(t)"), CoefficientTrack("sin(t)"),
                 CoefficientTrack("sin(t)")};
  auto rep = pt_symmetry_check(pt, 1.0, 64);
  CHECK(rep.pass);
  CHECK(rep.max_omega_deviation < 1e-12);

  LinearModel broken{CoefficientTrack("1+t"), CoefficientTrack("sin(t)"),
                     CoefficientTrack("sin(t)")};
  auto rep2 = pt_symmetry_check(broken, 1.0, 64);
  CHECK_FALSE(rep2.pass);
  CHECK(rep2.max_omega_deviation == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("parity diagnostics for the quadratic model") {
  SwansonModel even{CoefficientTrack("cos(t)"), CoefficientTrack("0.2*cos(t)"),
                    CoefficientTrack("0.3*cos(2*t)")};
  CHECK(pt_symmetry_check(even, 1.0, 64).pass);
  SwansonModel odd{CoefficientTrack("cos(t)"), CoefficientTrack("0.2*sin(t)"),
                   CoefficientTrack("0.3*cos(t)")};
  CHECK_FALSE(pt_symmetry_check(odd, 1.0, 64).pass);
}
