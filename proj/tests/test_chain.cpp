#include <doctest.h>

#include "dysonchain/chain.hpp"

using namespace dyson;

namespace {
const FockConfig kCfg{24, 5, 1e-8};
const TimeGrid kGrid{0.0, 1e-3, 200};

LinearModel linear(Complex w, Complex a, Complex b) {
  return {constant_track(w), constant_track(a), constant_track(b)};
}

std::vector<OperatorMatrix> sample_hamiltonian(const LinearModel& m, const TimeGrid& grid,
                                               const FockConfig& cfg) {
  std::vector<OperatorMatrix> out(grid.points());
  for (int k = 0; k <= grid.steps; ++k) out[k] = build_linear_hamiltonian(m, grid.time(k), cfg);
  return out;
}
}  // namespace

TEST_CASE("lift with a time-independent map changes nothing") {
  LinearModel m = linear(1.0, 0.2, 0.4);
  DysonMapSolution map = solve_gamma_ode(m, Complex(0.1, 0.0), kGrid, kCfg);  // stationary
  ChainNode base = make_base_node(sample_hamiltonian(m, kGrid, kCfg), kGrid, kCfg);
  ChainNode up = lift(base, map);
  CHECK(up.index == 1);
  CHECK((up.hamiltonian[50] - base.hamiltonian[50]).norm() < 1e-11);
  CHECK(hermiticity_residual_guarded(base.hermitian_counterpart[50], 10) < 1e-10);
}

TEST_CASE("lower then lift recovers the Hamiltonian exactly") {
  LinearModel m{constant_track(1.0), CoefficientTrack("0.2*sin(t)"),
                CoefficientTrack("0.4*sin(t)")};
  DysonMapSolution bar = build_bar_map_linear(m, kGrid, kCfg);
  ChainNode base = make_base_node(sample_hamiltonian(m, kGrid, kCfg), kGrid, kCfg);
  ChainNode down = lower(base, bar);
  CHECK(down.index == -1);
  ChainNode back = lift(down, bar);
  CHECK((back.hamiltonian[77] - base.hamiltonian[77]).norm() < 1e-12);
}

TEST_CASE("chain construction spans the requested levels") {
  LinearModel m{constant_track(1.0), CoefficientTrack("0.3*i"), CoefficientTrack("0.3*i")};
  std::map<int, DysonMapSolution> maps;
  auto tower = solve_gamma_tower(m, {Complex(0.05, 0.0), Complex(0.02, 0.0)}, kGrid, kCfg);
  maps.emplace(0, std::move(tower[0]));
  maps.emplace(1, std::move(tower[1]));
  maps.emplace(-1, build_bar_map_linear(m, kGrid, kCfg));
  ChainNode base = make_base_node(sample_hamiltonian(m, kGrid, kCfg), kGrid, kCfg);
  auto chain = build_chain(base, maps, -1, 2);
  CHECK(chain.size() == 4);
  CHECK(chain.at(-1).index == -1);
  CHECK(chain.at(2).index == 2);
  CHECK_FALSE(chain.at(0).hermitian_counterpart.empty());
  CHECK_FALSE(chain.at(1).hermitian_counterpart.empty());

  // recursion consistency: H_{k+1} - H_k = i eta^-1 eta' of the link map
  const DysonMapSolution& link0 = *chain.at(0).dyson;
  OperatorMatrix expected = kI * (link0.eta_inverse(60) * link0.eta_dot(60));
  CHECK((chain.at(1).hamiltonian[60] - chain.at(0).hamiltonian[60] - expected).norm() < 1e-12);

  // similarity: the counterpart shares its spectrum with the level above,
  // and Hermiticity forces that spectrum to be real
  Eigen::ComplexEigenSolver<OperatorMatrix> eh(chain.at(0).hermitian_counterpart[60]);
  Eigen::ComplexEigenSolver<OperatorMatrix> eH(chain.at(1).hamiltonian[60]);
  std::vector<double> ehs, eHs;
  double worst_im = 0.0;
  for (int i = 0; i < kCfg.dim; ++i) {
    ehs.push_back(eh.eigenvalues()(i).real());
    eHs.push_back(eH.eigenvalues()(i).real());
    worst_im = std::max(worst_im, std::abs(eH.eigenvalues()(i).imag()));
  }
  std::sort(ehs.begin(), ehs.end());
  std::sort(eHs.begin(), eHs.end());
  double worst = 0.0;
  for (int i = 0; i < kCfg.dim; ++i) worst = std::max(worst, std::abs(ehs[i] - eHs[i]));
  CHECK(worst < 1e-8);
  CHECK(worst_im < 1e-8);
}

TEST_CASE("chain construction rejects missing maps and bad depths") {
  LinearModel m = linear(1.0, 0.1, 0.2);
  ChainNode base = make_base_node(sample_hamiltonian(m, kGrid, kCfg), kGrid, kCfg);
  CHECK_THROWS_AS(build_chain(base, {}, -1, 0), std::invalid_argument);
  CHECK_THROWS_AS(build_chain(base, {}, 1, 2), std::invalid_argument);
  auto single = build_chain(base, {}, 0, 0);
  CHECK(single.size() == 1);
}

TEST_CASE("gauge analysis: identical counterparts give the trivial global link") {
  LinearModel m = linear(1.0, 0.2, 0.4);
  auto h = sample_hamiltonian(m, kGrid, kCfg);  // any Hermitian-ish family works here
  GaugeLink link = analyze_gauge(h, h, kGrid, 5);
  CHECK(link.kind == GaugeLink::Kind::kGlobal);
  CHECK(std::abs(link.c_track[100]) < 1e-14);
  CHECK(std::abs(link.gauge_factor(150) - Complex(1, 0)) < 1e-13);
  CHECK(gauge_ode_residual(link, h, h, 5) < 1e-10);
}

TEST_CASE("gauge analysis detects scalar offsets and integrates the phase") {
  LinearModel m = linear(1.0, 0.3, 0.3);
  auto h_low = sample_hamiltonian(m, kGrid, kCfg);
  auto h_up = h_low;
  for (int k = 0; k <= kGrid.steps; ++k) {
    const double t = kGrid.time(k);
    h_up[k] += (0.25 * std::cos(3.0 * t)) * OperatorMatrix::Identity(kCfg.dim, kCfg.dim);
  }
  GaugeLink link = analyze_gauge(h_low, h_up, kGrid, 5);
  REQUIRE(link.kind == GaugeLink::Kind::kGlobal);
  const double t = kGrid.t1();
  const double phase_oracle = 0.25 * std::sin(3.0 * t) / 3.0;  // integral of the offset
  CHECK(std::abs(link.phase[kGrid.steps] - Complex(phase_oracle, 0)) < 1e-12);
  CHECK(gauge_ode_residual(link, h_low, h_up, 5) < 1e-6);

  // global links leave the eigenvectors untouched
  OperatorMatrix sym_low = 0.5 * (h_low[100] + h_low[100].adjoint());
  OperatorMatrix sym_up = 0.5 * (h_up[100] + h_up[100].adjoint());
  Eigen::SelfAdjointEigenSolver<OperatorMatrix> el(sym_low), eu(sym_up);
  OperatorMatrix overlap = (el.eigenvectors().adjoint() * eu.eigenvectors()).cwiseAbs();
  CHECK((overlap - OperatorMatrix::Identity(kCfg.dim, kCfg.dim)).topLeftCorner(19, 19).norm() <
        1e-8);
}

TEST_CASE("corrupting the gauge phase is detected") {
  // small space + order-one offset so the sensitivity floor is meaningful
  FockConfig cfg{16, 3, 1e-8};
  LinearModel m = linear(1.0, 0.2, 0.2);
  TimeGrid grid{0.0, 1e-3, 200};
  std::vector<OperatorMatrix> h_low(grid.points()), h_up(grid.points());
  for (int k = 0; k <= grid.steps; ++k) {
    h_low[k] = build_linear_hamiltonian(m, grid.time(k), cfg);
    h_up[k] = h_low[k] + 1.5 * OperatorMatrix::Identity(16, 16);
  }
  GaugeLink link = analyze_gauge(h_low, h_up, grid, 3);
  REQUIRE(link.kind == GaugeLink::Kind::kGlobal);
  CHECK(gauge_ode_residual(link, h_low, h_up, 3) < 1e-6);
  GaugeLink corrupted = link;
  for (auto& p : corrupted.phase) p *= 1.1;
  CHECK(gauge_ode_residual(corrupted, h_low, h_up, 3) > 1e-3);
}

TEST_CASE("non-scalar differences are classified local") {
  LinearModel m = linear(1.0, 0.3, 0.3);
  auto h_low = sample_hamiltonian(m, kGrid, kCfg);
  auto h_up = h_low;
  auto [a, ad] = build_ladder(kCfg);
  for (auto& h : h_up) h += 0.05 * (a + ad);
  GaugeLink link = analyze_gauge(h_low, h_up, kGrid, 5);
  CHECK(link.kind == GaugeLink::Kind::kLocal);
  CHECK_THROWS_AS(gauge_ode_residual(link, h_low, h_up, 5), std::invalid_argument);
}

TEST_CASE("collapse probe: Hermitian base sits at the integrator floor") {
  FockConfig cfg{12, 3, 1e-8};
  LinearModel m = linear(1.0, 0.0, 0.0);
  auto H = [&](double t) { return build_linear_hamiltonian(m, t, cfg); };
  TimeGrid grid{0.0, 1e-3, 100};
  CollapseReport rep = collapse_check(H, OperatorMatrix::Identity(12, 12), grid, cfg, 2);
  CHECK(rep.max_deviation < 1e-7);  // pure RK4 floor at the top rotation rate
  CHECK(rep.per_level.size() == 4);
}

TEST_CASE("collapse probe under drive and its mutation sensitivity") {
  LinearModel m{constant_track(1.0), CoefficientTrack("0.2*sin(t)"),
                CoefficientTrack("0.4*sin(t)")};
  auto H = [&](double t) { return build_linear_hamiltonian(m, t, kCfg); };
  TimeGrid grid{0.0, 1e-3, 250};
  OperatorMatrix eta0 = build_bar_map_linear(m, grid, kCfg).eta(0);
  CollapseReport good = collapse_check(H, eta0, grid, kCfg, 2);
  CHECK(good.max_deviation < 1e-6);
  CollapseReport bad = collapse_check(H, eta0, grid, kCfg, 2, ChainOptions{-1});
  CHECK(bad.max_deviation > 1e-3);
}
