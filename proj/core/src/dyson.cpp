#include "dysonchain/dyson.hpp"

#include <array>
#include <cmath>
#include <map>
#include <sstream>

#include "dysonchain/numerics.hpp"

namespace dyson {

const char* map_family_name(MapFamily f) {
  switch (f) {
    case MapFamily::kBarDisplacement: return "bar_closed_form";
    case MapFamily::kGammaOde: return "gamma_ode";
    case MapFamily::kSu11Stationary: return "su11_stationary";
    case MapFamily::kSu11Invariant: return "su11_invariant";
    case MapFamily::kMatrixPropagated: return "matrix_propagated";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// DysonMapSolution
// ---------------------------------------------------------------------------

struct DysonMapSolution::Cache {
  std::mutex mutex;
  std::map<int, OperatorMatrix> eta, eta_inv;
  static constexpr size_t kCapacity = 24;

  OperatorMatrix fetch(std::map<int, OperatorMatrix>& store, int key,
                       const std::function<OperatorMatrix()>& make) {
    {
      std::lock_guard<std::mutex> lock(mutex);
      auto it = store.find(key);
      if (it != store.end()) return it->second;
    }
    OperatorMatrix m = make();
    std::lock_guard<std::mutex> lock(mutex);
    if (store.size() >= kCapacity) store.erase(store.begin());
    store.emplace(key, m);
    return m;
  }
};

class MapBuilder {
 public:
  static DysonMapSolution displacement(MapFamily family, const TimeGrid& grid,
                                       const FockConfig& fock, std::vector<Complex> gamma_half,
                                       std::vector<Complex> gamma_dot_half,
                                       std::function<Complex(double, Complex)> rhs,
                                       std::string note) {
    DysonMapSolution s;
    s.family_ = family;
    s.grid_ = grid;
    s.fock_ = fock;
    s.gamma_half_ = std::move(gamma_half);
    s.gamma_dot_half_ = std::move(gamma_dot_half);
    s.gamma_rhs_ = std::move(rhs);
    s.note_ = std::move(note);
    s.cache_ = std::make_shared<DysonMapSolution::Cache>();
    return s;
  }
  static DysonMapSolution su11(MapFamily family, const TimeGrid& grid, const FockConfig& fock,
                               std::vector<Eigen::Vector3d> chart_half, std::string note) {
    DysonMapSolution s;
    s.family_ = family;
    s.grid_ = grid;
    s.fock_ = fock;
    s.chart_half_ = std::move(chart_half);
    s.note_ = std::move(note);
    s.cache_ = std::make_shared<DysonMapSolution::Cache>();
    return s;
  }
  static DysonMapSolution matrices(const TimeGrid& grid, const FockConfig& fock,
                                   std::vector<OperatorMatrix> eta_ext, std::string note) {
    DysonMapSolution s;
    s.family_ = MapFamily::kMatrixPropagated;
    s.grid_ = grid;
    s.fock_ = fock;
    s.eta_ext_ = std::move(eta_ext);
    s.note_ = std::move(note);
    return s;
  }
};

void DysonMapSolution::set_fd_order(int order) {
  if (order != 2 && order != 4) throw std::invalid_argument("fd_order must be 2 or 4");
  fd_order_ = order;
}

OperatorMatrix DysonMapSolution::realize_eta_half(int h) const {
  if (family_ == MapFamily::kMatrixPropagated) {
    throw std::logic_error("matrix-propagated maps have no half-grid realization");
  }
  if (cache_) {
    return cache_->fetch(cache_->eta, h, [&] { return realize_eta_half_impl(h); });
  }
  return realize_eta_half_impl(h);
}

OperatorMatrix DysonMapSolution::realize_eta_half_impl(int h) const {
  if (!chart_half_.empty()) {
    const Eigen::Vector3d& c = chart_half_.at(h);
    Su11Params p;
    p.phi = c[0];
    p.chi = c[1];
    p.varphi = c[2];
    p.lambda_plus = -p.phi * std::exp(-kI * p.varphi);
    p.lambda_minus = -p.phi * std::exp(kI * p.varphi);
    p.lambda_zero = p.phi * p.phi - p.chi;
    return su11_product(p, fock_);
  }
  const Complex g = gamma_half_.at(h);
  auto [a, ad] = build_ladder(fock_);
  return matrix_exp(g * a + std::conj(g) * ad);
}

OperatorMatrix DysonMapSolution::realize_eta_inverse_half(int h) const {
  if (cache_) {
    return cache_->fetch(cache_->eta_inv, h, [&] { return realize_eta_inverse_half_impl(h); });
  }
  return realize_eta_inverse_half_impl(h);
}

OperatorMatrix DysonMapSolution::realize_eta_inverse_half_impl(int h) const {
  if (!chart_half_.empty()) {
    const Eigen::Vector3d& c = chart_half_.at(h);
    const double phi = c[0], chi = c[1], varphi = c[2];
    const double l0 = phi * phi - chi;
    if (l0 <= 0) throw std::domain_error("su11 map: lambda_0 <= 0");
    auto gen = su11_generators(fock_);
    OperatorMatrix mid = OperatorMatrix::Zero(fock_.dim, fock_.dim);
    const double lnl0 = std::log(l0);
    for (int m = 0; m < fock_.dim; ++m) mid(m, m) = std::exp(-lnl0 * (0.5 * m + 0.25));
    const Complex lp = -phi * std::exp(-kI * varphi);
    const Complex lm = -phi * std::exp(kI * varphi);
    return matrix_exp(-lm * gen.k_minus) * mid * matrix_exp(-lp * gen.k_plus);
  }
  const Complex g = gamma_half_.at(h);
  auto [a, ad] = build_ladder(fock_);
  return matrix_exp(-(g * a + std::conj(g) * ad));
}

OperatorMatrix DysonMapSolution::eta(int k) const {
  if (family_ == MapFamily::kMatrixPropagated) return eta_ext_.at(k + 2);
  return realize_eta_half(half_index(k));
}

OperatorMatrix DysonMapSolution::eta_inverse(int k) const {
  if (family_ == MapFamily::kMatrixPropagated) {
    return eta_ext_.at(k + 2).partialPivLu().inverse();
  }
  return realize_eta_inverse_half(half_index(k));
}

OperatorMatrix DysonMapSolution::eta_dot(int k) const {
  auto at = [&](int off) { return eta(k + off); };
  if (fd_order_ == 2) return fd_derivative_3pt<OperatorMatrix>(at, grid_.dt);
  return fd_derivative_5pt<OperatorMatrix>(at, grid_.dt);
}

OperatorMatrix DysonMapSolution::eta_dot_half(int h) const {
  auto at = [&](int off) { return realize_eta_half(h + off); };
  if (fd_order_ == 2) return fd_derivative_3pt<OperatorMatrix>(at, grid_.dt / 2.0);
  return fd_derivative_5pt<OperatorMatrix>(at, grid_.dt / 2.0);
}

OperatorMatrix DysonMapSolution::rho(int k) const {
  OperatorMatrix e = eta(k);
  return e.adjoint() * e;
}

Complex DysonMapSolution::gamma(int k) const { return gamma_half(half_index(k)); }

Complex DysonMapSolution::gamma_half(int h) const {
  if (gamma_half_.empty()) throw std::logic_error("not a displacement-family map");
  return gamma_half_.at(h);
}

Complex DysonMapSolution::gamma_dot(int k) const {
  const int h = half_index(k);
  if (!gamma_dot_half_.empty()) return gamma_dot_half_.at(h);
  if (gamma_rhs_) return gamma_rhs_(grid_.time(k), gamma_half_.at(h));
  auto at = [&](int off) { return gamma_half_.at(h + off); };
  return fd_derivative_5pt<Complex>(at, grid_.dt / 2.0);
}

Eigen::Vector3d DysonMapSolution::su11_chart(int k) const { return su11_chart_half(half_index(k)); }

Eigen::Vector3d DysonMapSolution::su11_chart_half(int h) const {
  if (chart_half_.empty()) throw std::logic_error("not an SU(1,1)-family map");
  return chart_half_.at(h);
}

DysonMapSolution::PointDiagnostics DysonMapSolution::point_diagnostics(int k) const {
  PointDiagnostics d;
  OperatorMatrix e = eta(k);
  d.eta_norm = e.norm();
  Eigen::JacobiSVD<OperatorMatrix> svd(e);
  const auto& sv = svd.singularValues();
  d.eta_condition = sv(0) / sv(sv.size() - 1);
  d.eta_hermiticity = (e - e.adjoint()).norm() / std::max(e.norm(), 1e-300);
  OperatorMatrix r = e.adjoint() * e;
  Eigen::SelfAdjointEigenSolver<OperatorMatrix> es(0.5 * (r + r.adjoint()));
  d.rho_min_eigenvalue = es.eigenvalues().minCoeff();
  return d;
}

// ---------------------------------------------------------------------------
// linear-model maps
// ---------------------------------------------------------------------------

Complex bar_gamma(const LinearModel& model, double t) {
  const Complex w = model.omega(t);
  if (std::abs(w) == 0.0) throw std::domain_error("bar_gamma: omega_t = 0");
  return (std::conj(model.beta(t)) - model.alpha(t)) / (2.0 * w);
}

Complex bar_f(const LinearModel& model, double t) {
  const Complex w = model.omega(t);
  if (std::abs(w) == 0.0) throw std::domain_error("bar_f: omega_t = 0");
  const Complex a = model.alpha(t), b = model.beta(t);
  return (std::norm(a) + std::norm(b) - 2.0 * a * b) / (4.0 * w);
}

double bar_side_condition(const LinearModel& model, double t) {
  return std::abs((model.alpha(t) * model.beta(t)).imag());
}

DysonMapSolution build_bar_map_linear(const LinearModel& model, const TimeGrid& grid,
                                      const FockConfig& config) {
  grid.validate();
  config.validate();
  const int half_points = 2 * grid.steps + 9;
  std::vector<Complex> g(half_points);
  double worst_side = 0.0;
  for (int h = 0; h < half_points; ++h) {
    const double t = grid.t0 + (h - 4) * grid.dt / 2.0;
    g[h] = bar_gamma(model, t);
    worst_side = std::max(worst_side, bar_side_condition(model, t));
  }
  std::ostringstream note;
  if (worst_side > 1e-12) {
    note << "warning: Im(alpha beta) reaches " << worst_side
         << "; the mapped generator cannot be Hermitian there";
  }
  return MapBuilder::displacement(MapFamily::kBarDisplacement, grid, config, std::move(g), {},
                                  nullptr, note.str());
}

namespace {

// RK4 over the extended half grid, with a doubled-step local error monitor.
// rhs: (t, y) -> dy/dt on a State supporting Eigen-style arithmetic.
template <class State, class Rhs>
std::vector<State> integrate_half_grid(Rhs&& rhs, const TimeGrid& grid, const State& y0,
                                       double error_cap, const char* who) {
  const int half_points = 2 * grid.steps + 9;
  const int idx0 = 4;  // index of grid.t0
  const double h = grid.dt / 2.0;
  std::vector<State> ys(half_points);
  ys[idx0] = y0;
  for (int k = idx0; k + 1 < half_points; ++k) {
    const double t = grid.t0 + (k - idx0) * h;
    ys[k + 1] = rk4_step(rhs, t, ys[k], h);
    if (error_cap > 0 && k > idx0 && (k - idx0) % 2 == 1) {
      State full = rk4_step(rhs, t - h, ys[k - 1], 2.0 * h);
      const double est = double(((ys[k + 1] - full) / 15.0).norm());
      if (est > error_cap) {
        throw std::runtime_error(std::string(who) + ": local error estimate above cap");
      }
    }
  }
  for (int k = idx0; k > 0; --k) {
    const double t = grid.t0 + (k - idx0) * h;
    ys[k - 1] = rk4_step(rhs, t, ys[k], -h);
  }
  return ys;
}

// complex scalar wrapper so integrate_half_grid can use .norm()
struct C1 {
  Complex v{};
  C1() = default;
  C1(Complex c) : v(c) {}
  C1 operator+(const C1& o) const { return {v + o.v}; }
  C1 operator-(const C1& o) const { return {v - o.v}; }
  C1 operator/(double s) const { return {v / s}; }
  friend C1 operator*(double s, const C1& a) { return {s * a.v}; }
  double norm() const { return std::abs(v); }
};

}  // namespace

DysonMapSolution solve_gamma_ode(const LinearModel& model, Complex gamma0, const TimeGrid& grid,
                                 const FockConfig& config) {
  grid.validate();
  config.validate();
  auto rhs_fn = [model](double t, Complex g) {
    return kI * model.omega(t) * g + kI * (model.alpha(t) - std::conj(model.beta(t))) / 2.0;
  };
  auto rhs = [&](double t, const C1& y) { return C1(rhs_fn(t, y.v)); };
  auto ys = integrate_half_grid(rhs, grid, C1(gamma0), 1e-10, "solve_gamma_ode");
  std::vector<Complex> g(ys.size()), gdot(ys.size());
  for (size_t h = 0; h < ys.size(); ++h) {
    g[h] = ys[h].v;
    gdot[h] = rhs_fn(grid.t0 + (double(h) - 4.0) * grid.dt / 2.0, ys[h].v);
  }
  return MapBuilder::displacement(MapFamily::kGammaOde, grid, config, std::move(g),
                                  std::move(gdot), rhs_fn, "");
}

HermitianCoefficients linear_hermitian_coeffs(const LinearModel& model,
                                              const DysonMapSolution& map) {
  const TimeGrid& grid = map.grid();
  HermitianCoefficients out;
  out.u.resize(grid.points());
  out.v.resize(grid.points());
  out.f.resize(grid.points());
  for (int k = 0; k <= grid.steps; ++k) {
    const double t = grid.time(k);
    const Complex w = model.omega(t), a = model.alpha(t), b = model.beta(t);
    const Complex g = map.gamma(k), gd = map.gamma_dot(k);
    out.u[k] = w * g + a + kI * gd;
    out.v[k] = -w * std::conj(g) + b + kI * std::conj(gd);
    out.f[k] = -w * std::norm(g) - a * std::conj(g) + b * g +
               0.5 * kI * (g * std::conj(gd) - std::conj(g) * gd);
    out.max_v_minus_u_conj = std::max(out.max_v_minus_u_conj,
                                      std::abs(out.v[k] - std::conj(out.u[k])));
    out.max_im_f = std::max(out.max_im_f, std::abs(out.f[k].imag()));
  }
  return out;
}

std::vector<DysonMapSolution> solve_gamma_tower(const LinearModel& model,
                                                const std::vector<Complex>& gamma0_per_level,
                                                const TimeGrid& grid, const FockConfig& config) {
  grid.validate();
  config.validate();
  const int levels = int(gamma0_per_level.size());
  if (levels == 0) return {};
  using Vec = Eigen::VectorXcd;

  // effective per-level drive: level j+1 sees (alpha_j + i gdot_j, beta_j + i gdot_j^*)
  auto rhs = [&](double t, const Vec& y) {
    Vec dy(levels);
    Complex aj = model.alpha(t), bj = model.beta(t);
    const Complex w = model.omega(t);
    for (int j = 0; j < levels; ++j) {
      const Complex gd = kI * w * y[j] + kI * (aj - std::conj(bj)) / 2.0;
      dy[j] = gd;
      aj = aj + kI * gd;
      bj = bj + kI * std::conj(gd);
    }
    return dy;
  };
  Vec y0(levels);
  for (int j = 0; j < levels; ++j) y0[j] = gamma0_per_level[j];
  auto ys = integrate_half_grid(rhs, grid, y0, 1e-10, "solve_gamma_tower");

  std::vector<DysonMapSolution> maps;
  for (int j = 0; j < levels; ++j) {
    std::vector<Complex> g(ys.size()), gdot(ys.size());
    for (size_t h = 0; h < ys.size(); ++h) {
      g[h] = ys[h][j];
      gdot[h] = rhs(grid.t0 + (double(h) - 4.0) * grid.dt / 2.0, ys[h])[j];
    }
    maps.push_back(MapBuilder::displacement(MapFamily::kGammaOde, grid, config, std::move(g),
                                            std::move(gdot), nullptr,
                                            "tower level " + std::to_string(j)));
  }
  return maps;
}

// ---------------------------------------------------------------------------
// Swanson stationary root
// ---------------------------------------------------------------------------

namespace {

struct Polar {
  double mag, arg;
};
Polar polar_of(Complex c) { return {std::abs(c), std::arg(c)}; }

// (phi, chi) of the factorization chart at fixed epsilon; abs_mu may pass
// through negative values during a Newton iteration (phi flips sign, which is
// the varphi + pi point of the same chart).
void chart_phi_chi(double epsilon, double abs_mu, double* phi, double* chi) {
  const double w = epsilon * epsilon - 4.0 * abs_mu * abs_mu;
  double g;
  if (std::abs(w) < 1e-8) {
    g = 1.0 + w / 3.0 - w * w / 45.0;
  } else if (w > 0) {
    const double x = std::sqrt(w);
    g = x / std::tanh(x);
  } else {
    const double x = std::sqrt(-w);
    g = x / std::tan(x);
  }
  const double gm = 1.0 - g / epsilon;
  *phi = (2.0 * abs_mu / epsilon) / gm;
  *chi = 2.0 / gm - 1.0;
}

}  // namespace

Eigen::Vector2d swanson_stationary_residuals(Complex omega, Complex alpha, Complex beta,
                                             double epsilon, double abs_mu, double varphi) {
  const Polar w = polar_of(omega), a = polar_of(alpha), b = polar_of(beta);
  double phi, chi;
  chart_phi_chi(epsilon, abs_mu, &phi, &chi);
  Eigen::Vector2d r;
  r[0] = (w.mag * phi * std::sin(w.arg) + a.mag * std::sin(varphi - a.arg)) * (1.0 - phi * phi) +
         b.mag * ((2.0 * chi - 1.0) * phi * phi - chi * chi) * std::sin(varphi + b.arg);
  r[1] = (chi - 1.0) * phi * w.mag * std::cos(w.arg) +
         a.mag * (1.0 - phi * phi) * std::cos(varphi - a.arg) +
         b.mag * (phi * phi - chi * chi) * std::cos(varphi + b.arg);
  return r;
}

Su11Params solve_swanson_bar(const SwansonModel& model, double t, const SwansonRootOptions& opts) {
  const Complex w = model.omega(t), a = model.alpha(t), b = model.beta(t);
  if (std::abs(a) + std::abs(b) < 1e-15) {
    // drive-free limit: mu = 0 solves for any epsilon, and the phase
    // direction is undetermined (the Jacobian is singular there)
    return gauss_decompose(opts.epsilon, Complex(0, 0));
  }
  Eigen::Vector2d x(opts.abs_mu0, opts.varphi0);
  for (int it = 0; it < opts.max_iterations; ++it) {
    Eigen::Vector2d r = swanson_stationary_residuals(w, a, b, opts.epsilon, x[0], x[1]);
    if (r.cwiseAbs().maxCoeff() < opts.tolerance) {
      return gauss_decompose(opts.epsilon, x[0] * std::exp(kI * x[1]));
    }
    Eigen::Matrix2d jac;
    const double h = 1e-7;
    for (int j = 0; j < 2; ++j) {
      Eigen::Vector2d xp = x;
      xp[j] += h;
      jac.col(j) = (swanson_stationary_residuals(w, a, b, opts.epsilon, xp[0], xp[1]) - r) / h;
    }
    Eigen::FullPivLU<Eigen::Matrix2d> lu(jac);
    if (!lu.isInvertible()) {
      throw std::runtime_error("solve_swanson_bar: singular Jacobian near parameter degeneracy");
    }
    x -= lu.solve(r);
  }
  throw std::runtime_error("solve_swanson_bar: Newton did not converge");
}

// ---------------------------------------------------------------------------
// Swanson invariant map
// ---------------------------------------------------------------------------

SwansonCounterpartCoeffs swanson_invariant_coeffs(Complex omega, Complex alpha, Complex beta,
                                                  double phi, double chi, double varphi) {
  const Polar w = polar_of(omega), a = polar_of(alpha), b = polar_of(beta);
  SwansonCounterpartCoeffs c;
  c.w = w.mag * std::cos(w.arg) +
        2.0 * phi / (1.0 - chi) *
            (a.mag * std::cos(varphi - a.arg) - b.mag * std::cos(varphi + b.arg));
  c.v = (a.mag * std::exp(kI * a.arg) - b.mag * chi * std::exp(-kI * b.arg) -
         kI * w.mag * phi * std::sin(w.arg) * std::exp(kI * varphi)) /
        (1.0 - chi);
  return c;
}

namespace {

// mapped-generator coefficient of (a^dag a + 1/2) from conjugation alone,
// in the factorization chart
Complex su11_conjugated_w(Complex omega, Complex alpha, Complex beta, double phi, double chi,
                          double varphi) {
  const Complex eiv = std::exp(kI * varphi);
  return (omega * (chi + phi * phi) -
          2.0 * phi * (alpha / eiv + beta * chi * eiv)) /
         (chi - phi * phi);
}

struct InvariantRhs {
  const SwansonModel* model;

  Eigen::Vector3d operator()(double t, const Eigen::Vector3d& y) const {
    const double phi = y[0], chi = y[1], varphi = y[2];
    const Complex om = model->omega(t), al = model->alpha(t), be = model->beta(t);
    const Polar w = polar_of(om), a = polar_of(al), b = polar_of(be);
    if (std::abs(chi - 1.0) < 1e-9) {
      throw std::runtime_error("solve_swanson_invariant: chi -> 1 singular denominator");
    }
    const double bracket_phi =
        (w.mag * phi * std::sin(w.arg) + a.mag * std::sin(varphi - a.arg)) * (1.0 - phi * phi) +
        b.mag * ((2.0 * chi - 1.0) * phi * phi - chi * chi) * std::sin(varphi + b.arg);
    const double bracket_varphi = a.mag * (1.0 - phi * phi) * std::cos(varphi - a.arg) +
                                  b.mag * (phi * phi - chi * chi) * std::cos(varphi + b.arg);
    Eigen::Vector3d dy;
    dy[0] = 2.0 / (chi - 1.0) * bracket_phi;
    if (std::abs(phi) < 1e-13) {
      if (std::abs(bracket_varphi) > 1e-10) {
        throw std::runtime_error("solve_swanson_invariant: phi -> 0 with nonzero drive");
      }
      dy[2] = 2.0 * w.mag * std::cos(w.arg);
    } else {
      dy[2] = 2.0 / ((chi - 1.0) * phi) * bracket_varphi + 2.0 * w.mag * std::cos(w.arg);
    }
    // K0-channel Hermiticity fixes the remaining derivative:
    // Im(W_conj) - chi'/(2 lambda_0) = 0
    const double l0 = phi * phi - chi;
    if (l0 <= 0) throw std::domain_error("solve_swanson_invariant: lambda_0 <= 0");
    dy[1] = 2.0 * l0 * su11_conjugated_w(om, al, be, phi, chi, varphi).imag();
    return dy;
  }
};

struct CoeffTriple {
  Complex w, v, t;
};

CoeffTriple extract_quadratic_coeffs(const OperatorMatrix& m) {
  CoeffTriple c;
  c.w = m(1, 1) - m(0, 0);
  c.v = m(0, 2) / std::sqrt(2.0);
  c.t = m(2, 0) / std::sqrt(2.0);
  return c;
}

}  // namespace

SwansonInvariantResult solve_swanson_invariant(const SwansonModel& model, const Su11Params& init,
                                               const TimeGrid& grid, const FockConfig& config,
                                               const SwansonInvariantOptions& opts) {
  grid.validate();
  config.validate();
  InvariantRhs rhs{&model};
  Eigen::Vector3d y0(init.phi, init.chi, init.varphi);
  auto ys = integrate_half_grid(rhs, grid, y0, -1.0, "solve_swanson_invariant");

  SwansonInvariantResult res{
      MapBuilder::su11(MapFamily::kSu11Invariant, grid, config, std::move(ys), "path=ode"),
      0.0, 0.0, 0.0, "ode"};

  auto run_oracle = [&](DysonMapSolution& map) {
    double worst = 0.0, wdev = 0.0, vdev = 0.0;
    for (int k = 0; k <= grid.steps; k += opts.oracle_stride) {
      const double t = grid.time(k);
      OperatorMatrix h = map.eta(k) * build_swanson_hamiltonian(model, t, config) *
                             map.eta_inverse(k) +
                         kI * map.eta_dot(k) * map.eta_inverse(k);
      worst = std::max(worst, hermiticity_residual_guarded(h, opts.oracle_guard));
      const int n = config.dim - opts.oracle_guard;
      CoeffTriple c = extract_quadratic_coeffs(h.topLeftCorner(n, n));
      const Eigen::Vector3d chart = map.su11_chart(k);
      SwansonCounterpartCoeffs ref = swanson_invariant_coeffs(
          model.omega(t), model.alpha(t), model.beta(t), chart[0], chart[1], chart[2]);
      wdev = std::max(wdev, std::abs(c.w - ref.w));
      vdev = std::max(vdev, std::abs(c.v - ref.v));
    }
    return std::array<double, 3>{worst, wdev, vdev};
  };

  auto [worst, wdev, vdev] = run_oracle(res.map);
  res.max_hermiticity_residual = worst;
  res.max_w_dev = wdev;
  res.max_v_dev = vdev;
  if (worst <= opts.oracle_tolerance || !opts.allow_fallback) return res;

  // Fallback: per-point Gauss-Newton on the chart against the anti-Hermitian
  // channel residuals of the mapped generator, derivative stencil frozen at
  // the neighbouring ODE values. Midpoint chart values are left as integrated.
  const int half_points = 2 * grid.steps + 9;
  std::vector<Eigen::Vector3d> chart(half_points);
  for (int h = 0; h < half_points; ++h) chart[h] = res.map.su11_chart_half(h);

  auto residual3 = [&](int k, const Eigen::Vector3d& yk) {
    std::vector<Eigen::Vector3d> local = chart;
    local[4 + 2 * k] = yk;
    DysonMapSolution trial =
        MapBuilder::su11(MapFamily::kSu11Invariant, grid, config, local, "trial");
    const double t = grid.time(k);
    OperatorMatrix h = trial.eta(k) * build_swanson_hamiltonian(model, t, config) *
                           trial.eta_inverse(k) +
                       kI * trial.eta_dot(k) * trial.eta_inverse(k);
    const int n = config.dim - opts.oracle_guard;
    CoeffTriple c = extract_quadratic_coeffs(h.topLeftCorner(n, n));
    return Eigen::Vector3d(c.w.imag(), (c.t - std::conj(c.v)).real(),
                           (c.t - std::conj(c.v)).imag());
  };
  for (int k = 0; k <= grid.steps; ++k) {
    Eigen::Vector3d yk = chart[4 + 2 * k];
    for (int it = 0; it < 4; ++it) {
      Eigen::Vector3d r = residual3(k, yk);
      if (r.cwiseAbs().maxCoeff() < 1e-10) break;
      Eigen::Matrix3d jac;
      const double h = 1e-6;
      for (int j = 0; j < 3; ++j) {
        Eigen::Vector3d yp = yk;
        yp[j] += h;
        jac.col(j) = (residual3(k, yp) - r) / h;
      }
      yk -= jac.fullPivLu().solve(r);
    }
    chart[4 + 2 * k] = yk;
  }
  res.map = MapBuilder::su11(MapFamily::kSu11Invariant, grid, config, std::move(chart),
                             "path=fallback");
  auto [worst2, wdev2, vdev2] = run_oracle(res.map);
  res.max_hermiticity_residual = worst2;
  res.max_w_dev = wdev2;
  res.max_v_dev = vdev2;
  res.path = "fallback";
  return res;
}

// ---------------------------------------------------------------------------
// Schrodinger-like maps
// ---------------------------------------------------------------------------

DysonMapSolution solve_schrodinger_like(const TimeMatrix& hamiltonian, const OperatorMatrix& eta0,
                                        const TimeGrid& grid, const FockConfig& config,
                                        const SchrodingerLikeOptions& opts) {
  grid.validate();
  config.validate();
  if (eta0.rows() != config.dim || eta0.cols() != config.dim) {
    throw std::invalid_argument("solve_schrodinger_like: eta0 shape mismatch");
  }
  auto rhs = [&](double t, const OperatorMatrix& y) -> OperatorMatrix {
    return -kI * (y * hamiltonian(t));
  };
  const int total = grid.steps + 5;  // indices 0..steps+4 cover t0-2dt .. t1+2dt
  std::vector<OperatorMatrix> etas(total);
  etas[2] = eta0;
  for (int k = 2; k + 1 < total; ++k) {
    etas[k + 1] = rk4_step(rhs, grid.t0 + (k - 2) * grid.dt, etas[k], grid.dt);
    if (etas[k + 1].norm() > opts.growth_cap) {
      throw std::overflow_error("solve_schrodinger_like: ||eta|| exceeded growth cap");
    }
  }
  for (int k = 2; k > 0; --k) {
    etas[k - 1] = rk4_step(rhs, grid.t0 + (k - 2) * grid.dt, etas[k], -grid.dt);
  }
  return MapBuilder::matrices(grid, config, std::move(etas), "");
}

double quasi_hermiticity_residual(const OperatorMatrix& hamiltonian, const OperatorMatrix& rho,
                                  const OperatorMatrix& rho_dot, const FockConfig& config) {
  if (hamiltonian.rows() != rho.rows() || rho.rows() != rho_dot.rows()) {
    throw std::invalid_argument("quasi_hermiticity_residual: shape mismatch");
  }
  OperatorMatrix lhs = hamiltonian.adjoint() * rho - rho * hamiltonian - kI * rho_dot;
  const int n = config.interior();
  return lhs.topLeftCorner(n, n).norm() / std::max(rho.topLeftCorner(n, n).norm(), 1e-300);
}

}  // namespace dyson
