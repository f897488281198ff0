#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dysonchain/fock.hpp"
#include "dysonchain/grid.hpp"
#include "dysonchain/models.hpp"

namespace dyson {

// ---------------------------------------------------------------------------
// Dyson map solutions
// ---------------------------------------------------------------------------

enum class MapFamily {
  kBarDisplacement,   // eta = exp(gamma a + gamma^* a^dag), gamma from the closed form
  kGammaOde,          // same ansatz, gamma integrated from its ODE
  kSu11Stationary,    // eta = exp(l+ K+) exp(ln l0 K0) exp(l- K-), per-time Newton root
  kSu11Invariant,     // same ansatz, (Phi, chi, varphi) integrated from their ODEs
  kMatrixPropagated,  // eta from the dual-space Schrodinger-like matrix equation
};

const char* map_family_name(MapFamily f);

/// A time-indexed family of Dyson maps on a uniform grid. Parameter-driven
/// families store their parameter tracks (on a half-step grid, two full steps
/// beyond each end) and realize matrices on demand; matrix-propagated maps
/// store the matrices themselves. eta_dot comes from finite differences on
/// the realized eta grid (five-point by default, plain centered if fd_order=2).
class DysonMapSolution {
 public:
  MapFamily family() const { return family_; }
  const TimeGrid& grid() const { return grid_; }
  const FockConfig& fock() const { return fock_; }
  int fd_order() const { return fd_order_; }
  void set_fd_order(int order);

  /// Matrices at grid point k in [0, steps]; parameter families accept
  /// k in [-2, steps+2] (the internal extension).
  OperatorMatrix eta(int k) const;
  OperatorMatrix eta_inverse(int k) const;
  OperatorMatrix eta_dot(int k) const;
  OperatorMatrix rho(int k) const;  // eta^dag eta

  /// Half-grid realizations for parameter families (h indexes t0 + h*dt/2
  /// with offset 4, so grid point k sits at h = 2k + 4). Steppers use these
  /// for true midpoint generators.
  OperatorMatrix eta_half(int h) const { return realize_eta_half(h); }
  OperatorMatrix eta_inverse_half(int h) const { return realize_eta_inverse_half(h); }
  OperatorMatrix eta_dot_half(int h) const;

  /// Displacement-family parameter at grid point k (throws for other families).
  Complex gamma(int k) const;
  /// Displacement-family parameter at half-grid resolution: time t0 + h*dt/2,
  /// h in [-4, 2*steps+4].
  Complex gamma_half(int h) const;
  /// d(gamma)/dt at grid point k from the stored generating ODE.
  Complex gamma_dot(int k) const;

  /// SU(1,1)-family chart (phi, chi, varphi) at grid point k.
  Eigen::Vector3d su11_chart(int k) const;
  Eigen::Vector3d su11_chart_half(int h) const;

  /// Smallest |eigenvalue| of rho and 2-norm condition of eta at point k.
  struct PointDiagnostics {
    double eta_norm = 0.0;
    double eta_condition = 0.0;
    double rho_min_eigenvalue = 0.0;
    double eta_hermiticity = 0.0;  // ||eta - eta^dag|| / ||eta||
  };
  PointDiagnostics point_diagnostics(int k) const;

  /// Free-form solver notes: which path produced the result, warnings.
  const std::string& provenance_note() const { return note_; }

 private:
  friend class MapBuilder;
  MapFamily family_{};
  TimeGrid grid_{};
  FockConfig fock_{};
  int fd_order_ = 4;
  std::string note_;

  // displacement families: gamma on the half grid, plus either stored
  // derivatives or the generating ODE rhs; the closed-form bar map falls back
  // to finite differences on the half grid.
  std::vector<Complex> gamma_half_;
  std::vector<Complex> gamma_dot_half_;
  std::function<Complex(double, Complex)> gamma_rhs_;

  // SU(1,1) families: (phi, chi, varphi) on the half grid.
  std::vector<Eigen::Vector3d> chart_half_;

  // matrix-propagated: eta on the extended full grid [-2 .. steps+2].
  std::vector<OperatorMatrix> eta_ext_;

  // small realization cache: finite-difference stencils revisit neighbours
  struct Cache;
  std::shared_ptr<Cache> cache_;

  int half_index(int k) const { return 2 * k + 4; }
  OperatorMatrix realize_eta_half(int h) const;
  OperatorMatrix realize_eta_half_impl(int h) const;
  OperatorMatrix realize_eta_inverse_half(int h) const;
  OperatorMatrix realize_eta_inverse_half_impl(int h) const;
};

// ---------------------------------------------------------------------------
// linear model: closed-form bar map and the gamma ODE
// ---------------------------------------------------------------------------

/// gamma_bar_t = (beta_t^* - alpha_t) / (2 omega_t). Throws on omega_t = 0.
Complex bar_gamma(const LinearModel& model, double t);

/// f_bar_t = (|alpha|^2 + |beta|^2 - 2 alpha beta) / (4 omega).
Complex bar_f(const LinearModel& model, double t);

/// |Im(alpha_t beta_t)|: the mapped Hamiltonian can only be Hermitian when
/// this vanishes.
double bar_side_condition(const LinearModel& model, double t);

/// Closed-form Hermitian map eta_t = exp(gbar_t a + gbar_t^* a^dag) on the grid.
DysonMapSolution build_bar_map_linear(const LinearModel& model, const TimeGrid& grid,
                                      const FockConfig& config);

/// Integrate d(gamma)/dt = i w gamma + i (alpha - beta^*)/2 with RK4 at half
/// the grid spacing; local-error monitor rejects steps above 1e-10.
DysonMapSolution solve_gamma_ode(const LinearModel& model, Complex gamma0, const TimeGrid& grid,
                                 const FockConfig& config);

/// Coefficient functions of the mapped generator for a displacement-family
/// map: u = w g + alpha + i g', v = -w g^* + beta + i g'^*,
/// f = -w |g|^2 - alpha g^* + beta g + (i/2)(g g'^* - g^* g').
struct HermitianCoefficients {
  std::vector<Complex> u, v, f;
  double max_v_minus_u_conj = 0.0;
  double max_im_f = 0.0;
};
HermitianCoefficients linear_hermitian_coeffs(const LinearModel& model,
                                              const DysonMapSolution& map);

/// Coupled tower of displacement maps for chain levels 0..L: level k+1 sees
/// the effective drive (alpha + i gamma_k', beta + i gamma_k'^*), so the
/// gamma ODEs are integrated jointly.
std::vector<DysonMapSolution> solve_gamma_tower(const LinearModel& model,
                                                const std::vector<Complex>& gamma0_per_level,
                                                const TimeGrid& grid, const FockConfig& config);

// ---------------------------------------------------------------------------
// Swanson model: stationary root and invariant ODE map
// ---------------------------------------------------------------------------

/// Residuals of the two stationary Hermiticity conditions for the quadratic
/// map chart (phi, chi from (eps, |mu|); unknowns |mu| and varphi at fixed eps).
Eigen::Vector2d swanson_stationary_residuals(Complex omega, Complex alpha, Complex beta,
                                             double epsilon, double abs_mu, double varphi);

struct SwansonRootOptions {
  double epsilon = 0.2;     // fixed chart gauge; the metric family is one-parameter
  double abs_mu0 = 0.05;    // Newton seed
  double varphi0 = 0.0;
  int max_iterations = 100;
  double tolerance = 1e-13;
};

/// Newton (finite-difference Jacobian) on the stationary conditions at time t.
/// Returns the full factorization chart of the converged map exponent.
/// Throws on non-convergence or a singular Jacobian.
Su11Params solve_swanson_bar(const SwansonModel& model, double t, const SwansonRootOptions& opts);

struct SwansonInvariantOptions {
  int oracle_stride = 10;        // Hermiticity matrix-oracle sampling stride
  double oracle_tolerance = 1e-6;
  int oracle_guard = 30;         // top levels excluded from the oracle norm
  bool allow_fallback = true;    // per-point re-minimization if the ODE path fails
};

struct SwansonInvariantResult {
  DysonMapSolution map;
  double max_hermiticity_residual = 0.0;  // matrix oracle over sampled grid
  double max_w_dev = 0.0;                 // extracted vs closed-form W
  double max_v_dev = 0.0;                 // extracted vs closed-form V
  std::string path;                       // "ode" or "fallback"
};

/// Integrate the invariant-map chart (Phi, chi, varphi). Phi' and varphi'
/// follow the printed coupled equations; chi' is fixed by the Hermiticity of
/// the K0 channel, chi' = 2 lambda_0 Im W_conj, which reduces to the
/// stationary system when all three derivatives vanish. The matrix oracle
/// adjudicates the result; on failure (and allow_fallback) each grid point is
/// re-solved by Gauss-Newton on the chart against the oracle residual.
SwansonInvariantResult solve_swanson_invariant(const SwansonModel& model, const Su11Params& init,
                                               const TimeGrid& grid, const FockConfig& config,
                                               const SwansonInvariantOptions& opts = {});

/// Closed-form Hermitian-counterpart coefficients of the invariant map.
struct SwansonCounterpartCoeffs {
  Complex w;  // (a^dag a + 1/2) coefficient
  Complex v;  // a^2 coefficient
};
SwansonCounterpartCoeffs swanson_invariant_coeffs(Complex omega, Complex alpha, Complex beta,
                                                  double phi, double chi, double varphi);

// ---------------------------------------------------------------------------
// Schrodinger-like (dual-space) maps
// ---------------------------------------------------------------------------

using TimeMatrix = std::function<OperatorMatrix(double)>;

struct SchrodingerLikeOptions {
  double growth_cap = 1e100;  // abort when ||eta||_F exceeds this
};

/// Propagate i d(eta)/dt = eta H_t with RK4 from eta0 at grid.t0 (two steps
/// beyond each grid end for the derivative stencils).
DysonMapSolution solve_schrodinger_like(const TimeMatrix& hamiltonian, const OperatorMatrix& eta0,
                                        const TimeGrid& grid, const FockConfig& config,
                                        const SchrodingerLikeOptions& opts = {});

/// || H^dag rho - rho H - i rho_dot ||_F / ||rho||_F, tail-guarded.
double quasi_hermiticity_residual(const OperatorMatrix& hamiltonian, const OperatorMatrix& rho,
                                  const OperatorMatrix& rho_dot, const FockConfig& config);

}  // namespace dyson
