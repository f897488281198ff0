#pragma once

#include <complex>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

namespace dyson {

using Complex = std::complex<double>;
using OperatorMatrix = Eigen::MatrixXcd;
using StateCol = Eigen::VectorXcd;

constexpr Complex kI{0.0, 1.0};

/// Truncated Fock space parameters. `tail_guard` is the number of top levels
/// excluded from residual norms, since exponential maps pollute the top of
/// the basis.
struct FockConfig {
  int dim = 40;
  int tail_guard = 5;
  double tol_tail = 1e-8;

  void validate() const {
    if (dim < 4) throw std::invalid_argument("FockConfig: dim must be >= 4");
    if (tail_guard < 0 || tail_guard >= dim)
      throw std::invalid_argument("FockConfig: tail_guard must be in [0, dim)");
    if (tol_tail < 0) throw std::invalid_argument("FockConfig: tol_tail must be >= 0");
  }
  int interior() const { return dim - tail_guard; }
};

bool all_finite(const OperatorMatrix& m);

/// Annihilation/creation pair on the truncated space: a[m, m+1] = sqrt(m+1).
std::pair<OperatorMatrix, OperatorMatrix> build_ladder(const FockConfig& config);

/// Number operator a^dag a (diagonal 0..dim-1).
OperatorMatrix number_operator(const FockConfig& config);

/// e^M by scaling-and-squaring with a Taylor kernel. Squaring threshold
/// ||M||_1 <= 0.5; kernel truncated at term-level 1e-16. Throws
/// std::overflow_error when ||M||_1 exceeds the cap (e^||M|| would be
/// meaningless in double precision anyway).
OperatorMatrix matrix_exp(const OperatorMatrix& m, double norm_cap = 500.0);

/// Displacement operator D(theta) = exp(theta a^dag - theta^* a).
/// Throws std::runtime_error if the tail population of D|0> exceeds
/// config.tol_tail (coherent state does not fit under the truncation).
OperatorMatrix displacement(Complex theta, const FockConfig& config);

/// Rotation operator exp(-i chi a^dag a); diagonal with entries e^{-i chi m}.
OperatorMatrix rotation(double chi, const FockConfig& config);

/// SU(1,1) generators (K+, K-, K0) = (a^dag^2/2, a^2/2, a^dag a/2 + 1/4).
struct Su11Generators {
  OperatorMatrix k_plus;
  OperatorMatrix k_minus;
  OperatorMatrix k_zero;
};
Su11Generators su11_generators(const FockConfig& config);

/// Parameters of the Gauss (normal-ordered) factorization of
///   exp(eps (a^dag a + 1/2) + mu a^2 + mu^* a^dag^2)
///     = exp(lambda_+ K+) exp(ln lambda_0 K0) exp(lambda_- K-).
struct Su11Params {
  double epsilon = 0.0;
  Complex mu{};
  Complex xi{};           // sqrt(eps^2 - 4|mu|^2); i*positive on the trig branch
  Complex gamma_plus{};   // 1 + (xi/eps) coth xi
  Complex gamma_minus{};  // 1 - (xi/eps) coth xi
  Complex z{};            // 2 mu / eps
  double phi = 0.0;       // |z| / gamma_minus
  double chi = 0.0;       // 2/gamma_minus - 1
  double varphi = 0.0;    // arg z
  Complex lambda_plus{};  // -phi e^{-i varphi}
  Complex lambda_minus{}; // -phi e^{+i varphi}
  Complex lambda_zero{};  // phi^2 - chi
};

/// Thrown when the factorization hits a genuine branch singularity
/// (xi -> 0 degenerate point, cot pole, or lambda_0 on the closed negative
/// real axis where the principal log has no preferred sheet).
struct BranchSingularity : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Fill all derived factorization coefficients from (epsilon, mu).
/// Requires epsilon != 0 and eps^2 != 4|mu|^2. The trigonometric branch
/// (eps^2 < 4|mu|^2) is handled through coth(ix) = -i cot(x); its validity is
/// decided by the matrix residual, never assumed.
Su11Params gauss_decompose(double epsilon, Complex mu);

/// Build the left side exp(eps(a^dag a + 1/2) + mu a^2 + mu^* a^dag^2).
OperatorMatrix su11_exponential(double epsilon, Complex mu, const FockConfig& config);

/// Build the factorized right side exp(l+ K+) exp(ln l0 K0) exp(l- K-).
OperatorMatrix su11_product(const Su11Params& params, const FockConfig& config);

/// Exact inverse of the factorized form: exp(-l- K-) exp(-ln l0 K0) exp(-l+ K+).
OperatorMatrix su11_product_inverse(const Su11Params& params, const FockConfig& config);

/// ||LHS - RHS||_F / ||LHS||_F for the factorization identity, with the top
/// config.tail_guard rows and columns excluded from both norms.
double gauss_residual(const Su11Params& params, const FockConfig& config);

/// gauss_residual minimized over a ladder of progressively deeper guards.
/// Separates formula error from Fock truncation error: a wrong coefficient
/// set keeps a large residual at every block size, while truncation error
/// vanishes as the compared block shrinks away from the boundary.
double gauss_residual_converged(const Su11Params& params, const FockConfig& config);

/// ||M - M^dag||_F / max(||M||_F, 1), top `guard` rows/columns excluded.
double hermiticity_residual_guarded(const OperatorMatrix& m, int guard);

/// Frobenius distance ||A - B||_F / max(||A||_F, 1) on the guarded block.
double relative_deviation_guarded(const OperatorMatrix& a, const OperatorMatrix& b, int guard);

}  // namespace dyson
