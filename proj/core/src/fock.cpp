#include "dysonchain/fock.hpp"

#include <cmath>

namespace dyson {

bool all_finite(const OperatorMatrix& m) {
  return m.allFinite();
}

std::pair<OperatorMatrix, OperatorMatrix> build_ladder(const FockConfig& config) {
  config.validate();
  OperatorMatrix a = OperatorMatrix::Zero(config.dim, config.dim);
  for (int m = 0; m + 1 < config.dim; ++m) {
    a(m, m + 1) = std::sqrt(double(m + 1));
  }
  return {a, a.adjoint()};
}

OperatorMatrix number_operator(const FockConfig& config) {
  OperatorMatrix n = OperatorMatrix::Zero(config.dim, config.dim);
  for (int m = 0; m < config.dim; ++m) n(m, m) = double(m);
  return n;
}

OperatorMatrix matrix_exp(const OperatorMatrix& m, double norm_cap) {
  if (m.rows() != m.cols()) throw std::invalid_argument("matrix_exp: matrix must be square");
  if (!m.allFinite()) throw std::invalid_argument("matrix_exp: non-finite entries");
  const double norm1 = m.cwiseAbs().colwise().sum().maxCoeff();
  if (norm1 > norm_cap) throw std::overflow_error("matrix_exp: ||M||_1 exceeds cap");

  int squarings = 0;
  if (norm1 > 0.5) {
    squarings = int(std::ceil(std::log2(norm1 / 0.5)));
  }
  OperatorMatrix a = m / std::pow(2.0, squarings);

  const int n = int(m.rows());
  OperatorMatrix result = OperatorMatrix::Identity(n, n);
  OperatorMatrix term = OperatorMatrix::Identity(n, n);
  for (int k = 1; k <= 30; ++k) {
    term = (term * a) / double(k);
    result += term;
    if (term.cwiseAbs().maxCoeff() < 1e-16 * result.cwiseAbs().maxCoeff()) break;
  }
  for (int s = 0; s < squarings; ++s) result = result * result;
  return result;
}

OperatorMatrix displacement(Complex theta, const FockConfig& config) {
  auto [a, ad] = build_ladder(config);
  OperatorMatrix d = matrix_exp(theta * ad - std::conj(theta) * a);
  // tail population of D|0>
  double tail = 0.0;
  for (int m = config.dim - config.tail_guard; m < config.dim; ++m) {
    tail += std::norm(d(m, 0));
  }
  if (tail > config.tol_tail) {
    throw std::runtime_error("displacement: coherent tail exceeds tol_tail, raise dim");
  }
  return d;
}

OperatorMatrix rotation(double chi, const FockConfig& config) {
  config.validate();
  OperatorMatrix r = OperatorMatrix::Zero(config.dim, config.dim);
  for (int m = 0; m < config.dim; ++m) {
    r(m, m) = std::exp(-kI * chi * double(m));
  }
  return r;
}

Su11Generators su11_generators(const FockConfig& config) {
  auto [a, ad] = build_ladder(config);
  Su11Generators g;
  g.k_plus = 0.5 * (ad * ad);
  g.k_minus = 0.5 * (a * a);
  g.k_zero = 0.5 * (ad * a) + 0.25 * OperatorMatrix::Identity(config.dim, config.dim);
  return g;
}

namespace {

// w -> sqrt(w) coth(sqrt(w)), an even analytic function of sqrt(w); real for
// real w on both branches (coth(ix) = -i cot x). Series near w = 0.
double xi_coth_xi(double w) {
  if (std::abs(w) < 1e-8) {
    return 1.0 + w / 3.0 - w * w / 45.0;
  }
  if (w > 0) {
    const double x = std::sqrt(w);
    return x / std::tanh(x);
  }
  const double x = std::sqrt(-w);
  const double t = std::tan(x);
  if (t == 0.0) throw BranchSingularity("gauss_decompose: cot pole on the trigonometric branch");
  return x / t;
}

}  // namespace

Su11Params gauss_decompose(double epsilon, Complex mu) {
  if (epsilon == 0.0) throw std::domain_error("gauss_decompose: epsilon must be nonzero");
  const double abs_mu2 = std::norm(mu);
  const double w = epsilon * epsilon - 4.0 * abs_mu2;
  if (std::abs(w) < 1e-14 * std::max({epsilon * epsilon, 4.0 * abs_mu2, 1.0})) {
    throw BranchSingularity("gauss_decompose: eps^2 = 4|mu|^2 degenerate point (xi -> 0)");
  }

  Su11Params p;
  p.epsilon = epsilon;
  p.mu = mu;
  p.xi = (w >= 0) ? Complex(std::sqrt(w), 0.0) : Complex(0.0, std::sqrt(-w));

  const double g = xi_coth_xi(w);  // = xi coth(xi), real
  p.gamma_plus = 1.0 + g / epsilon;
  p.gamma_minus = 1.0 - g / epsilon;
  if (std::abs(p.gamma_minus) < 1e-14) {
    throw BranchSingularity("gauss_decompose: gamma_minus = 0 (chart singular)");
  }
  p.z = 2.0 * mu / epsilon;
  p.varphi = (std::abs(p.z) > 0.0) ? std::arg(p.z) : 0.0;
  p.phi = std::abs(p.z) / p.gamma_minus.real();
  p.chi = 2.0 / p.gamma_minus.real() - 1.0;
  p.lambda_plus = -p.phi * std::exp(-kI * p.varphi);
  p.lambda_minus = -p.phi * std::exp(kI * p.varphi);
  p.lambda_zero = p.phi * p.phi - p.chi;

  const double l0 = p.lambda_zero.real();
  if (!std::isfinite(l0) || !std::isfinite(p.phi) || !std::isfinite(p.chi)) {
    throw BranchSingularity("gauss_decompose: non-finite coefficients");
  }
  if (l0 <= 0.0) {
    throw std::domain_error(
        "gauss_decompose: lambda_0 on the closed negative real axis; principal log undefined");
  }
  return p;
}

OperatorMatrix su11_exponential(double epsilon, Complex mu, const FockConfig& config) {
  auto [a, ad] = build_ladder(config);
  OperatorMatrix x = epsilon * (ad * a + 0.5 * OperatorMatrix::Identity(config.dim, config.dim)) +
                     mu * (a * a) + std::conj(mu) * (ad * ad);
  return matrix_exp(x);
}

OperatorMatrix su11_product(const Su11Params& params, const FockConfig& config) {
  auto gen = su11_generators(config);
  const double l0 = params.lambda_zero.real();
  if (l0 <= 0.0) throw std::domain_error("su11_product: lambda_0 must be positive");
  OperatorMatrix mid = OperatorMatrix::Zero(config.dim, config.dim);
  const double lnl0 = std::log(l0);
  for (int m = 0; m < config.dim; ++m) {
    mid(m, m) = std::exp(lnl0 * (0.5 * m + 0.25));
  }
  return matrix_exp(params.lambda_plus * gen.k_plus) * mid *
         matrix_exp(params.lambda_minus * gen.k_minus);
}

OperatorMatrix su11_product_inverse(const Su11Params& params, const FockConfig& config) {
  auto gen = su11_generators(config);
  const double l0 = params.lambda_zero.real();
  if (l0 <= 0.0) throw std::domain_error("su11_product_inverse: lambda_0 must be positive");
  OperatorMatrix mid = OperatorMatrix::Zero(config.dim, config.dim);
  const double lnl0 = std::log(l0);
  for (int m = 0; m < config.dim; ++m) {
    mid(m, m) = std::exp(-lnl0 * (0.5 * m + 0.25));
  }
  return matrix_exp(-params.lambda_minus * gen.k_minus) * mid *
         matrix_exp(-params.lambda_plus * gen.k_plus);
}

double gauss_residual(const Su11Params& params, const FockConfig& config) {
  OperatorMatrix lhs = su11_exponential(params.epsilon, params.mu, config);
  OperatorMatrix rhs = su11_product(params, config);
  const int n = config.interior();
  const double denom = lhs.topLeftCorner(n, n).norm();
  return (lhs.topLeftCorner(n, n) - rhs.topLeftCorner(n, n)).norm() / denom;
}

double gauss_residual_converged(const Su11Params& params, const FockConfig& config) {
  OperatorMatrix lhs = su11_exponential(params.epsilon, params.mu, config);
  OperatorMatrix rhs = su11_product(params, config);
  double best = std::numeric_limits<double>::infinity();
  for (int n = config.dim - config.tail_guard; n >= 4; n -= 4) {
    const double r =
        (lhs.topLeftCorner(n, n) - rhs.topLeftCorner(n, n)).norm() / lhs.topLeftCorner(n, n).norm();
    best = std::min(best, r);
  }
  return best;
}

double hermiticity_residual_guarded(const OperatorMatrix& m, int guard) {
  const int n = int(m.rows()) - guard;
  if (n <= 0) throw std::invalid_argument("hermiticity_residual: guard too large");
  OperatorMatrix b = m.topLeftCorner(n, n);
  return (b - b.adjoint()).norm() / std::max(b.norm(), 1.0);
}

double relative_deviation_guarded(const OperatorMatrix& a, const OperatorMatrix& b, int guard) {
  const int n = int(a.rows()) - guard;
  if (n <= 0 || a.rows() != b.rows()) throw std::invalid_argument("relative_deviation: bad shapes");
  return (a.topLeftCorner(n, n) - b.topLeftCorner(n, n)).norm() /
         std::max(a.topLeftCorner(n, n).norm(), 1.0);
}

}  // namespace dyson
