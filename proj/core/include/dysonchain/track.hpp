#pragma once

#include <memory>
#include <string>
#include <vector>

#include "dysonchain/fock.hpp"

namespace dyson {

/// A complex-valued function of (dimensionless, hbar = 1) time. Either a
/// closed-form expression over a tiny grammar
///   number | t | i | (expr) | -expr | expr (+|-|*|/) expr | sin/cos/exp(expr)
/// or a uniformly sampled grid with cubic interpolation.
class CoefficientTrack {
 public:
  CoefficientTrack() : CoefficientTrack("0") {}

  /// Parse a closed-form expression. Throws std::invalid_argument with
  /// position context on malformed input.
  explicit CoefficientTrack(const std::string& expression);

  /// Uniformly sampled track over [t0, t0 + (n-1)*dt]; natural cubic spline
  /// between knots, knots reproduced exactly.
  CoefficientTrack(double t0, double dt, std::vector<Complex> samples);

  Complex operator()(double t) const;

  bool is_sampled() const { return sampled_; }
  const std::string& expression() const { return expr_; }
  double sample_t0() const { return t0_; }
  double sample_dt() const { return dt_; }
  const std::vector<Complex>& samples() const { return samples_; }

  /// Serialize/deserialize; re-parsing reproduces evaluations bit-exactly
  /// for closed forms and at knots for sampled tracks.
  std::string serialize() const;
  static CoefficientTrack deserialize(const std::string& text);

  struct Node;  // expression AST node (public for the parser implementation)

 private:
  std::shared_ptr<const Node> root_;
  std::string expr_;
  bool sampled_ = false;
  double t0_ = 0.0, dt_ = 0.0;
  std::vector<Complex> samples_;
  std::vector<Complex> spline_m_;  // second derivatives at knots

  void build_spline();
};

/// Constant-value convenience.
CoefficientTrack constant_track(Complex value);

}  // namespace dyson
