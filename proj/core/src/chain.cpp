#include "dysonchain/chain.hpp"

#include <cmath>

namespace dyson {

ChainNode make_base_node(const std::vector<OperatorMatrix>& hamiltonian, const TimeGrid& grid,
                         const FockConfig& fock) {
  if (int(hamiltonian.size()) != grid.points()) {
    throw std::invalid_argument("make_base_node: need one Hamiltonian per grid point");
  }
  ChainNode n;
  n.grid = grid;
  n.fock = fock;
  n.hamiltonian = hamiltonian;
  return n;
}

namespace {

void check_alignment(const ChainNode& node, const DysonMapSolution& map) {
  if (!node.grid.aligned_with(map.grid())) {
    throw std::invalid_argument("chain link: map grid does not align with node grid");
  }
  if (map.fock().dim != node.fock.dim) {
    throw std::invalid_argument("chain link: Fock dimension mismatch");
  }
}

}  // namespace

ChainNode lift(ChainNode& node, const DysonMapSolution& map, const ChainOptions& opts) {
  check_alignment(node, map);
  ChainNode up;
  up.index = node.index + 1;
  up.grid = node.grid;
  up.fock = node.fock;
  up.hamiltonian.resize(node.grid.points());
  node.hermitian_counterpart.resize(node.grid.points());
  node.dyson = map;
  const double sign = double(opts.derivative_sign);
  for (int k = 0; k <= node.grid.steps; ++k) {
    OperatorMatrix e = map.eta(k);
    OperatorMatrix einv = map.eta_inverse(k);
    up.hamiltonian[k] = node.hamiltonian[k] + sign * kI * (einv * map.eta_dot(k));
    node.hermitian_counterpart[k] = e * up.hamiltonian[k] * einv;
  }
  return up;
}

ChainNode lower(const ChainNode& node, const DysonMapSolution& map, const ChainOptions& opts) {
  check_alignment(node, map);
  ChainNode down;
  down.index = node.index - 1;
  down.grid = node.grid;
  down.fock = node.fock;
  down.hamiltonian.resize(node.grid.points());
  down.hermitian_counterpart.resize(node.grid.points());
  down.dyson = map;
  const double sign = double(opts.derivative_sign);
  for (int k = 0; k <= node.grid.steps; ++k) {
    OperatorMatrix e = map.eta(k);
    OperatorMatrix einv = map.eta_inverse(k);
    down.hamiltonian[k] = node.hamiltonian[k] - sign * kI * (einv * map.eta_dot(k));
    down.hermitian_counterpart[k] = e * node.hamiltonian[k] * einv;
  }
  return down;
}

std::map<int, ChainNode> build_chain(const ChainNode& base,
                                     const std::map<int, DysonMapSolution>& maps, int k_min,
                                     int k_max, const ChainOptions& opts) {
  if (k_min > 0 || k_max < 0) throw std::invalid_argument("build_chain: depth must span 0");
  std::map<int, ChainNode> chain;
  chain[0] = base;
  for (int k = 0; k < k_max; ++k) {
    auto it = maps.find(k);
    if (it == maps.end()) throw std::invalid_argument("build_chain: missing map for level");
    chain[k + 1] = lift(chain[k], it->second, opts);
  }
  for (int k = 0; k > k_min; --k) {
    auto it = maps.find(k - 1);
    if (it == maps.end()) throw std::invalid_argument("build_chain: missing map for level");
    chain[k - 1] = lower(chain[k], it->second, opts);
  }
  return chain;
}

GaugeLink analyze_gauge(const std::vector<OperatorMatrix>& h_low,
                        const std::vector<OperatorMatrix>& h_up, const TimeGrid& grid,
                        int guard, double tolerance) {
  if (h_low.size() != h_up.size() || int(h_low.size()) != grid.points()) {
    throw std::invalid_argument("analyze_gauge: grids disagree");
  }
  GaugeLink link;
  link.grid = grid;
  link.tolerance = tolerance;
  const int points = grid.points();
  link.c_track.resize(points);
  link.phase.assign(points, Complex(0, 0));
  const int n = int(h_low[0].rows()) - guard;
  for (int k = 0; k < points; ++k) {
    OperatorMatrix d = (h_up[k] - h_low[k]).topLeftCorner(n, n);
    const Complex c = d.trace() / double(n);
    link.c_track[k] = c;
    d.diagonal().array() -= c;
    link.max_offdiag_remainder =
        std::max(link.max_offdiag_remainder,
                 d.norm() / std::max(h_up[k].topLeftCorner(n, n).norm(), 1.0));
  }
  link.kind = (link.max_offdiag_remainder < tolerance) ? GaugeLink::Kind::kGlobal
                                                       : GaugeLink::Kind::kLocal;
  // cumulative phase: Simpson over point pairs, fourth-order edge rule on the
  // odd points, everything on the grid itself
  const double h = grid.dt;
  const auto& c = link.c_track;
  for (int k = 1; k < points; ++k) {
    if (k >= 2) {
      link.phase[k] = link.phase[k - 2] + (h / 3.0) * (c[k - 2] + 4.0 * c[k - 1] + c[k]);
    } else {
      // first interval: 3-point right-edge rule
      link.phase[k] = link.phase[k - 1] + (h / 12.0) * (5.0 * c[k - 1] + 8.0 * c[k] - c[k + 1]);
    }
  }
  return link;
}

double gauge_ode_residual(const GaugeLink& link, const std::vector<OperatorMatrix>& h_low,
                          const std::vector<OperatorMatrix>& h_up, int guard) {
  if (link.kind != GaugeLink::Kind::kGlobal) {
    throw std::invalid_argument("gauge_ode_residual: link is local");
  }
  const TimeGrid& grid = link.grid;
  const int n = int(h_low[0].rows()) - guard;
  double worst = 0.0;
  for (int k = 2; k <= grid.steps - 2; ++k) {
    const Complex adot = (-link.gauge_factor(k + 2) + 8.0 * link.gauge_factor(k + 1) -
                          8.0 * link.gauge_factor(k - 1) + link.gauge_factor(k - 2)) /
                         (12.0 * grid.dt);
    OperatorMatrix lhs = kI * adot * OperatorMatrix::Identity(n, n) -
                         (h_up[k].topLeftCorner(n, n) * link.gauge_factor(k) -
                          link.gauge_factor(k) * h_low[k].topLeftCorner(n, n));
    worst = std::max(worst, lhs.norm() / std::max(h_up[k].topLeftCorner(n, n).norm(), 1e-300));
  }
  return worst;
}

CollapseReport collapse_check(const TimeMatrix& base_hamiltonian, const OperatorMatrix& eta0,
                              const TimeGrid& grid, const FockConfig& config, int depth,
                              const ChainOptions& opts) {
  CollapseReport report;
  std::vector<OperatorMatrix> base(grid.points());
  std::vector<double> base_norm(grid.points());
  for (int k = 0; k <= grid.steps; ++k) {
    base[k] = base_hamiltonian(grid.time(k));
    base_norm[k] = base[k].norm();
  }
  const double sign = double(opts.derivative_sign);
  for (int level = -depth; level <= depth; ++level) {
    if (level == 0) continue;
    // dual-space link maps: upward links solve i eta' = eta H_k with
    // H_k = 2^k H; downward links reduce exactly to i eta' = eta (H_k / 2).
    const double scale = (level > 0) ? std::pow(2.0, level - 1) : std::pow(2.0, level);
    auto gen = [&](double t) -> OperatorMatrix { return scale * base_hamiltonian(t); };
    DysonMapSolution map = solve_schrodinger_like(gen, eta0, grid, config);
    // reconstruct the new level through the recursion with the
    // finite-difference derivative and compare against the collapsed value
    const double from_factor = (level > 0) ? std::pow(2.0, level - 1) : std::pow(2.0, level + 1);
    const double to_factor = std::pow(2.0, level);
    const double dir = (level > 0) ? 1.0 : -1.0;
    double worst = 0.0;
    for (int k = 0; k <= grid.steps; ++k) {
      OperatorMatrix reconstructed = from_factor * base[k] + dir * sign * kI *
                                     (map.eta_inverse(k) * map.eta_dot(k));
      worst = std::max(worst, (reconstructed - to_factor * base[k]).norm() / base_norm[k]);
    }
    report.per_level[level] = worst;
    report.max_deviation = std::max(report.max_deviation, worst);
  }
  return report;
}

}  // namespace dyson
