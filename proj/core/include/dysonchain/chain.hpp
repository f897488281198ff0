#pragma once

#include <map>
#include <optional>

#include "dysonchain/dyson.hpp"

namespace dyson {

/// One level of the gauge-linked Hamiltonian sequence. The Dyson map attached
/// to a node links it to the level above: H_{k+1} = H_k + i eta^-1 eta',
/// and the node's Hermitian counterpart is h_k = eta H_k eta^-1 + i eta' eta^-1
/// (equivalently eta H_{k+1} eta^-1).
struct ChainNode {
  int index = 0;
  TimeGrid grid;
  FockConfig fock;
  std::vector<OperatorMatrix> hamiltonian;            // per grid point
  std::optional<DysonMapSolution> dyson;              // link map to index+1
  std::vector<OperatorMatrix> hermitian_counterpart;  // empty until linked upward
};

/// Fault-injection knob for the recursion term; +1 is the physical sign.
/// The acceptance suite flips it to prove the identity checks are not vacuous.
struct ChainOptions {
  int derivative_sign = +1;
};

/// Base node from a model Hamiltonian sampled on the grid.
ChainNode make_base_node(const std::vector<OperatorMatrix>& hamiltonian, const TimeGrid& grid,
                         const FockConfig& fock);

/// Level up: returns node index+1 with H' = H + i eta^-1 eta', filling the
/// counterpart of `node` as a side effect of the link.
ChainNode lift(ChainNode& node, const DysonMapSolution& map, const ChainOptions& opts = {});

/// Level down: returns node index-1 with Hbar = H - i etabar^-1 etabar'.
/// The new node carries the link map and the counterpart etabar H etabar^-1.
ChainNode lower(const ChainNode& node, const DysonMapSolution& map, const ChainOptions& opts = {});

/// Build nodes k_min..k_max from the base (index 0). `maps` holds the link
/// map for each level k in [k_min, k_max): the map attached to node k.
std::map<int, ChainNode> build_chain(const ChainNode& base,
                                     const std::map<int, DysonMapSolution>& maps, int k_min,
                                     int k_max, const ChainOptions& opts = {});

/// Gauge connection between two neighbouring Hermitian counterparts.
struct GaugeLink {
  enum class Kind { kGlobal, kLocal } kind = Kind::kLocal;
  std::vector<Complex> c_track;      // identity coefficient of h_up - h_low
  std::vector<Complex> phase;        // cumulative integral of c
  double max_offdiag_remainder = 0.0;
  double tolerance = 1e-8;
  TimeGrid grid;

  /// A_t for global links: exp(-i phase_t) (A at t0 is the identity).
  Complex gauge_factor(int k) const { return std::exp(-kI * phase.at(k)); }
};

/// Split h_up - h_low into a guarded-trace identity part and a remainder.
/// kind is global when the remainder stays below `tolerance`; the phase is
/// accumulated with a fourth-order quadrature on the grid.
GaugeLink analyze_gauge(const std::vector<OperatorMatrix>& h_low,
                        const std::vector<OperatorMatrix>& h_up, const TimeGrid& grid,
                        int guard, double tolerance = 1e-8);

/// max over the grid of ||i A' - (h_up A - A h_low)||_F / ||h_up||_F with A'
/// by centered five-point differences. Rejects local links.
double gauge_ode_residual(const GaugeLink& link, const std::vector<OperatorMatrix>& h_low,
                          const std::vector<OperatorMatrix>& h_up, int guard);

/// Chain collapse probe: propagate dual-space maps at every level k in
/// [-depth, depth] and report the worst relative deviation of the
/// finite-difference-reconstructed level Hamiltonians from 2^k times the base.
struct CollapseReport {
  double max_deviation = 0.0;
  std::map<int, double> per_level;
};
CollapseReport collapse_check(const TimeMatrix& base_hamiltonian, const OperatorMatrix& eta0,
                              const TimeGrid& grid, const FockConfig& config, int depth = 2,
                              const ChainOptions& opts = {});

}  // namespace dyson
