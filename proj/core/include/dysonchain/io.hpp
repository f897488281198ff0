#pragma once

#include <string>
#include <vector>

#include "dysonchain/chain.hpp"
#include "dysonchain/evolve.hpp"
#include "dysonchain/scenario.hpp"

namespace dyson {

/// Per-time map records: t, family parameters, ||eta||, cond(eta), Hermiticity.
void write_map_csv(const DysonMapSolution& map, const std::string& path, int stride = 10);

/// Chain report rows (k, t, herm_residual, gauge_kind, C_re, C_im, phase_re,
/// phase_im, collapse_deviation).
struct ChainCsvRow {
  int level;
  double t;
  double herm_residual;
  std::string gauge_kind;
  Complex c{}, phase{};
  double collapse_deviation = 0.0;
};
void write_chain_csv(const std::vector<ChainCsvRow>& rows, const std::string& path);

/// Trajectory rows (t, metric_norm, flat_norm, x1, x2, closed forms, residuals).
void write_trajectory_csv(const TrajectoryRecord& traj, const QuadratureReport* quad,
                          const std::string& path, int stride = 10);

void write_report_json(const RunReport& report, const std::string& path);

/// Row-major complex-double matrix blob with a 16-byte header
/// (8-byte magic "DYSNBLOB", u32 dim, u32 count).
void write_matrix_blob(const std::vector<OperatorMatrix>& matrices, const std::string& path);
std::vector<OperatorMatrix> read_matrix_blob(const std::string& path);

}  // namespace dyson
