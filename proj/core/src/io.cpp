#include "dysonchain/io.hpp"

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>

#include <json.hpp>

namespace dyson {

namespace {

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(path, mode);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  return f;
}

}  // namespace

void write_map_csv(const DysonMapSolution& map, const std::string& path, int stride) {
  auto f = open_out(path);
  f << std::setprecision(17);
  f << "t,family,param1,param2,param3,eta_norm,eta_cond,eta_hermiticity,rho_min_eig\n";
  for (int k = 0; k <= map.grid().steps; k += stride) {
    auto d = map.point_diagnostics(k);
    double p1 = 0, p2 = 0, p3 = 0;
    switch (map.family()) {
      case MapFamily::kBarDisplacement:
      case MapFamily::kGammaOde: {
        Complex g = map.gamma(k);
        p1 = g.real();
        p2 = g.imag();
        break;
      }
      case MapFamily::kSu11Stationary:
      case MapFamily::kSu11Invariant: {
        Eigen::Vector3d c = map.su11_chart(k);
        p1 = c[0];
        p2 = c[1];
        p3 = c[2];
        break;
      }
      case MapFamily::kMatrixPropagated:
        break;
    }
    f << map.grid().time(k) << ',' << map_family_name(map.family()) << ',' << p1 << ',' << p2
      << ',' << p3 << ',' << d.eta_norm << ',' << d.eta_condition << ',' << d.eta_hermiticity
      << ',' << d.rho_min_eigenvalue << '\n';
  }
}

void write_chain_csv(const std::vector<ChainCsvRow>& rows, const std::string& path) {
  auto f = open_out(path);
  f << std::setprecision(17);
  f << "k,t,herm_residual,gauge_kind,C_re,C_im,phase_re,phase_im,collapse_deviation\n";
  for (const auto& r : rows) {
    f << r.level << ',' << r.t << ',' << r.herm_residual << ',' << r.gauge_kind << ','
      << r.c.real() << ',' << r.c.imag() << ',' << r.phase.real() << ',' << r.phase.imag() << ','
      << r.collapse_deviation << '\n';
  }
}

void write_trajectory_csv(const TrajectoryRecord& traj, const QuadratureReport* quad,
                          const std::string& path, int stride) {
  auto f = open_out(path);
  f << std::setprecision(17);
  f << "t,flat_norm,metric_norm,x1,x2,x1_closed_form,x2_closed_form\n";
  for (int k = 0; k < traj.grid.points(); k += stride) {
    f << traj.grid.time(k) << ',' << (k < int(traj.flat_norm.size()) ? traj.flat_norm[k] : 0.0)
      << ',' << (k < int(traj.metric_norm.size()) ? traj.metric_norm[k] : 0.0);
    if (quad) {
      f << ',' << quad->x1_flat[k] << ',' << quad->x2_flat[k] << ',' << quad->x1_closed[k] << ','
        << quad->x2_closed[k];
    } else {
      f << ",,,,";
    }
    f << '\n';
  }
}

void write_report_json(const RunReport& report, const std::string& path) {
  nlohmann::json j;
  j["scenario"] = report.scenario;
  j["timings_ms"] = report.total_ms;
  j["checks"] = nlohmann::json::array();
  for (const auto& c : report.checks) {
    j["checks"].push_back({{"name", c.name},
                           {"measured", c.measured},
                           {"tolerance", c.tolerance},
                           {"pass", c.pass}});
  }
  j["diagnostics"] = report.diagnostics;
  auto f = open_out(path);
  f << j.dump(2) << '\n';
}

void write_matrix_blob(const std::vector<OperatorMatrix>& matrices, const std::string& path) {
  if (matrices.empty()) throw std::invalid_argument("write_matrix_blob: nothing to write");
  auto f = open_out(path, std::ios::binary);
  const char magic[8] = {'D', 'Y', 'S', 'N', 'B', 'L', 'O', 'B'};
  const std::uint32_t dim = std::uint32_t(matrices[0].rows());
  const std::uint32_t count = std::uint32_t(matrices.size());
  f.write(magic, 8);
  f.write(reinterpret_cast<const char*>(&dim), 4);
  f.write(reinterpret_cast<const char*>(&count), 4);
  std::vector<Complex> row(dim);
  for (const auto& m : matrices) {
    if (std::uint32_t(m.rows()) != dim || std::uint32_t(m.cols()) != dim) {
      throw std::invalid_argument("write_matrix_blob: inhomogeneous dimensions");
    }
    for (std::uint32_t r = 0; r < dim; ++r) {
      for (std::uint32_t c = 0; c < dim; ++c) row[c] = m(r, c);
      f.write(reinterpret_cast<const char*>(row.data()), std::streamsize(dim * sizeof(Complex)));
    }
  }
}

std::vector<OperatorMatrix> read_matrix_blob(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open blob: " + path);
  char magic[8];
  f.read(magic, 8);
  if (std::memcmp(magic, "DYSNBLOB", 8) != 0) throw std::runtime_error("bad blob magic");
  std::uint32_t dim = 0, count = 0;
  f.read(reinterpret_cast<char*>(&dim), 4);
  f.read(reinterpret_cast<char*>(&count), 4);
  std::vector<OperatorMatrix> out(count, OperatorMatrix(dim, dim));
  std::vector<Complex> row(dim);
  for (auto& m : out) {
    for (std::uint32_t r = 0; r < dim; ++r) {
      f.read(reinterpret_cast<char*>(row.data()), std::streamsize(dim * sizeof(Complex)));
      for (std::uint32_t c = 0; c < dim; ++c) m(r, c) = row[c];
    }
  }
  if (!f) throw std::runtime_error("truncated blob: " + path);
  return out;
}

}  // namespace dyson
