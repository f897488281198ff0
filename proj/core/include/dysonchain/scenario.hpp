#pragma once

#include <optional>

#include "dysonchain/evolve.hpp"

namespace dyson {

/// One requested Dyson-map solve, attached to a chain level.
struct MapRequest {
  std::string kind;  // bar_closed_form | gamma_ode | swanson_newton | swanson_ode | schrodinger_like
  int level = 0;     // the link this map serves (map from level -> level+1)
  Complex gamma0{};
  double epsilon = 0.2;   // SU(1,1) chart gauge for the Newton solve
  double abs_mu0 = 0.05;  // Newton seed
  double varphi0 = 0.0;
  std::string eta0_source = "bar";  // schrodinger_like: "bar" or "identity"
};

struct EvolutionSpec {
  bool enabled = false;
  Complex phi0{};
  Complex theta0{};
  int fock_label = 0;
  std::vector<std::string> observables;  // subset of {"x1","x2"}
};

struct Scenario {
  std::string name;
  std::string model_type;  // "linear" | "swanson"
  LinearModel linear{constant_track(1.0), constant_track(0.0), constant_track(0.0)};
  SwansonModel swanson{constant_track(1.0), constant_track(0.0), constant_track(0.0)};
  FockConfig fock;
  TimeGrid grid;
  std::vector<MapRequest> maps;
  int chain_min = 0, chain_max = 0;
  int gauge_guard = 20;        // identity-part extraction guard
  int oracle_guard = 30;       // SU(1,1) matrix-oracle guard
  std::string expected_gauge;  // "global", "local", or empty for no expectation
  EvolutionSpec evolution;
  std::vector<std::string> extra_checks;
  int chain_derivative_sign = +1;  // fault-injection knob, +1 is physical

  void validate() const;
};

struct CheckResult {
  std::string name;
  double measured = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  bool invert = false;  // pass means "measured >= tolerance" (sensitivity checks)
  std::string note;
};

struct RunReport {
  std::string scenario;
  std::vector<CheckResult> checks;
  std::vector<std::string> diagnostics;
  double total_ms = 0.0;
  bool all_passed() const;
  const CheckResult* find(const std::string& name) const;
};

struct RunOptions {
  std::string out_dir = "out";
  bool write_outputs = true;
  bool dump_matrices = false;  // realized map matrices as binary blobs (large)
  std::optional<int> dim_override;
  std::optional<double> step_override;
};

Scenario load_scenario(const std::string& path);
void save_scenario(const Scenario& scenario, const std::string& path);
std::string scenario_to_json(const Scenario& scenario);
Scenario scenario_from_json(const std::string& text);

/// The reproducible scenarios shipped with the library.
std::vector<Scenario> builtin_scenarios();

/// Execute the pipeline: map solves -> chain build -> gauge analysis ->
/// evolution -> cross checks, plus any named extra checks. Artifacts go to
/// <out_dir>/<scenario>/ when write_outputs is set.
RunReport run(const Scenario& scenario, const RunOptions& options = {});

/// Run every built-in scenario and aggregate.
std::vector<RunReport> verify_all(const RunOptions& options = {});

/// Render one pass/fail line per check.
std::string format_report(const RunReport& report);

}  // namespace dyson
