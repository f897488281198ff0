// Scenario-driven command line for the Dyson-map chain toolkit.
//
//   dysonchain run <scenario.json> [--dim N] [--step H] [--out-dir DIR]
//   dysonchain verify [--out-dir DIR] [--parallel N]
//   dysonchain list-scenarios
//
// Exit status is nonzero iff any check exceeded its tolerance.

#include <future>
#include <iostream>

#include <CLI11.hpp>

#include "dysonchain/io.hpp"
#include "dysonchain/scenario.hpp"

namespace {

int report_and_status(const std::vector<dyson::RunReport>& reports) {
  int failures = 0;
  for (const auto& rep : reports) {
    std::cout << dyson::format_report(rep);
    for (const auto& d : rep.diagnostics) std::cout << "      . " << d << '\n';
    for (const auto& c : rep.checks) failures += c.pass ? 0 : 1;
  }
  std::cout << (failures == 0 ? "all checks passed" : "FAILURES: " + std::to_string(failures))
            << '\n';
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"time-dependent Dyson maps, gauge-linked Hamiltonian chains, and their checks"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir = "out";
  int dim = 0;
  double step = 0.0;
  int parallel = 1;
  bool dump_matrices = false;

  auto* run_cmd = app.add_subcommand("run", "run one scenario file");
  run_cmd->add_option("scenario", scenario_path, "scenario JSON file")->required();
  run_cmd->add_option("--dim", dim, "override Fock dimension");
  run_cmd->add_option("--step", step, "override grid step");
  run_cmd->add_option("--out-dir", out_dir, "output directory");
  run_cmd->add_flag("--dump-matrices", dump_matrices, "write realized map matrices as blobs");

  std::string only;
  auto* verify_cmd = app.add_subcommand("verify", "run the shipped acceptance scenarios");
  verify_cmd->add_option("--out-dir", out_dir, "output directory");
  verify_cmd->add_option("--dim", dim, "override Fock dimension");
  verify_cmd->add_option("--step", step, "override grid step");
  verify_cmd->add_option("--parallel", parallel, "run scenarios on N workers");
  verify_cmd->add_option("--only", only, "run a single named scenario");

  auto* list_cmd = app.add_subcommand("list-scenarios", "list the shipped scenarios");

  std::string dump_dir = "scenarios";
  auto* dump_cmd = app.add_subcommand("dump-scenarios", "write the shipped scenarios as JSON");
  dump_cmd->add_option("dir", dump_dir, "target directory");

  CLI11_PARSE(app, argc, argv);

  dyson::RunOptions opts;
  opts.out_dir = out_dir;
  opts.dump_matrices = dump_matrices;
  if (dim > 0) opts.dim_override = dim;
  if (step > 0) opts.step_override = step;

  try {
    if (list_cmd->parsed()) {
      for (const auto& sc : dyson::builtin_scenarios()) {
        std::cout << sc.name << "  (" << sc.model_type << ", dim " << sc.fock.dim << ", t in ["
                  << sc.grid.t0 << ", " << sc.grid.t1() << "])\n";
      }
      return 0;
    }
    if (dump_cmd->parsed()) {
      for (const auto& sc : dyson::builtin_scenarios()) {
        dyson::save_scenario(sc, dump_dir + "/" + sc.name + ".json");
        std::cout << dump_dir << "/" << sc.name << ".json\n";
      }
      return 0;
    }
    if (run_cmd->parsed()) {
      dyson::Scenario sc = dyson::load_scenario(scenario_path);
      return report_and_status({dyson::run(sc, opts)});
    }
    // verify
    auto scenarios = dyson::builtin_scenarios();
    if (!only.empty()) {
      std::erase_if(scenarios, [&](const auto& sc) { return sc.name != only; });
      if (scenarios.empty()) {
        std::cerr << "error: no scenario named '" << only << "'\n";
        return 2;
      }
    }
    std::vector<dyson::RunReport> reports(scenarios.size());
    if (parallel <= 1) {
      for (size_t i = 0; i < scenarios.size(); ++i) reports[i] = dyson::run(scenarios[i], opts);
    } else {
      std::vector<std::future<dyson::RunReport>> futures;
      size_t next = 0;
      while (next < scenarios.size() || !futures.empty()) {
        while (int(futures.size()) < parallel && next < scenarios.size()) {
          futures.push_back(std::async(std::launch::async,
                                       [&, i = next] { return dyson::run(scenarios[i], opts); }));
          ++next;
        }
        dyson::RunReport rep = futures.front().get();
        futures.erase(futures.begin());
        for (size_t i = 0; i < scenarios.size(); ++i) {
          if (scenarios[i].name == rep.scenario) reports[i] = std::move(rep);
        }
      }
    }
    return report_and_status(reports);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
