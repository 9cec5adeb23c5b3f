/*
 * Copyright 2026 The gridmarket Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// gridmarket: command-line front end.
//
//   gridmarket solve <case> [--scheme ...] [--delta X] [--forward F]
//   gridmarket sweep <case> --deltas a:b:step [--forward f1,f2,...]
//   gridmarket feascheck <case>
//   gridmarket dump-mlcp <case> [--delta X]
//
// Reports land in --output-dir (or $GRIDMARKET_OUTPUT_DIR, or the working
// directory) as <case>_<command>.csv and .json.  Exit codes: 0 success,
// 1 solver failure or infeasible workload, 2 bad input.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gridmarket/aux_dispatch.hpp"
#include "gridmarket/case_io.hpp"
#include "gridmarket/report_io.hpp"
#include "gridmarket/scenario.hpp"

namespace {

constexpr int kExitSolverFailure = 1;
constexpr int kExitInputError = 2;

struct CliOptions {
  std::string casePath;
  std::string outputDir;
  std::optional<std::string> scheme;
  std::optional<double> delta;
  std::optional<double> forward;  // solve-time forward fraction override
  std::string deltaRange;
  std::string forwardList;
  bool errorJson = false;
  bool trace = false;
};

/// "a:b:step" inclusive range or "v1,v2,..." list.
std::vector<double> parseSweepValues(const std::string& text) {
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    double a = 0, b = 0, step = 0;
    char c1 = 0, c2 = 0;
    std::istringstream is(text);
    if (!(is >> a >> c1 >> b >> c2 >> step) || c1 != ':' || c2 != ':' ||
        !is.eof() || step <= 0)
      throw gridmarket::CaseError("bad range '" + text + "', want a:b:step");
    for (double v = a; v <= b + 1e-9; v += step) out.push_back(std::min(v, b));
    return out;
  }
  std::istringstream is(text);
  std::string item;
  while (std::getline(is, item, ',')) {
    if (item.empty()) continue;
    size_t used = 0;
    double v = std::stod(item, &used);
    if (used != item.size())
      throw gridmarket::CaseError("bad number '" + item + "' in list");
    out.push_back(v);
  }
  if (out.empty())
    throw gridmarket::CaseError("empty value list '" + text + "'");
  return out;
}

std::string outputPath(const CliOptions& opt, const std::string& stem) {
  namespace fs = std::filesystem;
  fs::path dir = opt.outputDir;
  if (dir.empty()) {
    if (const char* env = std::getenv("GRIDMARKET_OUTPUT_DIR")) dir = env;
  }
  if (dir.empty()) dir = ".";
  fs::create_directories(dir);
  return (dir / stem).string();
}

gridmarket::MarketCase loadWithOverrides(const CliOptions& opt) {
  gridmarket::MarketCase c = gridmarket::loadCase(opt.casePath);
  if (opt.scheme) {
    c.scheme = *opt.scheme == "exante" ? gridmarket::Scheme::ExAnte
                                       : gridmarket::Scheme::ExPost;
  }
  if (opt.forward) {
    if (*opt.forward > 0.0)
      c.forwardPolicy = gridmarket::ForwardPolicy{*opt.forward};
    else
      c.forwardPolicy.reset();
  }
  return c;
}

void printSummary(const gridmarket::EquilibriumReport& r) {
  std::cout << "case " << r.caseName << "  scheme "
            << (r.scheme == gridmarket::Scheme::ExPost ? "expost" : "exante")
            << "  delta " << r.delta << "  forward " << r.forwardFraction
            << "\n";
  std::cout << "  status " << toString(r.status) << " after " << r.pivotCount
            << " pivots";
  if (r.fixedPointIterations > 0)
    std::cout << " (" << r.fixedPointIterations << " fixed-point iterations"
              << (r.fixedPointConverged ? "" : ", NOT converged") << ")";
  std::cout << "\n";
  std::cout << "  processing cost  local " << r.processingCostLocal
            << "  mdc " << r.processingCostMdc << "  total "
            << r.processingCostTotal << "\n";
  std::cout << "  emissions        local " << r.emissionsLocal << "  mdc "
            << r.emissionsMdc << "  workload " << r.emissionsWorkloadTotal
            << "  system " << r.emissionsSystem << "\n";
  std::cout << "  congestion cost  " << r.congestionCost << "\n";
  for (const gridmarket::MdcOutcome& m : r.mdcs)
    std::cout << "  mdc " << m.busId << "  intensity " << m.intensity
              << " kg/MWh  leasing " << m.leasingPrice << " $/GPU  procured "
              << m.procured << " MWh\n";
}

int runSolve(const CliOptions& opt) {
  gridmarket::MarketCase c = loadWithOverrides(opt);
  gridmarket::SolverConfig cfg = gridmarket::effectiveSolverConfig(c);
  cfg.recordPivotTrace = opt.trace;
  gridmarket::ScenarioResult res =
      c.scheme == gridmarket::Scheme::ExPost
          ? gridmarket::solveExPost(c, cfg, opt.delta)
          : gridmarket::solveExAnte(c, {}, cfg, opt.delta);
  printSummary(res.report);
  std::vector<gridmarket::EquilibriumReport> rows{res.report};
  gridmarket::writeReportCsv(outputPath(opt, c.name + "_solve.csv"), rows);
  gridmarket::writeReportJson(outputPath(opt, c.name + "_solve.json"), rows);
  if (opt.trace) {
    std::ofstream ts(outputPath(opt, c.name + "_pivots.txt"));
    ts << res.solution.pivotTrace;
  }
  if (res.solution.status != gridmarket::SolveStatus::Solved) {
    std::cerr << "solver stopped: " << toString(res.solution.status) << "\n";
    return kExitSolverFailure;
  }
  return 0;
}

int runSweep(const CliOptions& opt) {
  gridmarket::MarketCase c = loadWithOverrides(opt);
  if (opt.deltaRange.empty())
    throw gridmarket::CaseError("sweep needs --deltas a:b:step");
  std::vector<double> deltas = parseSweepValues(opt.deltaRange);
  gridmarket::SolverConfig cfg = gridmarket::effectiveSolverConfig(c);

  std::vector<gridmarket::EquilibriumReport> rows;
  if (opt.forwardList.empty()) {
    rows = gridmarket::deltaSweep(c, deltas, cfg);
  } else {
    rows = gridmarket::forwardSweep(c, parseSweepValues(opt.forwardList),
                                    deltas, cfg);
  }
  gridmarket::writeReportCsv(outputPath(opt, c.name + "_sweep.csv"), rows);
  gridmarket::writeReportJson(outputPath(opt, c.name + "_sweep.json"), rows);
  std::cout << rows.size() << " sweep points written\n";
  for (const gridmarket::EquilibriumReport& r : rows)
    if (r.status != gridmarket::SolveStatus::Solved) {
      std::cerr << "point delta=" << r.delta << " forward="
                << r.forwardFraction << " failed: " << toString(r.status)
                << "\n";
      return kExitSolverFailure;
    }
  return 0;
}

int runFeascheck(const CliOptions& opt) {
  gridmarket::MarketCase c = loadWithOverrides(opt);
  gridmarket::BatchFeasibility f = gridmarket::checkBatchFeasibility(
      c, gridmarket::effectiveSolverConfig(c));
  std::cout << "workload " << f.required << " MW\n";
  for (int t = 0; t < static_cast<int>(f.limit.size()); ++t)
    std::cout << "  period " << t << ": deliverable " << f.limit[t] << " MW"
              << (f.periodOk[t] ? "" : "  <-- short") << "\n";
  std::cout << "verdict: " << (f.feasible ? "feasible" : "infeasible")
            << "\n";
  return f.feasible ? 0 : kExitSolverFailure;
}

int runDumpMlcp(const CliOptions& opt) {
  gridmarket::MarketCase c = loadWithOverrides(opt);
  gridmarket::SchemeContext ctx;
  ctx.scheme = c.scheme;
  ctx.deltaOverride = opt.delta;
  if (c.scheme == gridmarket::Scheme::ExAnte) {
    const gridmarket::BlockLayout probe = gridmarket::buildLayout(c);
    ctx.intensity = gridmarket::IntensityVector::zero(
        probe.nMdc(), probe.T);  // declared intensities start at zero
  }
  gridmarket::MlcpInstance inst = gridmarket::assemble(c, ctx);
  const std::string path = outputPath(opt, c.name + "_mlcp.txt");
  std::ofstream out(path);
  out << gridmarket::dumpInstance(inst);
  std::cout << "wrote " << path << " (" << inst.layout.nz() << " + "
            << inst.layout.npi() << " variables)\n";
  return 0;
}

int dispatch(const std::string& command, const CliOptions& opt) {
  try {
    if (command == "solve") return runSolve(opt);
    if (command == "sweep") return runSweep(opt);
    if (command == "feascheck") return runFeascheck(opt);
    return runDumpMlcp(opt);
  } catch (const gridmarket::WorkloadInfeasible& e) {
    if (opt.errorJson)
      gridmarket::writeErrorJson(std::cout, "workload-infeasible", e.what());
    else
      std::cerr << "error: " << e.what() << "\n";
    return kExitSolverFailure;
  } catch (const gridmarket::ParseError& e) {
    if (opt.errorJson)
      gridmarket::writeErrorJson(std::cout, "parse-error", e.what());
    else
      std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    if (opt.errorJson)
      gridmarket::writeErrorJson(std::cout, "input-error", e.what());
    else
      std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bilateral electricity market equilibria with datacenters"};
  app.require_subcommand(1);

  CliOptions opt;
  std::string schemeArg;
  double deltaArg = 0.0;
  double forwardArg = 0.0;
  CLI::Option* deltaOptSolve = nullptr;
  CLI::Option* deltaOptDump = nullptr;

  auto addCommon = [&](CLI::App* cmd) {
    cmd->add_option("case", opt.casePath, "case file")->required();
    cmd->add_option("--output-dir", opt.outputDir,
                    "report directory (default $GRIDMARKET_OUTPUT_DIR)");
    cmd->add_flag("--error-json", opt.errorJson,
                  "print failures as JSON on stdout");
    cmd->add_option("--scheme", schemeArg, "disclosure scheme")
        ->check(CLI::IsMember({"expost", "exante"}));
  };

  CLI::App* solve = app.add_subcommand("solve", "solve one scenario");
  addCommon(solve);
  deltaOptSolve = solve->add_option(
      "--delta", deltaArg, "override the hyperscaler's cost weight");
  CLI::Option* fwdOpt = solve->add_option(
      "--forward", forwardArg, "forward-contract fraction (0 disables)");
  solve->add_flag("--trace", opt.trace, "write the pivot sequence");

  CLI::App* sweep = app.add_subcommand("sweep", "grid of scenario solves");
  addCommon(sweep);
  sweep->add_option("--deltas", opt.deltaRange, "a:b:step or v1,v2,...")
      ->required();
  sweep->add_option("--forward", opt.forwardList,
                    "forward fractions f1,f2,... (adds a sweep axis)");

  CLI::App* feas = app.add_subcommand("feascheck",
                                      "deliverable-power workload screen");
  addCommon(feas);

  CLI::App* dump = app.add_subcommand("dump-mlcp",
                                      "write the assembled problem triplets");
  addCommon(dump);
  deltaOptDump = dump->add_option(
      "--delta", deltaArg, "override the hyperscaler's cost weight");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInputError;
  }

  CLI::App* cmd = app.get_subcommands().front();
  (void)feas;
  // CLI11 binds into plain values; lift the ones actually given into the
  // optional overrides.
  if (cmd->count("--scheme")) opt.scheme = schemeArg;
  if ((cmd == solve && deltaOptSolve->count()) ||
      (cmd == dump && deltaOptDump->count()))
    opt.delta = deltaArg;
  if (cmd == solve && fwdOpt->count()) opt.forward = forwardArg;

  return dispatch(cmd->get_name(), opt);
}
