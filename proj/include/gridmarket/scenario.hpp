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

#ifndef GRIDMARKET_SCENARIO_HPP
#define GRIDMARKET_SCENARIO_HPP

#include <optional>
#include <string>
#include <vector>

#include "gridmarket/aux_dispatch.hpp"
#include "gridmarket/kkt_assembly.hpp"
#include "gridmarket/market_model.hpp"
#include "gridmarket/mlcp_solver.hpp"

namespace gridmarket {

/// Workload exceeds the deliverable compute power (screened before any
/// equilibrium solve).
class WorkloadInfeasible : public std::runtime_error {
 public:
  WorkloadInfeasible(double required, double limit, int period);
  double required;
  double limit;
  int period;
};

struct FixedPointConfig {
  double damping = 0.5;    ///< weight on the freshly measured intensity
  double tolerance = 1e-6; ///< max-norm change that counts as converged
  int maxIterations = 100;
};

/// Per-MDC aggregates over the horizon.
struct MdcOutcome {
  int bus = -1;
  std::string busId;
  double leased = 0.0;       ///< MWh of leased compute, sum of k^r
  double procured = 0.0;     ///< MWh bought bilaterally, sum of p
  double spilled = 0.0;      ///< MWh of renewables left unused
  double endowment = 0.0;    ///< MWh of curtailed renewables granted
  double intensity = 0.0;           ///< kg/MWh over procurement
  double leasingPrice = 0.0;        ///< $/GPU, mean over batches and periods
  double avgProcurementCost = 0.0;  ///< $/MWh, price-weighted
};

/// Scenario outcome in reporting units: costs, emissions, intensities,
/// leasing and contract prices, congestion.
struct EquilibriumReport {
  std::string caseName;
  Scheme scheme = Scheme::ExPost;
  double delta = 1.0;
  double forwardFraction = 0.0;
  SolveStatus status = SolveStatus::Solved;
  int pivotCount = 0;
  int fixedPointIterations = 0;
  bool fixedPointConverged = true;

  double processingCostLocal = 0.0;  ///< sum of l * thetaK
  double processingCostMdc = 0.0;    ///< sum of nu * alpha * ks
  double processingCostTotal = 0.0;
  double emissionsLocal = 0.0;       ///< t, local processing purchases
  double emissionsMdc = 0.0;         ///< t, MDC procurement
  double emissionsWorkloadTotal = 0.0;
  double emissionsSystem = 0.0;      ///< t, every bilateral sale
  double congestionCost = 0.0;

  std::vector<MdcOutcome> mdcs;  ///< in MDC slot (bus) order
  IntensityVector intensity;     ///< realized per (MDC, period), t/MWh

  Eigen::VectorXd thetaD;         ///< consumer contract prices
  Eigen::VectorXd thetaX;         ///< MDC contract prices
  Eigen::VectorXd thetaK;         ///< hyperscaler contract prices
  Eigen::VectorXd omega;          ///< wheeling charges
  Eigen::VectorXd leasingPrices;  ///< full alpha block
};

struct ScenarioResult {
  EquilibriumSolution solution;
  EquilibriumReport report;
  int iterations = 0;  ///< fixed-point iterations (0 for single solves)
};

/// One assembly, one solve; intensities are measured afterwards.
ScenarioResult solveExPost(const MarketCase& c, const SolverConfig& solver = {},
                           std::optional<double> deltaOverride = {});

/// Damped fixed point on the disclosed intensities: solve with a frozen
/// estimate, measure, blend, repeat until the estimate settles.
ScenarioResult solveExAnte(const MarketCase& c,
                           const FixedPointConfig& fixedPoint = {},
                           const SolverConfig& solver = {},
                           std::optional<double> deltaOverride = {});

/// Independent solves per delta under the case's scheme (no warm starts).
std::vector<EquilibriumReport> deltaSweep(const MarketCase& c,
                                          const std::vector<double>& deltas,
                                          const SolverConfig& solver = {},
                                          const FixedPointConfig& fp = {});

/// Forward-contract study: per delta, the zero-workload market is solved
/// once to fix the contracted sale quantities; every positive fraction then
/// re-solves the full market with lower bounds at fraction x those sales.
/// Fraction 0 rows are plain unbounded solves (the deltaSweep points).
std::vector<EquilibriumReport> forwardSweep(const MarketCase& c,
                                            const std::vector<double>& fractions,
                                            const std::vector<double>& deltas,
                                            const SolverConfig& solver = {},
                                            const FixedPointConfig& fp = {});

/// Realized procurement intensity per (MDC, period) of a solved instance:
/// emission-weighted procurement over procurement, zero when nothing is
/// procured.
IntensityVector measuredIntensity(const MarketCase& c,
                                  const BlockLayout& layout,
                                  const Eigen::VectorXd& z);

/// Reporting-unit extraction from a solved instance.
EquilibriumReport extractReport(const MarketCase& c,
                                const MlcpInstance& instance,
                                const EquilibriumSolution& sol);

}  // namespace gridmarket

#endif  // GRIDMARKET_SCENARIO_HPP
