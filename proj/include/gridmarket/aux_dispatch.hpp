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

#ifndef GRIDMARKET_AUX_DISPATCH_HPP
#define GRIDMARKET_AUX_DISPATCH_HPP

#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "gridmarket/market_model.hpp"
#include "gridmarket/mlcp_solver.hpp"

namespace gridmarket {

class DispatchError : public std::runtime_error {
 public:
  explicit DispatchError(const std::string& what)
      : std::runtime_error(what) {}
};

/// Maximum total power deliverable to the compute sites (MDC buses capped at
/// their rack capacity, the hyperscaler bus uncapped) in one period, given
/// plant capacities, MDC renewable endowments, and line limits.  Computed by
/// complementary pivoting on the throughput LP's optimality system.
double throughputLimit(const MarketCase& c, int period,
                       const SolverConfig& config = {});

struct BatchFeasibility {
  Eigen::VectorXd limit;        ///< deliverable power per period
  double required = 0.0;        ///< total batch load per period
  std::vector<bool> periodOk;   ///< required <= limit, up to 1e-6
  bool feasible = true;         ///< all periods pass
};

/// Screen the case before an equilibrium run: the batch workload must fit
/// within the deliverable compute power in every period.
BatchFeasibility checkBatchFeasibility(const MarketCase& c,
                                       const SolverConfig& config = {});

struct DispatchSolution {
  Eigen::MatrixXd price;   ///< nodal prices, nBus x T
  Eigen::MatrixXd output;  ///< plant dispatch, nPlant x T
  double cost = 0.0;       ///< total production cost over all periods
};

/// Least-cost dispatch of fixed nodal loads (nBus x T) against the case's
/// plants and network; returns nodal prices for demand-curve calibration.
/// Throws DispatchError when some period's load cannot be served.
DispatchSolution leastCostDispatchDuals(const MarketCase& c,
                                        const Eigen::MatrixXd& loads,
                                        const SolverConfig& config = {});

}  // namespace gridmarket

#endif  // GRIDMARKET_AUX_DISPATCH_HPP
