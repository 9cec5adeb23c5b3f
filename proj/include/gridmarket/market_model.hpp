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

#ifndef GRIDMARKET_MARKET_MODEL_HPP
#define GRIDMARKET_MARKET_MODEL_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gridmarket/dc_network.hpp"

namespace gridmarket {

enum class BusKind { ConventionalLoad, Hyperscaler, Mdc, Transit };

struct Bus {
  std::string id;
  BusKind kind = BusKind::Transit;
};

/// One dispatchable plant (j,h): owning bus plus an affine marginal cost
/// c0 + c1 * g on each bilateral position it sells.
struct Generator {
  std::string id;
  int bus = -1;            ///< index into MarketCase::buses
  double c0 = 0.0;         ///< marginal-cost intercept ($/MWh)
  double c1 = 0.0;         ///< marginal-cost slope ($/MWh per MWh), >= 0
  double capacity = 0.0;   ///< total sales cap per period (MW)
  double emissionRate = 0.0;  ///< t CO2 per MWh
};

/// Affine inverse demand b0 - b1 * D at one conventional-load bus and period.
struct DemandCurve {
  int bus = -1;
  int period = 0;
  double b0 = 0.0;
  double b1 = 0.0;  ///< >= 0
};

/// Edge datacenter leasing GPU capacity, endowed with otherwise-curtailed
/// renewable energy.
struct MdcSpec {
  int bus = -1;
  double capacity = 0.0;  ///< Cap_i (MW)
  /// Curtailed endowment per renewable unit id & period (MWh): unit -> [t].
  std::map<std::string, std::vector<double>> curtailedEndowment;
  std::vector<std::string> admissibleBatches;  ///< subset of batch ids

  double endowmentTotal(int t) const {
    double total = 0.0;
    for (const auto& [unit, series] : curtailedEndowment)
      if (t < static_cast<int>(series.size())) total += series[t];
    return total;
  }
};

struct Batch {
  std::string id;
  double load = 0.0;  ///< q_b, MWh per period (the same load every period)
};

struct HyperscalerSpec {
  int bus = -1;
  std::vector<Batch> batches;
  double delta = 0.5;            ///< cost-vs-emissions preference in [0,1]
  double gpuPowerFactor = 1000;  ///< nu, GPU per MW
};

enum class Scheme { ExPost, ExAnte };

/// Optional lower bounds g >= phi * g(baseline) on consumer-side positions.
struct ForwardPolicy {
  double fraction = 0.0;  ///< phi in [0,1]
};

/// Per-case tweaks to the pivoting solver, carried alongside the data so a
/// case file can ship its own numerics.  Unset fields keep solver defaults.
struct SolverOverrides {
  std::optional<int> maxPivots;
  std::optional<double> pivotTolerance;
  std::optional<double> complementarityTolerance;
  std::optional<bool> parallel;
  std::optional<bool> equilibrate;
};

struct MarketCase {
  std::string name;
  std::vector<Bus> buses;
  std::vector<Line> lines;
  int hubBus = 0;  ///< reference bus for the PTDF / wheeling hub
  std::vector<Generator> generators;
  std::vector<DemandCurve> demandCurves;
  std::optional<HyperscalerSpec> hyperscaler;
  std::vector<MdcSpec> mdcs;
  int periods = 1;
  Scheme scheme = Scheme::ExPost;
  std::optional<ForwardPolicy> forwardPolicy;
  SolverOverrides solverOverrides;

  int busIndex(const std::string& id) const;
  const Bus* findBus(int index) const;
};

/// Check every structural invariant of a case.  Returns human-readable
/// violation strings; empty means the case is well formed.  Never throws on
/// bad data.
std::vector<std::string> validateCase(const MarketCase& c);

class CalibrationError : public std::runtime_error {
 public:
  explicit CalibrationError(const std::string& what)
      : std::runtime_error(what) {}
};

/// Per-bus inputs for one period of demand calibration.
struct CalibrationPoint {
  int bus = -1;
  int period = 0;
  double load = 0.0;  ///< L_i (MW), > 0
  double dual = 0.0;  ///< least-cost dispatch price P_i ($/MWh)
};

/// Fit one affine inverse-demand curve per calibration point so that the
/// curve passes through (L_i, P_i) with the given point elasticity:
///   b1 = -P / (elasticity * L),   b0 = P + b1 * L.
/// elasticity must be < 0.
std::vector<DemandCurve> calibrateDemand(
    const std::vector<CalibrationPoint>& points, double elasticity);

}  // namespace gridmarket

#endif  // GRIDMARKET_MARKET_MODEL_HPP
