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

#ifndef GRIDMARKET_DC_NETWORK_HPP
#define GRIDMARKET_DC_NETWORK_HPP

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gridmarket {

/// Transmission line of the linearized (DC) network.
struct Line {
  std::string id;
  int fromBus = -1;  ///< index into the bus list
  int toBus = -1;
  double reactance = 0.0;  ///< p.u., must be > 0
  double limit = 0.0;      ///< thermal limit F_k (MW), >= 0
};

/// Sensitivity of each line flow (oriented from->to) to a 1 MW injection at
/// a bus, withdrawn at the reference bus.  Column of the reference bus is
/// identically zero.
struct PtdfMatrix {
  Eigen::MatrixXd entries;  // nLine x nBus
  int referenceBus = 0;

  int lineCount() const { return static_cast<int>(entries.rows()); }
  int busCount() const { return static_cast<int>(entries.cols()); }
};

/// Thrown on disconnected networks or singular susceptance systems.
class NetworkError : public std::runtime_error {
 public:
  explicit NetworkError(const std::string& what) : std::runtime_error(what) {}
};

/// Build the PTDF matrix from line reactances.
///
/// The network must be connected; every reactance must be positive.  Flows are
/// oriented along each line's from->to direction.
PtdfMatrix computePtdf(const std::vector<Line>& lines, int busCount,
                       int referenceBus);

/// Flow on every line for one period of net injections (positive = injection).
/// Injections must sum to zero within `balanceTol`.
Eigen::VectorXd lineFlows(const PtdfMatrix& ptdf,
                          const Eigen::VectorXd& injections,
                          double balanceTol = 1e-6);

/// Congestion cost sum_{k,t} F_k * (mu1_{kt} + mu2_{kt}) from the flow-limit
/// shadow prices of a solved equilibrium.  mu1/mu2 are flattened (line-major,
/// period-minor) and must have the same length, a multiple of lines.size().
double congestionCost(const std::vector<Line>& lines,
                      const Eigen::VectorXd& mu1, const Eigen::VectorXd& mu2);

}  // namespace gridmarket

#endif  // GRIDMARKET_DC_NETWORK_HPP
