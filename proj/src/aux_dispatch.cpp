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

#include "gridmarket/aux_dispatch.hpp"

#include <cmath>
#include <string>

#include "gridmarket/dc_network.hpp"

namespace gridmarket {

namespace {

struct Supply {
  int bus;
  double capacity;
};

/// Optimality system of:  maximise sum w  subject to
///   w_s <= cap_s (capped sites), sum w = sum g, 0 <= g <= G,
///   |PTDF (S w - A g)| <= F.
/// Solved as an MLCP with a single free balance price.
double solveThroughput(const std::vector<int>& siteBuses,
                       const std::vector<bool>& siteCapped,
                       const std::vector<double>& siteCaps,
                       const std::vector<Supply>& supplies,
                       const PtdfMatrix& ptdf, const std::vector<Line>& lines,
                       const SolverConfig& config) {
  const int nSite = static_cast<int>(siteBuses.size());
  const int nSup = static_cast<int>(supplies.size());
  const int nLine = static_cast<int>(lines.size());
  int nCapped = 0;
  for (bool capped : siteCapped) nCapped += capped ? 1 : 0;

  const int offW = 0;
  const int offG = nSite;
  const int offLam = offG + nSup;
  const int offCap = offLam + nSup;
  const int offMu1 = offCap + nCapped;
  const int offMu2 = offMu1 + nLine;
  const int nz = offMu2 + nLine;

  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(nz, nz);
  Eigen::MatrixXd N = Eigen::MatrixXd::Zero(nz, 1);
  Eigen::VectorXd q = Eigen::VectorXd::Zero(nz);

  std::vector<int> capSlot(nSite, -1);
  int nextCap = 0;
  for (int s = 0; s < nSite; ++s) {
    if (siteCapped[s]) capSlot[s] = nextCap++;
  }

  for (int s = 0; s < nSite; ++s) {
    const int row = offW + s;
    q[row] = -1.0;
    N(row, 0) = 1.0;
    if (capSlot[s] >= 0) M(row, offCap + capSlot[s]) = 1.0;
    for (int k = 0; k < nLine; ++k) {
      const double v = ptdf.entries(k, siteBuses[s]);
      M(row, offMu1 + k) = -v;
      M(row, offMu2 + k) = v;
    }
  }
  for (int c = 0; c < nSup; ++c) {
    const int row = offG + c;
    N(row, 0) = -1.0;
    M(row, offLam + c) = 1.0;
    for (int k = 0; k < nLine; ++k) {
      const double v = ptdf.entries(k, supplies[c].bus);
      M(row, offMu1 + k) = v;
      M(row, offMu2 + k) = -v;
    }
    M(offLam + c, row) = -1.0;
    q[offLam + c] = supplies[c].capacity;
  }
  for (int s = 0; s < nSite; ++s) {
    if (capSlot[s] < 0) continue;
    const int row = offCap + capSlot[s];
    M(row, offW + s) = -1.0;
    q[row] = siteCaps[s];
  }
  for (int k = 0; k < nLine; ++k) {
    for (int s = 0; s < nSite; ++s)
      M(offMu1 + k, offW + s) = ptdf.entries(k, siteBuses[s]);
    for (int c = 0; c < nSup; ++c)
      M(offMu1 + k, offG + c) = -ptdf.entries(k, supplies[c].bus);
    M.row(offMu2 + k).head(offLam) = -M.row(offMu1 + k).head(offLam);
    q[offMu1 + k] = lines[k].limit;
    q[offMu2 + k] = lines[k].limit;
  }

  MlcpInstance inst = makeInstance(M, N, Eigen::MatrixXd::Zero(1, 1), q,
                                   Eigen::VectorXd::Zero(1));
  EquilibriumSolution sol = solveMixed(inst, config);
  if (sol.status != SolveStatus::Solved) {
    throw DispatchError(std::string("throughput subproblem ended with "
                                    "status '") +
                        toString(sol.status) + "'");
  }
  return sol.z.head(nSite).sum();
}

}  // namespace

double throughputLimit(const MarketCase& c, int period,
                       const SolverConfig& config) {
  if (period < 0 || period >= c.periods) {
    throw DispatchError("period " + std::to_string(period) +
                        " outside [0, " + std::to_string(c.periods) + ")");
  }
  auto violations = validateCase(c);
  if (!violations.empty()) {
    throw DispatchError("invalid case: " + violations.front());
  }

  std::vector<int> siteBuses;
  std::vector<bool> siteCapped;
  std::vector<double> siteCaps;
  std::vector<Supply> supplies;
  for (const Generator& g : c.generators)
    supplies.push_back({g.bus, g.capacity});
  for (const MdcSpec& m : c.mdcs) {
    siteBuses.push_back(m.bus);
    siteCapped.push_back(true);
    siteCaps.push_back(m.capacity);
    supplies.push_back({m.bus, m.endowmentTotal(period)});
  }
  if (c.hyperscaler) {
    siteBuses.push_back(c.hyperscaler->bus);
    siteCapped.push_back(false);
    siteCaps.push_back(0.0);
  }
  if (siteBuses.empty()) return 0.0;

  PtdfMatrix ptdf =
      computePtdf(c.lines, static_cast<int>(c.buses.size()), c.hubBus);
  return solveThroughput(siteBuses, siteCapped, siteCaps, supplies, ptdf,
                         c.lines, config);
}

BatchFeasibility checkBatchFeasibility(const MarketCase& c,
                                       const SolverConfig& config) {
  BatchFeasibility rep;
  rep.limit = Eigen::VectorXd::Zero(c.periods);
  if (c.hyperscaler) {
    for (const Batch& b : c.hyperscaler->batches) rep.required += b.load;
  }
  for (int t = 0; t < c.periods; ++t) {
    rep.limit[t] = throughputLimit(c, t, config);
    const bool ok = rep.required <= rep.limit[t] + 1e-6;
    rep.periodOk.push_back(ok);
    rep.feasible = rep.feasible && ok;
  }
  return rep;
}

DispatchSolution leastCostDispatchDuals(const MarketCase& c,
                                        const Eigen::MatrixXd& loads,
                                        const SolverConfig& config) {
  auto violations = validateCase(c);
  if (!violations.empty()) {
    throw DispatchError("invalid case: " + violations.front());
  }
  const int nBus = static_cast<int>(c.buses.size());
  const int nPlant = static_cast<int>(c.generators.size());
  const int nLine = static_cast<int>(c.lines.size());
  if (loads.rows() != nBus || loads.cols() != c.periods) {
    throw DispatchError("load matrix must be nBus x periods");
  }
  if (loads.minCoeff() < 0.0) {
    throw DispatchError("nodal loads must be nonnegative");
  }

  PtdfMatrix ptdf = computePtdf(c.lines, nBus, c.hubBus);

  DispatchSolution out;
  out.price = Eigen::MatrixXd::Zero(nBus, c.periods);
  out.output = Eigen::MatrixXd::Zero(nPlant, c.periods);

  const int offG = 0;
  const int offLam = nPlant;
  const int offMu1 = offLam + nPlant;
  const int offMu2 = offMu1 + nLine;
  const int nz = offMu2 + nLine;

  for (int t = 0; t < c.periods; ++t) {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(nz, nz);
    Eigen::MatrixXd N = Eigen::MatrixXd::Zero(nz, 1);
    Eigen::VectorXd q = Eigen::VectorXd::Zero(nz);
    Eigen::VectorXd flow0 = ptdf.entries * loads.col(t);

    for (int a = 0; a < nPlant; ++a) {
      const Generator& gen = c.generators[a];
      const int row = offG + a;
      M(row, row) = gen.c1;
      M(row, offLam + a) = 1.0;
      N(row, 0) = -1.0;
      q[row] = gen.c0;
      for (int k = 0; k < nLine; ++k) {
        const double v = ptdf.entries(k, gen.bus);
        M(row, offMu1 + k) = v;
        M(row, offMu2 + k) = -v;
        M(offMu1 + k, row) = -v;
        M(offMu2 + k, row) = v;
      }
      M(offLam + a, row) = -1.0;
      q[offLam + a] = gen.capacity;
    }
    for (int k = 0; k < nLine; ++k) {
      q[offMu1 + k] = c.lines[k].limit + flow0[k];
      q[offMu2 + k] = c.lines[k].limit - flow0[k];
    }
    Eigen::VectorXd r(1);
    r[0] = -loads.col(t).sum();

    MlcpInstance inst =
        makeInstance(M, N, Eigen::MatrixXd::Zero(1, 1), q, r);
    EquilibriumSolution sol = solveMixed(inst, config);
    if (sol.status != SolveStatus::Solved) {
      throw DispatchError("period " + std::to_string(t) +
                          " dispatch ended with status '" +
                          toString(sol.status) + "'");
    }

    const double gamma = sol.pi[0];
    Eigen::VectorXd mu1 = sol.z.segment(offMu1, nLine);
    Eigen::VectorXd mu2 = sol.z.segment(offMu2, nLine);
    for (int i = 0; i < nBus; ++i) {
      double congestion = 0.0;
      for (int k = 0; k < nLine; ++k)
        congestion += ptdf.entries(k, i) * (mu2[k] - mu1[k]);
      out.price(i, t) = gamma + congestion;
    }
    for (int a = 0; a < nPlant; ++a) {
      const double g = sol.z[offG + a];
      out.output(a, t) = g;
      out.cost += c.generators[a].c0 * g + 0.5 * c.generators[a].c1 * g * g;
    }
  }
  return out;
}

}  // namespace gridmarket
