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

#include "gridmarket/dc_network.hpp"

#include <cmath>
#include <queue>

namespace gridmarket {

namespace {

void checkConnected(const std::vector<Line>& lines, int busCount) {
  if (busCount <= 0) throw NetworkError("network has no buses");
  std::vector<std::vector<int>> adj(busCount);
  for (const Line& ln : lines) {
    adj[ln.fromBus].push_back(ln.toBus);
    adj[ln.toBus].push_back(ln.fromBus);
  }
  std::vector<char> seen(busCount, 0);
  std::queue<int> work;
  work.push(0);
  seen[0] = 1;
  int reached = 1;
  while (!work.empty()) {
    int u = work.front();
    work.pop();
    for (int v : adj[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++reached;
        work.push(v);
      }
    }
  }
  if (reached != busCount)
    throw NetworkError("network is disconnected (" + std::to_string(reached) +
                       " of " + std::to_string(busCount) + " buses reachable)");
}

}  // namespace

PtdfMatrix computePtdf(const std::vector<Line>& lines, int busCount,
                       int referenceBus) {
  if (referenceBus < 0 || referenceBus >= busCount)
    throw NetworkError("reference bus out of range");
  for (const Line& ln : lines) {
    if (ln.fromBus < 0 || ln.fromBus >= busCount || ln.toBus < 0 ||
        ln.toBus >= busCount)
      throw NetworkError("line " + ln.id + " references unknown bus");
    if (ln.fromBus == ln.toBus)
      throw NetworkError("line " + ln.id + " connects a bus to itself");
    if (!(ln.reactance > 0.0))
      throw NetworkError("line " + ln.id + " has non-positive reactance");
  }
  if (busCount > 1) checkConnected(lines, busCount);

  const int nL = static_cast<int>(lines.size());
  PtdfMatrix out;
  out.referenceBus = referenceBus;
  out.entries = Eigen::MatrixXd::Zero(nL, busCount);
  if (nL == 0 || busCount == 1) return out;

  // Nodal susceptance matrix B, then the reduced system without the
  // reference bus.  PTDF_{ki} = (1/x_k) * (theta_from - theta_to) for a unit
  // injection at bus i withdrawn at the reference.
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(busCount, busCount);
  for (const Line& ln : lines) {
    const double b = 1.0 / ln.reactance;
    B(ln.fromBus, ln.fromBus) += b;
    B(ln.toBus, ln.toBus) += b;
    B(ln.fromBus, ln.toBus) -= b;
    B(ln.toBus, ln.fromBus) -= b;
  }

  std::vector<int> keep;
  keep.reserve(busCount - 1);
  for (int i = 0; i < busCount; ++i)
    if (i != referenceBus) keep.push_back(i);

  const int nR = busCount - 1;
  Eigen::MatrixXd Bred(nR, nR);
  for (int a = 0; a < nR; ++a)
    for (int b = 0; b < nR; ++b) Bred(a, b) = B(keep[a], keep[b]);

  Eigen::FullPivLU<Eigen::MatrixXd> lu(Bred);
  if (!lu.isInvertible())
    throw NetworkError("reduced susceptance matrix is singular");

  // Solve one column of angles per non-reference bus.
  Eigen::MatrixXd thetaRed = lu.solve(Eigen::MatrixXd::Identity(nR, nR));

  // Expand angles back to full bus indexing (theta at the reference is 0).
  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(busCount, busCount);
  for (int a = 0; a < nR; ++a)
    for (int c = 0; c < nR; ++c) theta(keep[a], keep[c]) = thetaRed(a, c);

  for (int k = 0; k < nL; ++k) {
    const Line& ln = lines[k];
    const double b = 1.0 / ln.reactance;
    for (int c = 0; c < nR; ++c) {
      const int bus = keep[c];
      out.entries(k, bus) = b * (theta(ln.fromBus, bus) - theta(ln.toBus, bus));
    }
  }
  return out;
}

Eigen::VectorXd lineFlows(const PtdfMatrix& ptdf,
                          const Eigen::VectorXd& injections,
                          double balanceTol) {
  if (injections.size() != ptdf.busCount())
    throw NetworkError("injection vector length does not match bus count");
  const double imbalance = injections.sum();
  if (std::abs(imbalance) > balanceTol)
    throw NetworkError("injections do not balance (sum = " +
                       std::to_string(imbalance) + ")");
  return ptdf.entries * injections;
}

double congestionCost(const std::vector<Line>& lines,
                      const Eigen::VectorXd& mu1, const Eigen::VectorXd& mu2) {
  const int nL = static_cast<int>(lines.size());
  if (mu1.size() != mu2.size())
    throw NetworkError("flow multiplier vectors differ in length");
  if (nL == 0) return 0.0;
  if (mu1.size() % nL != 0)
    throw NetworkError("flow multiplier length is not a multiple of lines");
  const int T = static_cast<int>(mu1.size()) / nL;
  double total = 0.0;
  for (int k = 0; k < nL; ++k)
    for (int t = 0; t < T; ++t) {
      const int idx = k * T + t;
      total += lines[k].limit * (mu1[idx] + mu2[idx]);
    }
  return total;
}

}  // namespace gridmarket
