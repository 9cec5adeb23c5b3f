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

#include "gridmarket/kkt_assembly.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "gridmarket/dc_network.hpp"

namespace gridmarket {

namespace {

int findSorted(const std::vector<int>& v, int key) {
  auto it = std::lower_bound(v.begin(), v.end(), key);
  if (it == v.end() || *it != key) return -1;
  return static_cast<int>(it - v.begin());
}

}  // namespace

int BlockLayout::consumerPos(int bus) const {
  return findSorted(consumerBuses, bus);
}
int BlockLayout::mdcPos(int bus) const { return findSorted(mdcBuses, bus); }
int BlockLayout::traderPos(int bus) const {
  return findSorted(traderBuses, bus);
}

int BlockLayout::leasePos(int batch, int mdcSlot) const {
  auto it = std::lower_bound(leasePairs.begin(), leasePairs.end(),
                             std::make_pair(batch, mdcSlot));
  if (it == leasePairs.end() || *it != std::make_pair(batch, mdcSlot))
    return -1;
  return static_cast<int>(it - leasePairs.begin());
}

int BlockLayout::idxD(int plant, int consumerSlot, int t) const {
  assert(plant >= 0 && plant < nPlant);
  assert(consumerSlot >= 0 && consumerSlot < nConsumer());
  assert(t >= 0 && t < T);
  return zOff[kZD] + (plant * nConsumer() + consumerSlot) * T + t;
}
int BlockLayout::idxG(int plant, int traderSlot, int t) const {
  assert(plant >= 0 && plant < nPlant);
  assert(traderSlot >= 0 && traderSlot < nTrader());
  assert(t >= 0 && t < T);
  return zOff[kZG] + (plant * nTrader() + traderSlot) * T + t;
}
int BlockLayout::idxLambda(int plant, int t) const {
  return zOff[kZLambda] + plant * T + t;
}
int BlockLayout::idxMu1(int line, int t) const {
  return zOff[kZMu1] + line * T + t;
}
int BlockLayout::idxMu2(int line, int t) const {
  return zOff[kZMu2] + line * T + t;
}
int BlockLayout::idxP(int plant, int mdcSlot, int t) const {
  assert(mdcSlot >= 0 && mdcSlot < nMdc());
  return zOff[kZP] + (plant * nMdc() + mdcSlot) * T + t;
}
int BlockLayout::idxKr(int leaseSlot, int t) const {
  assert(leaseSlot >= 0 && leaseSlot < nLease());
  return zOff[kZKr] + leaseSlot * T + t;
}
int BlockLayout::idxS(int mdcSlot, int t) const {
  return zOff[kZS] + mdcSlot * T + t;
}
int BlockLayout::idxRho(int mdcSlot, int t) const {
  return zOff[kZRho] + mdcSlot * T + t;
}
int BlockLayout::idxUpsilon(int mdcSlot, int t) const {
  return zOff[kZUpsilon] + mdcSlot * T + t;
}
int BlockLayout::idxKs(int leaseSlot, int t) const {
  return zOff[kZKs] + leaseSlot * T + t;
}
int BlockLayout::idxEll(int batch, int plant, int t) const {
  assert(batch >= 0 && batch < nBatch);
  return zOff[kZEll] + (batch * nPlant + plant) * T + t;
}
int BlockLayout::idxFwd(int plant, int consumerSlot, int t) const {
  assert(zSize(kZFwd) > 0);
  return zOff[kZFwd] + (plant * nConsumer() + consumerSlot) * T + t;
}

int BlockLayout::idxThetaD(int plant, int consumerSlot, int t) const {
  return piOff[kPiThetaD] + (plant * nConsumer() + consumerSlot) * T + t;
}
int BlockLayout::idxThetaX(int plant, int mdcSlot, int t) const {
  return piOff[kPiThetaX] + (plant * nMdc() + mdcSlot) * T + t;
}
int BlockLayout::idxThetaK(int plant, int t) const {
  assert(hyperBus >= 0);
  return piOff[kPiThetaK] + plant * T + t;
}
int BlockLayout::idxOmega(int bus, int t) const {
  assert(bus >= 0 && bus < nBus);
  return piOff[kPiOmega] + bus * T + t;
}
int BlockLayout::idxAlpha(int leaseSlot, int t) const {
  return piOff[kPiAlpha] + leaseSlot * T + t;
}
int BlockLayout::idxY(int bus, int t) const {
  return piOff[kPiY] + bus * T + t;
}
int BlockLayout::idxGamma(int t) const { return piOff[kPiGamma] + t; }
int BlockLayout::idxEta(int mdcSlot, int t) const {
  return piOff[kPiEta] + mdcSlot * T + t;
}
int BlockLayout::idxPsi(int batch, int t) const {
  return piOff[kPiPsi] + batch * T + t;
}

BlockLayout buildLayout(const MarketCase& c) {
  auto violations = validateCase(c);
  if (!violations.empty()) {
    throw AssemblyError("cannot build index layout for invalid case: " +
                        violations.front());
  }

  BlockLayout L;
  L.T = c.periods;
  L.nBus = static_cast<int>(c.buses.size());
  L.nPlant = static_cast<int>(c.generators.size());
  L.nLine = static_cast<int>(c.lines.size());
  L.hubBus = c.hubBus;

  for (int i = 0; i < L.nBus; ++i) {
    if (c.buses[i].kind == BusKind::ConventionalLoad)
      L.consumerBuses.push_back(i);
  }

  // MDC slots are ordered by bus index regardless of declaration order.
  std::vector<int> order(c.mdcs.size());
  for (std::size_t m = 0; m < c.mdcs.size(); ++m)
    order[m] = static_cast<int>(m);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return c.mdcs[a].bus < c.mdcs[b].bus; });
  L.mdcOrder = order;
  for (int m : order) L.mdcBuses.push_back(c.mdcs[m].bus);

  if (c.hyperscaler) {
    L.hyperBus = c.hyperscaler->bus;
    L.nBatch = static_cast<int>(c.hyperscaler->batches.size());
  }

  // Admissible (batch, MDC) pairs, batch-major.
  for (int b = 0; b < L.nBatch; ++b) {
    const std::string& id = c.hyperscaler->batches[b].id;
    for (int m = 0; m < L.nMdc(); ++m) {
      const MdcSpec& spec = c.mdcs[L.mdcOrder[m]];
      if (std::find(spec.admissibleBatches.begin(),
                    spec.admissibleBatches.end(),
                    id) != spec.admissibleBatches.end()) {
        L.leasePairs.emplace_back(b, m);
      }
    }
  }

  L.traderBuses = L.consumerBuses;
  L.traderBuses.insert(L.traderBuses.end(), L.mdcBuses.begin(),
                       L.mdcBuses.end());
  if (L.hyperBus >= 0) L.traderBuses.push_back(L.hyperBus);
  std::sort(L.traderBuses.begin(), L.traderBuses.end());

  const int T = L.T;
  const int sizes[kZBlockCount] = {
      L.nPlant * L.nConsumer() * T,  // d
      L.nPlant * L.nTrader() * T,    // g
      L.nPlant * T,                  // lambda
      L.nLine * T,                   // mu1
      L.nLine * T,                   // mu2
      L.nPlant * L.nMdc() * T,       // p
      L.nLease() * T,                // kr
      L.nMdc() * T,                  // s
      L.nMdc() * T,                  // rho
      L.nMdc() * T,                  // upsilon
      L.nLease() * T,                // ks
      L.nBatch * L.nPlant * T,       // ell
      0,                             // fwd (empty until applied)
  };
  L.zOff[0] = 0;
  for (int b = 0; b < kZBlockCount; ++b) L.zOff[b + 1] = L.zOff[b] + sizes[b];

  const int hyperPlants = (L.hyperBus >= 0) ? L.nPlant : 0;
  const int piSizes[kPiBlockCount] = {
      L.nPlant * L.nConsumer() * T,  // thetaD
      L.nPlant * L.nMdc() * T,       // thetaX
      hyperPlants * T,               // thetaK
      L.nBus * T,                    // omega
      L.nLease() * T,                // alpha
      L.nBus * T,                    // y
      T,                             // gamma
      L.nMdc() * T,                  // eta
      L.nBatch * T,                  // psi
  };
  L.piOff[0] = 0;
  for (int b = 0; b < kPiBlockCount; ++b)
    L.piOff[b + 1] = L.piOff[b] + piSizes[b];
  return L;
}

MlcpInstance assemble(const MarketCase& c, const SchemeContext& ctx) {
  MlcpInstance inst;
  inst.layout = buildLayout(c);
  const BlockLayout& L = inst.layout;
  const int T = L.T;

  // Demand curves must cover every (consumer bus, period) pair.
  Eigen::MatrixXd b0 = Eigen::MatrixXd::Constant(
      L.nConsumer(), T, std::numeric_limits<double>::quiet_NaN());
  Eigen::MatrixXd b1 = b0;
  for (const DemandCurve& dc : c.demandCurves) {
    int slot = L.consumerPos(dc.bus);
    if (slot < 0) continue;  // validated already; defensive
    b0(slot, dc.period) = dc.b0;
    b1(slot, dc.period) = dc.b1;
  }
  for (int i = 0; i < L.nConsumer(); ++i) {
    for (int t = 0; t < T; ++t) {
      if (std::isnan(b0(i, t))) {
        throw AssemblyError("no demand curve for bus '" +
                            c.buses[L.consumerBuses[i]].id + "' period " +
                            std::to_string(t));
      }
    }
  }

  PtdfMatrix localPtdf;
  const PtdfMatrix* ptdf = ctx.ptdf;
  if (ptdf != nullptr) {
    if (ptdf->lineCount() != L.nLine || ptdf->busCount() != L.nBus ||
        ptdf->referenceBus != L.hubBus) {
      throw AssemblyError("supplied PTDF does not match the case network");
    }
  } else {
    localPtdf = computePtdf(c.lines, L.nBus, L.hubBus);
    ptdf = &localPtdf;
  }

  double delta = 1.0;
  if (c.hyperscaler) delta = c.hyperscaler->delta;
  if (ctx.deltaOverride) delta = *ctx.deltaOverride;
  const double de = effectiveDelta(delta);
  const double kappa = (1.0 - de) / de;
  const double nu = c.hyperscaler ? c.hyperscaler->gpuPowerFactor : 0.0;

  const IntensityVector* intensity = nullptr;
  if (ctx.scheme == Scheme::ExAnte) {
    if (!ctx.intensity) {
      throw AssemblyError("ex ante assembly requires an intensity vector");
    }
    intensity = &*ctx.intensity;
    if (intensity->eps.rows() != L.nMdc() || intensity->eps.cols() != T) {
      throw AssemblyError("intensity vector has wrong shape");
    }
  }

  // Trader slot -> (category, slot within category).
  enum class Cat { Consumer, Mdc, Hyper };
  std::vector<std::pair<Cat, int>> trader(L.nTrader());
  for (int s = 0; s < L.nTrader(); ++s) {
    int bus = L.traderBuses[s];
    if (int cp = L.consumerPos(bus); cp >= 0)
      trader[s] = {Cat::Consumer, cp};
    else if (int mp = L.mdcPos(bus); mp >= 0)
      trader[s] = {Cat::Mdc, mp};
    else
      trader[s] = {Cat::Hyper, 0};
  }

  std::vector<Eigen::Triplet<double>> tm, tn, td;
  inst.q = Eigen::VectorXd::Zero(L.nz());
  inst.r = Eigen::VectorXd::Zero(L.npi());
  auto addM = [&](int i, int j, double v) { tm.emplace_back(i, j, v); };
  auto addN = [&](int i, int j, double v) { tn.emplace_back(i, j, v); };
  auto addD = [&](int i, int j, double v) { td.emplace_back(i, j, v); };

  // --- consumer purchase rows:  b1 * sum_c' d_{c'it} + thetaD - b0 --------
  for (int cns = 0; cns < L.nConsumer(); ++cns) {
    for (int t = 0; t < T; ++t) {
      for (int a = 0; a < L.nPlant; ++a) {
        int row = L.idxD(a, cns, t);
        for (int b = 0; b < L.nPlant; ++b)
          addM(row, L.idxD(b, cns, t), b1(cns, t));
        addN(row, L.idxThetaD(a, cns, t), 1.0);
        inst.q[row] = -b0(cns, t);
      }
    }
  }

  // --- producer sale rows:  c0 + c1 g + lambda + (omega_i - omega_j) - theta
  for (int a = 0; a < L.nPlant; ++a) {
    const Generator& gen = c.generators[a];
    for (int s = 0; s < L.nTrader(); ++s) {
      int destBus = L.traderBuses[s];
      for (int t = 0; t < T; ++t) {
        int row = L.idxG(a, s, t);
        addM(row, row, gen.c1);
        addM(row, L.idxLambda(a, t), 1.0);
        if (destBus != gen.bus) {
          addN(row, L.idxOmega(destBus, t), 1.0);
          addN(row, L.idxOmega(gen.bus, t), -1.0);
        }
        switch (trader[s].first) {
          case Cat::Consumer:
            addN(row, L.idxThetaD(a, trader[s].second, t), -1.0);
            break;
          case Cat::Mdc:
            addN(row, L.idxThetaX(a, trader[s].second, t), -1.0);
            break;
          case Cat::Hyper:
            addN(row, L.idxThetaK(a, t), -1.0);
            break;
        }
        inst.q[row] = gen.c0;
      }
    }
  }

  // --- producer capacity rows:  G - sum_i g >= 0 --------------------------
  for (int a = 0; a < L.nPlant; ++a) {
    for (int t = 0; t < T; ++t) {
      int row = L.idxLambda(a, t);
      for (int s = 0; s < L.nTrader(); ++s) addM(row, L.idxG(a, s, t), -1.0);
      inst.q[row] = c.generators[a].capacity;
    }
  }

  // --- flow limit rows:  F + PTDF y >= 0  and  F - PTDF y >= 0 ------------
  for (int k = 0; k < L.nLine; ++k) {
    for (int t = 0; t < T; ++t) {
      int r1 = L.idxMu1(k, t);
      int r2 = L.idxMu2(k, t);
      for (int i = 0; i < L.nBus; ++i) {
        double v = ptdf->entries(k, i);
        if (std::abs(v) <= 1e-12) continue;
        addN(r1, L.idxY(i, t), v);
        addN(r2, L.idxY(i, t), -v);
      }
      inst.q[r1] = c.lines[k].limit;
      inst.q[r2] = c.lines[k].limit;
    }
  }

  // --- MDC procurement rows:  thetaX - eta >= 0 ---------------------------
  for (int a = 0; a < L.nPlant; ++a) {
    for (int m = 0; m < L.nMdc(); ++m) {
      for (int t = 0; t < T; ++t) {
        int row = L.idxP(a, m, t);
        addN(row, L.idxThetaX(a, m, t), 1.0);
        addN(row, L.idxEta(m, t), -1.0);
      }
    }
  }

  // --- MDC leased-capacity rows:  -nu alpha + eta + rho >= 0 --------------
  for (int lp = 0; lp < L.nLease(); ++lp) {
    int m = L.leasePairs[lp].second;
    for (int t = 0; t < T; ++t) {
      int row = L.idxKr(lp, t);
      addN(row, L.idxAlpha(lp, t), -nu);
      addN(row, L.idxEta(m, t), 1.0);
      addM(row, L.idxRho(m, t), 1.0);
    }
  }

  // --- MDC spill rows:  eta + upsilon >= 0 --------------------------------
  for (int m = 0; m < L.nMdc(); ++m) {
    for (int t = 0; t < T; ++t) {
      int row = L.idxS(m, t);
      addN(row, L.idxEta(m, t), 1.0);
      addM(row, L.idxUpsilon(m, t), 1.0);
    }
  }

  // --- MDC capacity rows:  Cap - sum_b kr >= 0 ----------------------------
  for (int m = 0; m < L.nMdc(); ++m) {
    for (int t = 0; t < T; ++t) {
      int row = L.idxRho(m, t);
      for (int lp = 0; lp < L.nLease(); ++lp) {
        if (L.leasePairs[lp].second == m) addM(row, L.idxKr(lp, t), -1.0);
      }
      inst.q[row] = c.mdcs[L.mdcOrder[m]].capacity;
    }
  }

  // --- spill cap rows:  endowment - s >= 0 --------------------------------
  for (int m = 0; m < L.nMdc(); ++m) {
    const MdcSpec& spec = c.mdcs[L.mdcOrder[m]];
    for (int t = 0; t < T; ++t) {
      int row = L.idxUpsilon(m, t);
      addM(row, L.idxS(m, t), -1.0);
      inst.q[row] = spec.endowmentTotal(t);
    }
  }

  // --- hyperscaler offload rows:  nu alpha + psi (+ penalty) >= 0 ---------
  for (int lp = 0; lp < L.nLease(); ++lp) {
    auto [b, m] = L.leasePairs[lp];
    for (int t = 0; t < T; ++t) {
      int row = L.idxKs(lp, t);
      addN(row, L.idxAlpha(lp, t), nu);
      addN(row, L.idxPsi(b, t), 1.0);
      if (intensity != nullptr) inst.q[row] = kappa * intensity->eps(m, t);
    }
  }

  // --- hyperscaler local-processing rows:  thetaK + psi + penalty >= 0 ----
  for (int b = 0; b < L.nBatch; ++b) {
    for (int a = 0; a < L.nPlant; ++a) {
      for (int t = 0; t < T; ++t) {
        int row = L.idxEll(b, a, t);
        addN(row, L.idxThetaK(a, t), 1.0);
        addN(row, L.idxPsi(b, t), 1.0);
        inst.q[row] = kappa * c.generators[a].emissionRate;
      }
    }
  }

  // --- equality block ------------------------------------------------------
  // Columns of N supply N^T z; here we add the D couplings and r.
  // omega rows:  (net withdrawal at bus) - y = 0
  for (int i = 0; i < L.nBus; ++i) {
    for (int t = 0; t < T; ++t) {
      addD(L.idxOmega(i, t), L.idxY(i, t), -1.0);
    }
  }
  // y rows:  PTDF^T (mu1 - mu2) + omega + gamma = 0
  for (int i = 0; i < L.nBus; ++i) {
    for (int t = 0; t < T; ++t) {
      addD(L.idxY(i, t), L.idxOmega(i, t), 1.0);
      addD(L.idxY(i, t), L.idxGamma(t), 1.0);
    }
  }
  // gamma rows:  -sum_i y = 0
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < L.nBus; ++i) {
      addD(L.idxGamma(t), L.idxY(i, t), -1.0);
    }
  }
  // eta rows:  sum_b kr - sum_c p + s = endowment
  for (int m = 0; m < L.nMdc(); ++m) {
    const MdcSpec& spec = c.mdcs[L.mdcOrder[m]];
    for (int t = 0; t < T; ++t) {
      inst.r[L.idxEta(m, t)] = spec.endowmentTotal(t);
    }
  }
  // psi rows:  sum_i ks + sum_c ell = batch load
  for (int b = 0; b < L.nBatch; ++b) {
    for (int t = 0; t < T; ++t) {
      inst.r[L.idxPsi(b, t)] = c.hyperscaler->batches[b].load;
    }
  }

  inst.M.resize(L.nz(), L.nz());
  inst.M.setFromTriplets(tm.begin(), tm.end());
  inst.N.resize(L.nz(), L.npi());
  inst.N.setFromTriplets(tn.begin(), tn.end());
  inst.D.resize(L.npi(), L.npi());
  inst.D.setFromTriplets(td.begin(), td.end());
  return inst;
}

MlcpInstance applyForwardBounds(const MlcpInstance& instance,
                                const Eigen::VectorXd& gBaseline, double phi) {
  const BlockLayout& L0 = instance.layout;
  if (gBaseline.size() != L0.zSize(kZG)) {
    throw AssemblyError("baseline sales vector has wrong length");
  }
  if (phi < 0.0 || phi > 1.0) {
    throw AssemblyError("forward fraction outside [0, 1]");
  }
  if (L0.zSize(kZFwd) != 0) {
    throw AssemblyError("forward bounds already applied");
  }

  MlcpInstance out;
  out.layout = L0;
  const int nFwd = L0.nPlant * L0.nConsumer() * L0.T;
  out.layout.zOff[kZBlockCount] = L0.zOff[kZBlockCount] + nFwd;
  const BlockLayout& L = out.layout;

  out.q = Eigen::VectorXd::Zero(L.nz());
  out.q.head(L0.nz()) = instance.q;
  out.r = instance.r;
  out.D = instance.D;

  std::vector<Eigen::Triplet<double>> tm, tn;
  for (int k = 0; k < instance.M.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(instance.M, k); it;
         ++it) {
      tm.emplace_back(it.row(), it.col(), it.value());
    }
  }
  for (int k = 0; k < instance.N.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(instance.N, k); it;
         ++it) {
      tn.emplace_back(it.row(), it.col(), it.value());
    }
  }

  // Contract row gains -fwdMultiplier; the new row reads g - phi g* >= 0.
  for (int a = 0; a < L.nPlant; ++a) {
    for (int cns = 0; cns < L.nConsumer(); ++cns) {
      int s = L.traderPos(L.consumerBuses[cns]);
      for (int t = 0; t < L.T; ++t) {
        int gIdx = L.idxG(a, s, t);
        int fIdx = L.idxFwd(a, cns, t);
        tm.emplace_back(gIdx, fIdx, -1.0);
        tm.emplace_back(fIdx, gIdx, 1.0);
        out.q[fIdx] = -phi * gBaseline[gIdx - L.zOff[kZG]];
      }
    }
  }

  out.M.resize(L.nz(), L.nz());
  out.M.setFromTriplets(tm.begin(), tm.end());
  out.N.resize(L.nz(), L.npi());
  out.N.setFromTriplets(tn.begin(), tn.end());
  return out;
}

Residual residual(const MlcpInstance& instance, const Eigen::VectorXd& z,
                  const Eigen::VectorXd& pi) {
  const int nz = instance.layout.nz();
  const int npi = instance.layout.npi();
  if (z.size() != nz || pi.size() != npi) {
    throw AssemblyError("solution vectors do not match the layout");
  }
  Residual res;
  Eigen::VectorXd w = instance.M * z + instance.N * pi + instance.q;
  for (int i = 0; i < nz; ++i) {
    res.complementarityGap =
        std::max(res.complementarityGap, std::abs(z[i] * w[i]));
  }
  if (npi > 0) {
    Eigen::VectorXd eq =
        instance.N.transpose() * z + instance.D * pi - instance.r;
    res.equalityGap = eq.lpNorm<Eigen::Infinity>();
  }
  double minz = nz > 0 ? z.minCoeff() : 0.0;
  double minw = nz > 0 ? w.minCoeff() : 0.0;
  res.nonnegViolation = std::max({0.0, -minz, -minw});
  return res;
}

std::string dumpInstance(const MlcpInstance& instance) {
  std::ostringstream os;
  os.precision(17);
  const BlockLayout& L = instance.layout;
  os << "mlcp nz " << L.nz() << " npi " << L.npi() << "\n";
  auto dumpMat = [&os](const char* tag,
                       const Eigen::SparseMatrix<double>& m) {
    os << tag << " nnz " << m.nonZeros() << "\n";
    for (int k = 0; k < m.outerSize(); ++k) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it) {
        os << it.row() << " " << it.col() << " " << it.value() << "\n";
      }
    }
  };
  dumpMat("M", instance.M);
  dumpMat("N", instance.N);
  dumpMat("D", instance.D);
  os << "q len " << instance.q.size() << "\n";
  for (int i = 0; i < instance.q.size(); ++i) os << instance.q[i] << "\n";
  os << "r len " << instance.r.size() << "\n";
  for (int i = 0; i < instance.r.size(); ++i) os << instance.r[i] << "\n";
  return os.str();
}

}  // namespace gridmarket
