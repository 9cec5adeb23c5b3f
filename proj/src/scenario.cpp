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

#include "gridmarket/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gridmarket/dc_network.hpp"

namespace gridmarket {

namespace {

std::string infeasibleMessage(double required, double limit, int period) {
  std::ostringstream os;
  os << "workload " << required
     << " MW exceeds the deliverable compute power " << limit
     << " MW in period " << period;
  return os.str();
}

}  // namespace

WorkloadInfeasible::WorkloadInfeasible(double required_, double limit_,
                                       int period_)
    : std::runtime_error(infeasibleMessage(required_, limit_, period_)),
      required(required_),
      limit(limit_),
      period(period_) {}

IntensityVector measuredIntensity(const MarketCase& c,
                                  const BlockLayout& layout,
                                  const Eigen::VectorXd& z) {
  IntensityVector v = IntensityVector::zero(layout.nMdc(), layout.T);
  for (int m = 0; m < layout.nMdc(); ++m) {
    for (int t = 0; t < layout.T; ++t) {
      double weighted = 0.0;
      double total = 0.0;
      for (int a = 0; a < layout.nPlant; ++a) {
        const double p = z[layout.idxP(a, m, t)];
        weighted += c.generators[a].emissionRate * p;
        total += p;
      }
      v.eps(m, t) = total > 0.0 ? weighted / total : 0.0;
    }
  }
  return v;
}

EquilibriumReport extractReport(const MarketCase& c,
                                const MlcpInstance& instance,
                                const EquilibriumSolution& sol) {
  const BlockLayout& L = instance.layout;
  const Eigen::VectorXd& z = sol.z;
  const Eigen::VectorXd& pi = sol.pi;

  EquilibriumReport r;
  r.caseName = c.name;
  r.scheme = c.scheme;
  r.delta = c.hyperscaler ? c.hyperscaler->delta : 1.0;
  r.status = sol.status;
  r.pivotCount = sol.pivotCount;

  r.thetaD = pi.segment(L.piOff[kPiThetaD], L.piSize(kPiThetaD));
  r.thetaX = pi.segment(L.piOff[kPiThetaX], L.piSize(kPiThetaX));
  r.thetaK = pi.segment(L.piOff[kPiThetaK], L.piSize(kPiThetaK));
  r.omega = pi.segment(L.piOff[kPiOmega], L.piSize(kPiOmega));
  r.leasingPrices = pi.segment(L.piOff[kPiAlpha], L.piSize(kPiAlpha));

  const double nu = c.hyperscaler ? c.hyperscaler->gpuPowerFactor : 0.0;

  for (int b = 0; b < L.nBatch; ++b) {
    for (int a = 0; a < L.nPlant; ++a) {
      for (int t = 0; t < L.T; ++t) {
        const double ell = z[L.idxEll(b, a, t)];
        r.processingCostLocal += ell * pi[L.idxThetaK(a, t)];
        r.emissionsLocal += ell * c.generators[a].emissionRate;
      }
    }
  }
  for (int lp = 0; lp < L.nLease(); ++lp) {
    for (int t = 0; t < L.T; ++t) {
      r.processingCostMdc +=
          nu * pi[L.idxAlpha(lp, t)] * z[L.idxKs(lp, t)];
    }
  }
  r.processingCostTotal = r.processingCostLocal + r.processingCostMdc;

  for (int a = 0; a < L.nPlant; ++a) {
    for (int s = 0; s < L.nTrader(); ++s) {
      for (int t = 0; t < L.T; ++t) {
        r.emissionsSystem +=
            z[L.idxG(a, s, t)] * c.generators[a].emissionRate;
      }
    }
  }

  r.intensity = measuredIntensity(c, L, z);

  r.mdcs.resize(L.nMdc());
  for (int m = 0; m < L.nMdc(); ++m) {
    const MdcSpec& spec = c.mdcs[L.mdcOrder[m]];
    MdcOutcome& out = r.mdcs[m];
    out.bus = spec.bus;
    out.busId = c.buses[spec.bus].id;
    double weightedEmission = 0.0;
    double weightedCost = 0.0;
    for (int a = 0; a < L.nPlant; ++a) {
      for (int t = 0; t < L.T; ++t) {
        const double p = z[L.idxP(a, m, t)];
        out.procured += p;
        weightedEmission += p * c.generators[a].emissionRate;
        weightedCost += p * pi[L.idxThetaX(a, m, t)];
      }
    }
    r.emissionsMdc += weightedEmission;
    int priceSamples = 0;
    for (int lp = 0; lp < L.nLease(); ++lp) {
      if (L.leasePairs[lp].second != m) continue;
      for (int t = 0; t < L.T; ++t) {
        out.leased += z[L.idxKr(lp, t)];
        out.leasingPrice += pi[L.idxAlpha(lp, t)];
        ++priceSamples;
      }
    }
    if (priceSamples > 0) out.leasingPrice /= priceSamples;
    for (int t = 0; t < L.T; ++t) {
      out.spilled += z[L.idxS(m, t)];
      out.endowment += spec.endowmentTotal(t);
    }
    out.intensity =
        out.procured > 0.0 ? 1000.0 * weightedEmission / out.procured : 0.0;
    out.avgProcurementCost =
        out.procured > 0.0 ? weightedCost / out.procured : 0.0;
  }
  r.emissionsWorkloadTotal = r.emissionsLocal + r.emissionsMdc;

  if (L.nLine > 0) {
    r.congestionCost = congestionCost(
        c.lines, z.segment(L.zOff[kZMu1], L.zSize(kZMu1)),
        z.segment(L.zOff[kZMu2], L.zSize(kZMu2)));
  }
  return r;
}

namespace {

void screenWorkload(const MarketCase& c, const SolverConfig& solver) {
  if (!c.hyperscaler) return;
  BatchFeasibility rep = checkBatchFeasibility(c, solver);
  for (std::size_t t = 0; t < rep.periodOk.size(); ++t) {
    if (!rep.periodOk[t]) {
      throw WorkloadInfeasible(rep.required, rep.limit[static_cast<int>(t)],
                               static_cast<int>(t));
    }
  }
}

double deltaOf(const MarketCase& c, std::optional<double> deltaOverride) {
  if (deltaOverride) return *deltaOverride;
  return c.hyperscaler ? c.hyperscaler->delta : 1.0;
}

/// One assembly + solve of the given context, with optional forward bounds
/// taken from a baseline sales vector.
ScenarioResult solveOnce(const MarketCase& c, const SchemeContext& ctx,
                         const SolverConfig& solver,
                         const Eigen::VectorXd* baselineG, double fraction) {
  MlcpInstance inst = assemble(c, ctx);
  if (baselineG != nullptr && fraction > 0.0) {
    inst = applyForwardBounds(inst, *baselineG, fraction);
  }
  ScenarioResult res;
  res.solution = solveMixed(inst, solver);
  res.report = extractReport(c, inst, res.solution);
  res.report.scheme = ctx.scheme;
  res.report.delta = deltaOf(c, ctx.deltaOverride);
  res.report.forwardFraction =
      (baselineG != nullptr && fraction > 0.0) ? fraction : 0.0;
  return res;
}

ScenarioResult fixedPointSolve(const MarketCase& c,
                               std::optional<double> deltaOverride,
                               const FixedPointConfig& fp,
                               const SolverConfig& solver,
                               const Eigen::VectorXd* baselineG,
                               double fraction) {
  const BlockLayout probe = buildLayout(c);
  IntensityVector estimate = IntensityVector::zero(probe.nMdc(), probe.T);

  ScenarioResult res;
  bool converged = false;
  int iter = 0;
  while (iter < fp.maxIterations) {
    ++iter;
    SchemeContext ctx;
    ctx.scheme = Scheme::ExAnte;
    ctx.deltaOverride = deltaOverride;
    ctx.intensity = estimate;
    res = solveOnce(c, ctx, solver, baselineG, fraction);
    if (res.solution.status != SolveStatus::Solved) break;
    const Eigen::MatrixXd& fresh = res.report.intensity.eps;
    Eigen::MatrixXd next =
        (1.0 - fp.damping) * estimate.eps + fp.damping * fresh;
    const double step =
        next.size() > 0 ? (next - estimate.eps).cwiseAbs().maxCoeff() : 0.0;
    estimate.eps = next;
    if (step <= fp.tolerance) {
      converged = true;
      break;
    }
  }
  res.iterations = iter;
  res.report.fixedPointIterations = iter;
  res.report.fixedPointConverged = converged;
  return res;
}

/// The forward baseline: the market before the workload arrives (every
/// batch load zeroed), leaving the index layout untouched.
MarketCase zeroWorkloadCopy(const MarketCase& c) {
  MarketCase base = c;
  base.forwardPolicy.reset();
  if (base.hyperscaler) {
    for (Batch& b : base.hyperscaler->batches) b.load = 0.0;
  }
  return base;
}

ScenarioResult solveScheme(const MarketCase& c, Scheme scheme,
                           std::optional<double> deltaOverride,
                           const FixedPointConfig& fp,
                           const SolverConfig& solver,
                           const Eigen::VectorXd* baselineG, double fraction) {
  if (scheme == Scheme::ExPost) {
    SchemeContext ctx;
    ctx.scheme = Scheme::ExPost;
    ctx.deltaOverride = deltaOverride;
    return solveOnce(c, ctx, solver, baselineG, fraction);
  }
  return fixedPointSolve(c, deltaOverride, fp, solver, baselineG, fraction);
}

/// Scheme dispatch with forward-bound handling.  A positive forward
/// fraction locks each consumer sale above fraction x its level in the
/// zero-workload baseline, which is solved first under the same scheme.
ScenarioResult runScenario(const MarketCase& c, Scheme scheme,
                           std::optional<double> deltaOverride,
                           const FixedPointConfig& fp,
                           const SolverConfig& solver) {
  const double fraction = c.forwardPolicy ? c.forwardPolicy->fraction : 0.0;
  Eigen::VectorXd baselineG;
  const Eigen::VectorXd* basePtr = nullptr;
  MarketCase plain = c;
  plain.forwardPolicy.reset();
  if (fraction > 0.0) {
    ScenarioResult base = solveScheme(zeroWorkloadCopy(c), scheme,
                                      deltaOverride, fp, solver, nullptr, 0.0);
    if (base.solution.status != SolveStatus::Solved) return base;
    const BlockLayout L = buildLayout(plain);
    baselineG = base.solution.z.segment(L.zOff[kZG], L.zSize(kZG));
    basePtr = &baselineG;
  }
  return solveScheme(plain, scheme, deltaOverride, fp, solver, basePtr,
                     fraction);
}

}  // namespace

ScenarioResult solveExPost(const MarketCase& c, const SolverConfig& solver,
                           std::optional<double> deltaOverride) {
  screenWorkload(c, solver);
  return runScenario(c, Scheme::ExPost, deltaOverride, {}, solver);
}

ScenarioResult solveExAnte(const MarketCase& c, const FixedPointConfig& fp,
                           const SolverConfig& solver,
                           std::optional<double> deltaOverride) {
  screenWorkload(c, solver);
  return runScenario(c, Scheme::ExAnte, deltaOverride, fp, solver);
}

std::vector<EquilibriumReport> deltaSweep(const MarketCase& c,
                                          const std::vector<double>& deltas,
                                          const SolverConfig& solver,
                                          const FixedPointConfig& fp) {
  for (double d : deltas) {
    if (d < 0.0 || d > 1.0) {
      throw AssemblyError("sweep delta " + std::to_string(d) +
                          " outside [0, 1]");
    }
  }
  screenWorkload(c, solver);
  std::vector<EquilibriumReport> out;
  out.reserve(deltas.size());
  for (double d : deltas) {
    out.push_back(runScenario(c, c.scheme, d, fp, solver).report);
  }
  return out;
}

std::vector<EquilibriumReport> forwardSweep(
    const MarketCase& c, const std::vector<double>& fractions,
    const std::vector<double>& deltas, const SolverConfig& solver,
    const FixedPointConfig& fp) {
  for (double f : fractions) {
    if (f < 0.0 || f > 1.0) {
      throw AssemblyError("forward fraction " + std::to_string(f) +
                          " outside [0, 1]");
    }
  }
  screenWorkload(c, solver);
  MarketCase plain = c;
  plain.forwardPolicy.reset();
  const MarketCase preload = zeroWorkloadCopy(c);
  const BlockLayout L = buildLayout(plain);

  std::vector<EquilibriumReport> grid;
  grid.reserve(fractions.size() * deltas.size());
  for (double d : deltas) {
    if (d < 0.0 || d > 1.0) {
      throw AssemblyError("sweep delta " + std::to_string(d) +
                          " outside [0, 1]");
    }
    // Zero-workload baseline: fixes the contracted sale quantities.
    ScenarioResult base =
        solveScheme(preload, c.scheme, d, fp, solver, nullptr, 0.0);
    Eigen::VectorXd baselineG;
    if (base.solution.status == SolveStatus::Solved) {
      baselineG = base.solution.z.segment(L.zOff[kZG], L.zSize(kZG));
    }
    for (double f : fractions) {
      if (f > 0.0 && base.solution.status != SolveStatus::Solved) {
        EquilibriumReport r = base.report;
        r.forwardFraction = f;
        grid.push_back(std::move(r));
        continue;
      }
      const Eigen::VectorXd* basePtr = f > 0.0 ? &baselineG : nullptr;
      ScenarioResult point =
          solveScheme(plain, c.scheme, d, fp, solver, basePtr, f);
      point.report.forwardFraction = f;
      grid.push_back(std::move(point.report));
    }
  }
  std::stable_sort(grid.begin(), grid.end(),
                   [](const EquilibriumReport& a, const EquilibriumReport& b) {
                     if (a.forwardFraction != b.forwardFraction)
                       return a.forwardFraction < b.forwardFraction;
                     return a.delta < b.delta;
                   });
  return grid;
}

}  // namespace gridmarket
