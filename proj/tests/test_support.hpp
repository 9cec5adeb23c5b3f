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

// Shared fixtures for the test binaries: an independent projected-iteration
// oracle for complementarity problems, random monotone problem generators,
// and small hand-built market cases.  Everything here deliberately avoids
// the pivoting code paths it is used to check.

#ifndef GRIDMARKET_TESTS_TEST_SUPPORT_HPP
#define GRIDMARKET_TESTS_TEST_SUPPORT_HPP

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <utility>

#include "gridmarket/market_model.hpp"

namespace gmtest {

/// Dense mixed complementarity data plus the certificate solution it was
/// generated from:  0 <= z perp Mz + Npi + q >= 0,  N^T z + D pi = r.
struct OracleProblem {
  Eigen::MatrixXd M, N, D;
  Eigen::VectorXd q, r;
  Eigen::VectorXd zStar, wStar, piStar;  ///< generating certificate
};

/// Forward map of the variational form: F_z stacks the complementarity
/// rows, F_pi the (negated) equality rows; both vanish appropriately at a
/// solution and the combined Jacobian is monotone whenever sym(M) is PSD
/// and D is skew.
inline Eigen::VectorXd mapZ(const OracleProblem& p, const Eigen::VectorXd& z,
                            const Eigen::VectorXd& pi) {
  return p.M * z + p.N * pi + p.q;
}
inline Eigen::VectorXd mapPi(const OracleProblem& p, const Eigen::VectorXd& z,
                             const Eigen::VectorXd& pi) {
  return p.r - p.N.transpose() * z - p.D * pi;
}

/// Projected-iteration residual at (z, pi): how far one projected-gradient
/// step (unit stepsize) moves z, and the raw equality defect.  Zero exactly
/// at solutions.  This is the oracle's yardstick for a pivoting result.
struct NaturalResidual {
  double z = 0.0;
  double pi = 0.0;
  double max() const { return z > pi ? z : pi; }
};

inline NaturalResidual naturalResidual(const OracleProblem& p,
                                       const Eigen::VectorXd& z,
                                       const Eigen::VectorXd& pi) {
  NaturalResidual res;
  Eigen::VectorXd moved = (z - mapZ(p, z, pi)).cwiseMax(0.0);
  res.z = (z - moved).cwiseAbs().maxCoeff();
  res.pi = p.r.size() ? mapPi(p, z, pi).cwiseAbs().maxCoeff() : 0.0;
  return res;
}

/// Korpelevich extragradient iteration, projecting z onto the nonnegative
/// orthant and leaving pi free.  Converges on monotone problems for steps
/// below 1/L; we bound L by the Frobenius norm of the stacked Jacobian.
struct OracleRun {
  Eigen::VectorXd z, pi;
  int iterations = 0;
  NaturalResidual residual;
};

inline OracleRun runExtragradient(const OracleProblem& p, double tolerance,
                                  int maxIterations) {
  const int n = static_cast<int>(p.M.rows());
  const int m = static_cast<int>(p.D.rows());
  double lipschitz = std::sqrt(p.M.squaredNorm() + 2.0 * p.N.squaredNorm() +
                               p.D.squaredNorm());
  const double step = 0.9 / std::max(lipschitz, 1e-12);

  OracleRun run;
  run.z = Eigen::VectorXd::Zero(n);
  run.pi = Eigen::VectorXd::Zero(m);
  for (run.iterations = 0; run.iterations < maxIterations; ++run.iterations) {
    run.residual = naturalResidual(p, run.z, run.pi);
    if (run.residual.max() <= tolerance) break;
    Eigen::VectorXd midZ =
        (run.z - step * mapZ(p, run.z, run.pi)).cwiseMax(0.0);
    Eigen::VectorXd midPi = run.pi - step * mapPi(p, run.z, run.pi);
    run.z = (run.z - step * mapZ(p, midZ, midPi)).cwiseMax(0.0);
    run.pi = run.pi - step * mapPi(p, midZ, midPi);
  }
  run.residual = naturalResidual(p, run.z, run.pi);
  return run;
}

/// Random monotone instance built backwards from a certificate solution,
/// so solvability is guaranteed.  `strictly` adds the identity to make the
/// z part strongly monotone (then z is unique).  m = 0 gives a pure LCP.
inline OracleProblem randomMonotoneMlcp(std::mt19937& rng, int n, int m,
                                        bool strictly) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  auto fill = [&](Eigen::MatrixXd& mat) {
    for (Eigen::Index i = 0; i < mat.rows(); ++i)
      for (Eigen::Index j = 0; j < mat.cols(); ++j) mat(i, j) = gauss(rng);
  };

  OracleProblem p;
  Eigen::MatrixXd A(n, n);
  fill(A);
  p.M = A.transpose() * A / std::sqrt(static_cast<double>(n));
  if (strictly) p.M += Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd skew(n, n);
  fill(skew);
  p.M += 0.3 * (skew - skew.transpose());  // monotone but not symmetric

  p.N.resize(n, m);
  fill(p.N);
  Eigen::MatrixXd S(m, m);
  fill(S);
  p.D = 0.5 * (S - S.transpose());

  p.zStar.resize(n);
  p.wStar.resize(n);
  for (int i = 0; i < n; ++i) {
    if (coin(rng)) {
      p.zStar[i] = std::abs(gauss(rng)) * 2.0;
      p.wStar[i] = 0.0;
    } else {
      p.zStar[i] = 0.0;
      p.wStar[i] = std::abs(gauss(rng)) * 2.0;
    }
  }
  p.piStar.resize(m);
  for (int i = 0; i < m; ++i) p.piStar[i] = gauss(rng);

  p.q = p.wStar - p.M * p.zStar - p.N * p.piStar;
  p.r = p.N.transpose() * p.zStar + p.D * p.piStar;
  return p;
}

/// Single-bus energy market: one plant (c0 + c1 g, cap G) facing one
/// affine consumer (b0 - b1 d).  The equilibrium crosses supply and
/// demand:  unconstrained  d = (b0 - c0) / (b1 + c1), price b0 - b1 d;
/// at the cap, d = G and the plant's scarcity rent fills the gap.
inline gridmarket::MarketCase singleBusCase(double b0, double b1, double c0,
                                            double c1, double capacity) {
  gridmarket::MarketCase c;
  c.name = "single-bus";
  c.buses = {{"hub", gridmarket::BusKind::ConventionalLoad}};
  c.hubBus = 0;
  c.generators = {{"gen", 0, c0, c1, capacity, 0.8}};
  c.demandCurves = {{0, 0, b0, b1}};
  return c;
}

}  // namespace gmtest

#endif  // GRIDMARKET_TESTS_TEST_SUPPORT_HPP
