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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#define DOCTEST_CONFIG_DOUBLE_STRINGIFY
#include <doctest.h>

#include <random>

#include "gridmarket/mlcp_solver.hpp"
#include "test_support.hpp"

using namespace gridmarket;

namespace {

MlcpInstance toInstance(const gmtest::OracleProblem& p) {
  return makeInstance(p.M, p.N, p.D, p.q, p.r);
}

}  // namespace

TEST_CASE("identity LCP clears the negative component only") {
  // M = I, q = (-1, 2): the first row needs z1 = 1 (w1 = 0), the second is
  // already feasible at z2 = 0 with w2 = 2.
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd q(2);
  q << -1.0, 2.0;
  EquilibriumSolution sol = solveMixed(makeInstance(M, q));
  REQUIRE(sol.status == SolveStatus::Solved);
  CHECK(sol.z[0] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(sol.z[1] == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(sol.residuals.complementarityGap <= 1e-9);
}

TEST_CASE("interior solution solves the linear system") {
  // M = [[2,1],[1,2]], q = (-5,-6): both rows bind, so z solves Mz = -q:
  // z = (4/3, 7/3).
  Eigen::MatrixXd M(2, 2);
  M << 2.0, 1.0, 1.0, 2.0;
  Eigen::VectorXd q(2);
  q << -5.0, -6.0;
  EquilibriumSolution sol = solveMixed(makeInstance(M, q));
  REQUIRE(sol.status == SolveStatus::Solved);
  CHECK(sol.z[0] == doctest::Approx(4.0 / 3.0).epsilon(1e-10));
  CHECK(sol.z[1] == doctest::Approx(7.0 / 3.0).epsilon(1e-10));
}

TEST_CASE("nonnegative constants solve with zero pivots") {
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(3, 3);
  Eigen::VectorXd q(3);
  q << 0.5, 0.0, 2.0;
  EquilibriumSolution sol = solveMixed(makeInstance(M, q));
  REQUIRE(sol.status == SolveStatus::Solved);
  CHECK(sol.pivotCount == 0);
  CHECK(sol.z.norm() == 0.0);
}

TEST_CASE("infeasible instance is certified, not mislabeled") {
  // w1 = q1 = -1 no matter what z is: no feasible point exists.  The zero
  // matrix is copositive-plus, so the ray is a genuine certificate.
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2, 2);
  Eigen::VectorXd q(2);
  q << -1.0, 1.0;
  EquilibriumSolution sol = solveMixed(makeInstance(M, q));
  CHECK(sol.status == SolveStatus::Infeasible);
  CHECK(sol.failureIndex >= 0);

  SolverConfig noClaim;
  noClaim.copositivePlus = false;
  CHECK(solveMixed(makeInstance(M, q), noClaim).status ==
        SolveStatus::RayTermination);
}

TEST_CASE("pivot budget exhaustion reports IterationLimit") {
  std::mt19937 rng(7);
  gmtest::OracleProblem p = gmtest::randomMonotoneMlcp(rng, 12, 4, true);
  SolverConfig cfg;
  cfg.maxPivots = 1;
  EquilibriumSolution sol = solveMixed(toInstance(p), cfg);
  CHECK(sol.status == SolveStatus::IterationLimit);
}

TEST_CASE("mixed problem with known certificate solves to tolerance") {
  std::mt19937 rng(42);
  gmtest::OracleProblem p = gmtest::randomMonotoneMlcp(rng, 10, 4, false);
  EquilibriumSolution sol = solveMixed(toInstance(p));
  REQUIRE(sol.status == SolveStatus::Solved);
  CHECK(sol.residuals.complementarityGap <= 1e-8);
  CHECK(sol.residuals.equalityGap <= 1e-8);
  // The oracle agrees the result is a fixed point of projected iteration.
  gmtest::NaturalResidual res = gmtest::naturalResidual(p, sol.z, sol.pi);
  CHECK(res.max() <= 1e-7 * (1.0 + p.q.cwiseAbs().maxCoeff()));
}

TEST_CASE("random monotone ensemble matches the projected-iteration oracle") {
  std::mt19937 rng(20260816);
  std::uniform_int_distribution<int> sizeOf(2, 50);
  int strictCount = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const int n = sizeOf(rng);
    const int m = std::uniform_int_distribution<int>(0, n / 2)(rng);
    const bool strictly = trial % 2 == 0;
    gmtest::OracleProblem p = gmtest::randomMonotoneMlcp(rng, n, m, strictly);
    EquilibriumSolution sol = solveMixed(toInstance(p));
    REQUIRE_MESSAGE(sol.status == SolveStatus::Solved,
                    "trial " << trial << " n=" << n << " m=" << m);
    CHECK(sol.residuals.complementarityGap <= 1e-8);
    CHECK(sol.residuals.equalityGap <= 1e-8);
    gmtest::NaturalResidual res = gmtest::naturalResidual(p, sol.z, sol.pi);
    CHECK(res.max() <= 1e-7 * (1.0 + p.q.cwiseAbs().maxCoeff()));

    // Strongly monotone z-part: the oracle's independent solve must land
    // on the same z (it is unique).  Keep these small so the oracle stays
    // fast.
    if (strictly && n <= 12 && strictCount < 8) {
      ++strictCount;
      gmtest::OracleRun run = gmtest::runExtragradient(p, 1e-9, 400000);
      REQUIRE(run.residual.max() <= 1e-7);
      CHECK((run.z - sol.z).cwiseAbs().maxCoeff() <=
            1e-5 * (1.0 + sol.z.cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("serial and parallel kernels take the identical pivot path") {
  std::mt19937 rng(99);
  gmtest::OracleProblem p = gmtest::randomMonotoneMlcp(rng, 24, 8, true);
  SolverConfig serial;
  serial.useParallelKernel = false;
  serial.recordPivotTrace = true;
  SolverConfig parallel;
  parallel.useParallelKernel = true;
  parallel.recordPivotTrace = true;

  EquilibriumSolution a = solveMixed(toInstance(p), serial);
  EquilibriumSolution b = solveMixed(toInstance(p), parallel);
  REQUIRE(a.status == SolveStatus::Solved);
  REQUIRE(b.status == SolveStatus::Solved);
  CHECK(a.pivotCount == b.pivotCount);
  CHECK(a.pivotTrace == b.pivotTrace);
  // Bitwise equality, not approximate: the kernels do the same arithmetic.
  CHECK(a.z.cwiseEqual(b.z).all());
  CHECK(a.pi.cwiseEqual(b.pi).all());
}

TEST_CASE("pivot trace names entering and leaving variables") {
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd q(2);
  q << -1.0, 2.0;
  SolverConfig cfg;
  cfg.recordPivotTrace = true;
  EquilibriumSolution sol = solveMixed(makeInstance(M, q), cfg);
  REQUIRE(sol.status == SolveStatus::Solved);
  CHECK(sol.pivotTrace.find("pivot 1: enter cover") != std::string::npos);
  CHECK(sol.pivotTrace.find("leave") != std::string::npos);
  // Without the flag the trace stays empty.
  CHECK(solveMixed(makeInstance(M, q)).pivotTrace.empty());
}

TEST_CASE("pivot order changes the path, not the unique solution") {
  std::mt19937 rng(123);
  gmtest::OracleProblem p = gmtest::randomMonotoneMlcp(rng, 18, 6, true);
  SolverConfig natural;
  natural.pivotOrder = PivotOrder::Natural;
  SolverConfig reversed;
  reversed.pivotOrder = PivotOrder::Reversed;
  EquilibriumSolution a = solveMixed(toInstance(p), natural);
  EquilibriumSolution b = solveMixed(toInstance(p), reversed);
  REQUIRE(a.status == SolveStatus::Solved);
  REQUIRE(b.status == SolveStatus::Solved);
  CHECK((a.z - b.z).cwiseAbs().maxCoeff() <= 1e-7);
}

TEST_CASE("custom covering vectors reach the same unique solution") {
  std::mt19937 rng(321);
  gmtest::OracleProblem p = gmtest::randomMonotoneMlcp(rng, 14, 5, true);
  MlcpInstance inst = toInstance(p);
  EquilibriumSolution base = solveMixed(inst);
  REQUIRE(base.status == SolveStatus::Solved);

  SolverConfig cfg;
  cfg.coveringVector = Eigen::VectorXd::LinSpaced(base.dimension, 1.0, 3.0);
  EquilibriumSolution alt = solveMixed(inst, cfg);
  REQUIRE(alt.status == SolveStatus::Solved);
  CHECK((base.z - alt.z).cwiseAbs().maxCoeff() <= 1e-7);

  SolverConfig bad;
  bad.coveringVector = Eigen::VectorXd::Zero(base.dimension);
  CHECK_THROWS(solveMixed(inst, bad));
  SolverConfig wrongSize;
  wrongSize.coveringVector = Eigen::VectorXd::Ones(3);
  CHECK_THROWS(solveMixed(inst, wrongSize));
}

TEST_CASE("equilibration rescues badly scaled instances") {
  std::mt19937 rng(555);
  gmtest::OracleProblem p = gmtest::randomMonotoneMlcp(rng, 10, 3, true);
  // Scale rows/columns over nine orders of magnitude, preserving monotone
  // structure (congruence with a positive diagonal).
  Eigen::VectorXd s(10);
  for (int i = 0; i < 10; ++i) s[i] = std::pow(10.0, (i % 5) - 2.0);
  p.M = s.asDiagonal() * p.M * s.asDiagonal();
  p.N = s.asDiagonal() * p.N;
  // Rebuild the constants around a correspondingly rescaled certificate.
  Eigen::VectorXd zScaled = p.zStar.cwiseQuotient(s);
  p.q = p.wStar.cwiseProduct(s) - p.M * zScaled - p.N * p.piStar;
  p.r = p.N.transpose() * zScaled + p.D * p.piStar;

  EquilibriumSolution sol = solveMixed(toInstance(p));
  REQUIRE(sol.status == SolveStatus::Solved);
  gmtest::NaturalResidual res = gmtest::naturalResidual(p, sol.z, sol.pi);
  CHECK(res.max() <= 1e-6 * (1.0 + p.q.cwiseAbs().maxCoeff()));
}

TEST_CASE("plain ratio test still solves nondegenerate instances") {
  std::mt19937 rng(777);
  gmtest::OracleProblem p = gmtest::randomMonotoneMlcp(rng, 16, 4, true);
  SolverConfig cfg;
  cfg.lexicographic = false;
  EquilibriumSolution sol = solveMixed(toInstance(p), cfg);
  REQUIRE(sol.status == SolveStatus::Solved);
  CHECK(sol.residuals.complementarityGap <= 1e-8);
}

TEST_CASE("pure equality rows pass through the lifting") {
  // One complementarity row, one equality: z = 2 forced by the equality,
  // pi balances the first row.  M = 1, N = 1, D = 0, q = -3, r = 2:
  //   w = z + pi - 3 >= 0, z^T w = 0, z = 2  =>  pi >= 1, w = pi - 1.
  // Complementarity with z = 2 > 0 forces w = 0, pi = 1.
  Eigen::MatrixXd M(1, 1), N(1, 1), D(1, 1);
  M << 1.0;
  N << 1.0;
  D << 0.0;
  Eigen::VectorXd q(1), r(1);
  q << -3.0;
  r << 2.0;
  EquilibriumSolution sol = solveMixed(makeInstance(M, N, D, q, r));
  REQUIRE(sol.status == SolveStatus::Solved);
  CHECK(sol.z[0] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(sol.pi[0] == doctest::Approx(1.0).epsilon(1e-9));
}
