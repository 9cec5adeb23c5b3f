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

#include "gridmarket/kkt_assembly.hpp"
#include "gridmarket/mlcp_solver.hpp"
#include "test_support.hpp"

using namespace gridmarket;

namespace {

/// Every agent kind once: one load, one hyperscaler, one MDC bus, two
/// plants on distinct buses, a triangle of lines, two batches both
/// admissible at the MDC.
MarketCase fullKindsCase() {
  MarketCase c;
  c.name = "full-kinds";
  c.buses = {{"busL", BusKind::ConventionalLoad},
             {"busH", BusKind::Hyperscaler},
             {"busM", BusKind::Mdc}};
  c.hubBus = 0;
  c.lines = {{"l01", 0, 1, 0.1, 80.0},
             {"l12", 1, 2, 0.2, 80.0},
             {"l02", 0, 2, 0.1, 80.0}};
  c.generators = {{"gA", 0, 12.0, 0.08, 300.0, 0.9},
                  {"gB", 1, 18.0, 0.05, 250.0, 0.2}};
  c.demandCurves = {{0, 0, 45.0, 0.06}};
  HyperscalerSpec h;
  h.bus = 1;
  h.delta = 0.5;
  h.gpuPowerFactor = 1000.0;
  h.batches = {{"b1", 30.0}, {"b2", 22.0}};
  c.hyperscaler = h;
  MdcSpec m;
  m.bus = 2;
  m.capacity = 20.0;
  m.curtailedEndowment["wind"] = {4.0};
  m.admissibleBatches = {"b1", "b2"};
  c.mdcs = {m};
  return c;
}

Eigen::MatrixXd dense(const Eigen::SparseMatrix<double>& s) {
  return Eigen::MatrixXd(s);
}

/// Closed-form single-bus equilibrium checks share this path.
void checkSingleBus(double capacity, double expectD, double expectTheta,
                    double expectLambda) {
  MarketCase c = gmtest::singleBusCase(40.0, 0.05, 10.0, 0.1, capacity);
  MlcpInstance inst = assemble(c, SchemeContext{});
  EquilibriumSolution sol = solveMixed(inst);
  REQUIRE(sol.status == SolveStatus::Solved);
  const BlockLayout& L = inst.layout;
  CHECK(sol.z[L.idxD(0, 0, 0)] == doctest::Approx(expectD).epsilon(1e-6));
  CHECK(sol.z[L.idxG(0, 0, 0)] == doctest::Approx(expectD).epsilon(1e-6));
  CHECK(sol.pi[L.idxThetaD(0, 0, 0)] ==
        doctest::Approx(expectTheta).epsilon(1e-6));
  CHECK(sol.z[L.idxLambda(0, 0)] ==
        doctest::Approx(expectLambda).epsilon(1e-6));
  CHECK(sol.residuals.complementarityGap <= 1e-8);
  CHECK(sol.residuals.equalityGap <= 1e-8);
}

}  // namespace

TEST_CASE("block layout counts every variable family") {
  MarketCase c = fullKindsCase();
  BlockLayout L = buildLayout(c);

  CHECK(L.nz() == 29);
  CHECK(L.npi() == 18);

  CHECK(L.zSize(kZD) == 2);        // 2 plants x 1 consumer
  CHECK(L.zSize(kZG) == 6);        // 2 plants x 3 counterparties
  CHECK(L.zSize(kZLambda) == 2);
  CHECK(L.zSize(kZMu1) == 3);
  CHECK(L.zSize(kZMu2) == 3);
  CHECK(L.zSize(kZP) == 2);        // 2 plants x 1 MDC
  CHECK(L.zSize(kZKr) == 2);       // 2 admissible lease pairs
  CHECK(L.zSize(kZS) == 1);
  CHECK(L.zSize(kZRho) == 1);
  CHECK(L.zSize(kZUpsilon) == 1);
  CHECK(L.zSize(kZKs) == 2);
  CHECK(L.zSize(kZEll) == 4);      // 2 batches x 2 plants
  CHECK(L.zSize(kZFwd) == 0);

  CHECK(L.piSize(kPiThetaD) == 2);
  CHECK(L.piSize(kPiThetaX) == 2);
  CHECK(L.piSize(kPiThetaK) == 2);
  CHECK(L.piSize(kPiOmega) == 3);
  CHECK(L.piSize(kPiAlpha) == 2);
  CHECK(L.piSize(kPiY) == 3);
  CHECK(L.piSize(kPiGamma) == 1);
  CHECK(L.piSize(kPiEta) == 1);
  CHECK(L.piSize(kPiPsi) == 2);
}

TEST_CASE("layout scales linearly with extra periods") {
  MarketCase c = fullKindsCase();
  c.periods = 2;
  c.demandCurves.push_back({0, 1, 45.0, 0.06});
  c.mdcs[0].curtailedEndowment["wind"] = {4.0, 4.0};
  BlockLayout L = buildLayout(c);
  CHECK(L.nz() == 2 * 29);
  CHECK(L.npi() == 2 * 18);
}

TEST_CASE("no hyperscaler strips every datacenter block") {
  MarketCase c = fullKindsCase();
  c.hyperscaler.reset();
  c.mdcs.clear();
  c.buses[1].kind = BusKind::Transit;
  c.buses[2].kind = BusKind::Transit;
  BlockLayout L = buildLayout(c);
  CHECK(L.zSize(kZD) == 2);
  CHECK(L.zSize(kZG) == 2);  // only the consumer remains a counterparty
  CHECK(L.zSize(kZP) == 0);
  CHECK(L.zSize(kZKr) == 0);
  CHECK(L.zSize(kZKs) == 0);
  CHECK(L.zSize(kZEll) == 0);
  CHECK(L.piSize(kPiThetaK) == 0);
  CHECK(L.piSize(kPiAlpha) == 0);
  CHECK(L.piSize(kPiEta) == 0);
  CHECK(L.piSize(kPiPsi) == 0);
  CHECK(L.piSize(kPiOmega) == 3);  // wheeling stays with the wires
}

TEST_CASE("single-bus market crosses supply and demand") {
  // Unconstrained: d = (40 - 10) / (0.05 + 0.1) = 200, price 40 - 10 = 30.
  checkSingleBus(500.0, 200.0, 30.0, 0.0);
}

TEST_CASE("capacity rent fills the price gap at the cap") {
  // Cap 100 binds: price 40 - 0.05 * 100 = 35, marginal cost 10 + 0.1 * 100
  // = 20, scarcity rent 15.
  checkSingleBus(100.0, 100.0, 35.0, 15.0);
}

TEST_CASE("structural audits: PSD symmetric part, skew equality coupling") {
  MarketCase c = fullKindsCase();
  MlcpInstance inst = assemble(c, SchemeContext{});

  Eigen::MatrixXd M = dense(inst.M);
  Eigen::MatrixXd sym = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  CHECK(eig.eigenvalues().minCoeff() >= -1e-9);

  Eigen::MatrixXd D = dense(inst.D);
  CHECK((D + D.transpose()).cwiseAbs().maxCoeff() == 0.0);

  // The quadratic form keeps only the demand-slope and cost-slope energy:
  // every other M entry sits in a skew pair and cancels.
  std::mt19937 rng(2024);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const BlockLayout& L = inst.layout;
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd z(L.nz());
    for (int i = 0; i < L.nz(); ++i) z[i] = std::abs(gauss(rng));
    double quad = z.dot(M * z);

    double expected = 0.0;
    for (int i = 0; i < L.nConsumer(); ++i) {
      double total = 0.0;
      for (int a = 0; a < L.nPlant; ++a) total += z[L.idxD(a, i, 0)];
      expected += 0.06 * total * total;  // b1 of the single consumer bus
    }
    for (int a = 0; a < L.nPlant; ++a)
      for (int j = 0; j < L.nTrader(); ++j) {
        const double g = z[L.idxG(a, j, 0)];
        expected += c.generators[a].c1 * g * g;
      }
    CHECK(quad == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("declared-intensity scheme at full cost weight matches realized") {
  // delta = 1 removes the emission wedge entirely, so the declared-intensity
  // instance coincides with the realized-intensity one, whatever the
  // declaration says.
  MarketCase c = fullKindsCase();
  c.hyperscaler->delta = 1.0;

  MlcpInstance expost = assemble(c, SchemeContext{});

  SchemeContext ctx;
  ctx.scheme = Scheme::ExAnte;
  ctx.intensity = IntensityVector::zero(1, 1);
  ctx.intensity->eps(0, 0) = 0.73;  // arbitrary declaration
  MlcpInstance exante = assemble(c, ctx);

  CHECK((dense(expost.M) - dense(exante.M)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((dense(expost.N) - dense(exante.N)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((expost.q - exante.q).cwiseAbs().maxCoeff() == 0.0);
  CHECK((expost.r - exante.r).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("declared intensities enter outsourcing constants as a wedge") {
  MarketCase c = fullKindsCase();
  c.hyperscaler->delta = 0.4;
  const double kappa = (1.0 - 0.4) / 0.4;

  SchemeContext ctx;
  ctx.scheme = Scheme::ExAnte;
  ctx.intensity = IntensityVector::zero(1, 1);
  ctx.intensity->eps(0, 0) = 0.25;
  MlcpInstance inst = assemble(c, ctx);

  const BlockLayout& L = inst.layout;
  for (int lp = 0; lp < L.nLease(); ++lp)
    CHECK(inst.q[L.idxKs(lp, 0)] ==
          doctest::Approx(kappa * 0.25).epsilon(1e-12));
  // Local processing carries the plant's own emission rate instead.
  CHECK(inst.q[L.idxEll(0, 0, 0)] ==
        doctest::Approx(kappa * 0.9).epsilon(1e-12));
  CHECK(inst.q[L.idxEll(0, 1, 0)] ==
        doctest::Approx(kappa * 0.2).epsilon(1e-12));
}

TEST_CASE("declared-intensity scheme requires a declaration of right shape") {
  MarketCase c = fullKindsCase();
  SchemeContext ctx;
  ctx.scheme = Scheme::ExAnte;
  CHECK_THROWS_AS(assemble(c, ctx), AssemblyError);
  ctx.intensity = IntensityVector::zero(2, 1);  // case has one MDC
  CHECK_THROWS_AS(assemble(c, ctx), AssemblyError);
}

TEST_CASE("missing demand curves are rejected at assembly") {
  MarketCase c = fullKindsCase();
  c.periods = 2;  // second-period curve absent
  c.mdcs[0].curtailedEndowment["wind"] = {4.0, 4.0};
  CHECK_THROWS_AS(assemble(c, SchemeContext{}), AssemblyError);
}

TEST_CASE("cost weight is floored away from the degenerate origin") {
  CHECK(effectiveDelta(0.0) == kMinDelta);
  CHECK(effectiveDelta(0.05) == kMinDelta);
  CHECK(effectiveDelta(0.1) == 0.1);
  CHECK(effectiveDelta(0.5) == 0.5);
  CHECK(effectiveDelta(1.0) == 1.0);
  CHECK(effectiveDelta(1.5) == 1.0);
}

TEST_CASE("forward bounds: zero fraction leaves the equilibrium alone") {
  MarketCase c = fullKindsCase();
  MlcpInstance plain = assemble(c, SchemeContext{});
  EquilibriumSolution base = solveMixed(plain);
  REQUIRE(base.status == SolveStatus::Solved);

  Eigen::VectorXd gBase =
      base.z.segment(plain.layout.zOff[kZG], plain.layout.zSize(kZG));
  MlcpInstance bounded = applyForwardBounds(plain, gBase, 0.0);
  CHECK(bounded.layout.zSize(kZFwd) == plain.layout.zSize(kZD));
  EquilibriumSolution sol = solveMixed(bounded);
  REQUIRE(sol.status == SolveStatus::Solved);
  Eigen::VectorXd gBounded =
      sol.z.segment(bounded.layout.zOff[kZG], bounded.layout.zSize(kZG));
  CHECK((gBounded - gBase).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("full forward cover keeps consumer sales at the preload level") {
  // Two buses: plant + consumer at the hub, hyperscaler across a line.
  // Without the workload the consumer takes (40-10)/(0.05+0.1) = 200 MWh;
  // a fraction-one contract keeps that sale at or above 200 once the
  // workload arrives.
  MarketCase c;
  c.name = "forward-two-bus";
  c.buses = {{"b0", BusKind::ConventionalLoad}, {"b1", BusKind::Hyperscaler}};
  c.hubBus = 0;
  c.lines = {{"l01", 0, 1, 0.1, 400.0}};
  c.generators = {{"g0", 0, 10.0, 0.1, 500.0, 0.7}};
  c.demandCurves = {{0, 0, 40.0, 0.05}};
  HyperscalerSpec h;
  h.bus = 1;
  h.delta = 1.0;
  h.batches = {{"b", 50.0}};
  c.hyperscaler = h;

  MarketCase preload = c;
  preload.hyperscaler->batches[0].load = 0.0;
  MlcpInstance baseInst = assemble(preload, SchemeContext{});
  EquilibriumSolution base = solveMixed(baseInst);
  REQUIRE(base.status == SolveStatus::Solved);
  const BlockLayout& L = baseInst.layout;
  const double gConsumerBase = base.z[L.idxG(0, 0, 0)];
  CHECK(gConsumerBase == doctest::Approx(200.0).epsilon(1e-6));

  MlcpInstance fullInst = assemble(c, SchemeContext{});
  Eigen::VectorXd gBase = base.z.segment(L.zOff[kZG], L.zSize(kZG));
  MlcpInstance boundedInst = applyForwardBounds(fullInst, gBase, 1.0);

  // The appended rows carry w_fwd = g - phi * g(baseline) for consumer
  // counterparties only, with the matching constants.
  REQUIRE(boundedInst.layout.zSize(kZFwd) == L.zSize(kZD));
  const int fwdRow = boundedInst.layout.idxFwd(0, 0, 0);
  CHECK(boundedInst.q[fwdRow] ==
        doctest::Approx(-gConsumerBase).epsilon(1e-12));
  Eigen::MatrixXd M(boundedInst.M);
  CHECK(M(fwdRow, L.idxG(0, 0, 0)) == 1.0);
  CHECK(M(L.idxG(0, 0, 0), fwdRow) == -1.0);

  EquilibriumSolution locked = solveMixed(boundedInst);
  REQUIRE(locked.status == SolveStatus::Solved);
  const double gLocked = locked.z[boundedInst.layout.idxG(0, 0, 0)];
  CHECK(gLocked >= 200.0 - 1e-6);
  CHECK(locked.residuals.complementarityGap <= 1e-8);
}

TEST_CASE("forward bounds reject malformed input") {
  MarketCase c = fullKindsCase();
  MlcpInstance inst = assemble(c, SchemeContext{});
  Eigen::VectorXd gBase = Eigen::VectorXd::Ones(inst.layout.zSize(kZG));
  CHECK_THROWS_AS(applyForwardBounds(inst, gBase, -0.1), AssemblyError);
  CHECK_THROWS_AS(applyForwardBounds(inst, gBase, 1.1), AssemblyError);
  Eigen::VectorXd wrong = Eigen::VectorXd::Ones(3);
  CHECK_THROWS_AS(applyForwardBounds(inst, wrong, 0.5), AssemblyError);
  MlcpInstance once = applyForwardBounds(inst, gBase, 0.5);
  CHECK_THROWS_AS(applyForwardBounds(once, gBase, 0.5), AssemblyError);
}

TEST_CASE("residuals vanish exactly at a constructed solution") {
  MarketCase c = gmtest::singleBusCase(40.0, 0.05, 10.0, 0.1, 500.0);
  MlcpInstance inst = assemble(c, SchemeContext{});
  EquilibriumSolution sol = solveMixed(inst);
  REQUIRE(sol.status == SolveStatus::Solved);

  Residual atSolution = residual(inst, sol.z, sol.pi);
  CHECK(atSolution.complementarityGap <= 1e-8);
  CHECK(atSolution.equalityGap <= 1e-8);
  CHECK(atSolution.nonnegViolation <= 1e-12);

  // Perturbing the solution must show up in the residuals.
  Eigen::VectorXd zOff = sol.z;
  zOff[inst.layout.idxD(0, 0, 0)] += 1.0;
  Residual perturbed = residual(inst, zOff, sol.pi);
  CHECK(perturbed.complementarityGap + perturbed.equalityGap > 1e-3);

  Eigen::VectorXd zNeg = sol.z;
  zNeg[0] = -2.0;
  CHECK(residual(inst, zNeg, sol.pi).nonnegViolation >= 2.0);
}

TEST_CASE("hub column of the network coupling stays empty") {
  MarketCase c = fullKindsCase();
  MlcpInstance inst = assemble(c, SchemeContext{});
  const BlockLayout& L = inst.layout;
  Eigen::MatrixXd N = dense(inst.N);
  // Flow sensitivities to the hub's net withdrawal are identically zero,
  // so the congestion rows never touch the hub's y variable.
  const int yHub = L.idxY(c.hubBus, 0);
  for (int k = 0; k < L.nLine; ++k) {
    CHECK(N(L.idxMu1(k, 0), yHub) == 0.0);
    CHECK(N(L.idxMu2(k, 0), yHub) == 0.0);
  }
}

TEST_CASE("instance dump round-trips the dimensions") {
  MarketCase c = gmtest::singleBusCase(40.0, 0.05, 10.0, 0.1, 500.0);
  MlcpInstance inst = assemble(c, SchemeContext{});
  std::string dump = dumpInstance(inst);
  CHECK(dump.find("mlcp nz " + std::to_string(inst.layout.nz())) !=
        std::string::npos);
  CHECK(dump.find("M nnz") != std::string::npos);
  CHECK(dump.find("N nnz") != std::string::npos);
  CHECK(dump.find("D nnz") != std::string::npos);
  CHECK(dump.find("q len") != std::string::npos);
  CHECK(dump.find("r len") != std::string::npos);
}
