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

#include <algorithm>

#include "gridmarket/market_model.hpp"

using namespace gridmarket;

namespace {

/// Two-bus case with one generator, one load, a hyperscaler and one MDC:
/// the smallest case exercising every agent kind.
MarketCase smallCase() {
  MarketCase c;
  c.name = "small";
  c.buses = {{"b1", BusKind::ConventionalLoad},
             {"b2", BusKind::Hyperscaler},
             {"b3", BusKind::Mdc}};
  c.lines = {{"l12", 0, 1, 0.1, 100.0}, {"l13", 0, 2, 0.1, 100.0}};
  c.hubBus = 0;
  c.generators = {{"g1", 0, 10.0, 0.05, 400.0, 0.5}};
  c.demandCurves = {{0, 0, 40.0, 0.1}};
  HyperscalerSpec h;
  h.bus = 1;
  h.batches = {{"batch-a", 20.0}};
  h.delta = 0.5;
  c.hyperscaler = h;
  MdcSpec m;
  m.bus = 2;
  m.capacity = 15.0;
  m.curtailedEndowment["wind"] = {3.0};
  m.admissibleBatches = {"batch-a"};
  c.mdcs = {m};
  return c;
}

bool mentions(const std::vector<std::string>& violations,
              const std::string& needle) {
  return std::any_of(violations.begin(), violations.end(),
                     [&needle](const std::string& v) {
                       return v.find(needle) != std::string::npos;
                     });
}

}  // namespace

TEST_CASE("well-formed case validates cleanly") {
  CHECK(validateCase(smallCase()).empty());
}

TEST_CASE("bus lookups") {
  MarketCase c = smallCase();
  CHECK(c.busIndex("b1") == 0);
  CHECK(c.busIndex("b3") == 2);
  CHECK(c.busIndex("nope") == -1);
  REQUIRE(c.findBus(1) != nullptr);
  CHECK(c.findBus(1)->id == "b2");
  CHECK(c.findBus(3) == nullptr);
  CHECK(c.findBus(-1) == nullptr);
}

TEST_CASE("delta outside the unit interval is rejected by name") {
  MarketCase c = smallCase();
  c.hyperscaler->delta = 1.2;
  CHECK(mentions(validateCase(c), "delta"));
  c.hyperscaler->delta = -0.1;
  CHECK(mentions(validateCase(c), "delta"));
}

TEST_CASE("agent kinds partition the buses") {
  MarketCase c = smallCase();
  // An MDC spec sitting on a load bus breaks the partition.
  c.mdcs[0].bus = 0;
  CHECK(mentions(validateCase(c), "kind is not mdc"));

  c = smallCase();
  MdcSpec second = c.mdcs[0];
  c.mdcs.push_back(second);
  CHECK(mentions(validateCase(c), "share"));

  c = smallCase();
  c.buses[1].kind = BusKind::Transit;
  CHECK(mentions(validateCase(c), "kind is not hyperscaler"));
}

TEST_CASE("dangling references and bad numbers are caught") {
  MarketCase c = smallCase();
  c.generators[0].bus = 17;
  CHECK(mentions(validateCase(c), "unknown bus"));

  c = smallCase();
  c.generators[0].c1 = -0.5;
  CHECK(mentions(validateCase(c), "c1 < 0"));

  c = smallCase();
  c.mdcs[0].admissibleBatches = {"ghost"};
  CHECK(mentions(validateCase(c), "ghost"));

  c = smallCase();
  c.lines[0].reactance = 0.0;
  CHECK(mentions(validateCase(c), "reactance"));

  c = smallCase();
  c.demandCurves.push_back({0, 0, 35.0, 0.1});
  CHECK(mentions(validateCase(c), "duplicate demand curve"));

  c = smallCase();
  c.mdcs[0].curtailedEndowment["wind"] = {1.0, 2.0};  // case has one period
  CHECK(mentions(validateCase(c), "endowment"));

  c = smallCase();
  c.forwardPolicy = ForwardPolicy{1.5};
  CHECK(mentions(validateCase(c), "forward"));
}

TEST_CASE("endowment totals sum across units") {
  MdcSpec m;
  m.curtailedEndowment["wind"] = {3.0, 1.0};
  m.curtailedEndowment["solar"] = {2.0, 0.5};
  CHECK(m.endowmentTotal(0) == doctest::Approx(5.0));
  CHECK(m.endowmentTotal(1) == doctest::Approx(1.5));
  CHECK(m.endowmentTotal(2) == doctest::Approx(0.0));  // past the horizon
}

TEST_CASE("calibration pins the curve through the dispatch point") {
  // Elasticity -0.2 at (L, P) = (100, 20): slope 20 / (0.2 * 100) = 1,
  // intercept 20 + 1 * 100 = 120.
  std::vector<DemandCurve> curves =
      calibrateDemand({{0, 0, 100.0, 20.0}}, -0.2);
  REQUIRE(curves.size() == 1);
  CHECK(curves[0].b1 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(curves[0].b0 == doctest::Approx(120.0).epsilon(1e-12));

  // Unit elasticity: slope 0.2, intercept 40.
  curves = calibrateDemand({{0, 0, 100.0, 20.0}}, -1.0);
  CHECK(curves[0].b1 == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(curves[0].b0 == doctest::Approx(40.0).epsilon(1e-12));
}

TEST_CASE("calibrated curves reproduce the anchor point") {
  // Inverting the fitted curve at the dual price returns the load.
  std::vector<CalibrationPoint> pts = {
      {0, 0, 108.0, 23.7}, {1, 0, 265.0, 31.2}, {2, 1, 74.0, 18.9}};
  std::vector<DemandCurve> curves = calibrateDemand(pts, -0.2);
  REQUIRE(curves.size() == pts.size());
  for (size_t i = 0; i < pts.size(); ++i) {
    CHECK(curves[i].bus == pts[i].bus);
    CHECK(curves[i].period == pts[i].period);
    const double demandAtDual = (curves[i].b0 - pts[i].dual) / curves[i].b1;
    CHECK(demandAtDual == doctest::Approx(pts[i].load).epsilon(1e-10));
    // Point elasticity of the fitted curve matches the request.
    const double slopeElasticity =
        -pts[i].dual / (curves[i].b1 * pts[i].load);
    CHECK(slopeElasticity == doctest::Approx(-0.2).epsilon(1e-10));
  }
}

TEST_CASE("calibration rejects unusable inputs") {
  CHECK_THROWS_AS(calibrateDemand({{0, 0, 100.0, 20.0}}, 0.3),
                  CalibrationError);
  CHECK_THROWS_AS(calibrateDemand({{0, 0, 0.0, 20.0}}, -0.2),
                  CalibrationError);
  CHECK_THROWS_AS(calibrateDemand({{0, 0, 100.0, -4.0}}, -0.2),
                  CalibrationError);
}
