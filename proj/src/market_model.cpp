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

#include "gridmarket/market_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace gridmarket {

int MarketCase::busIndex(const std::string& id) const {
  for (size_t i = 0; i < buses.size(); ++i)
    if (buses[i].id == id) return static_cast<int>(i);
  return -1;
}

const Bus* MarketCase::findBus(int index) const {
  if (index < 0 || index >= static_cast<int>(buses.size())) return nullptr;
  return &buses[index];
}

namespace {

bool validBusIndex(const MarketCase& c, int idx) {
  return idx >= 0 && idx < static_cast<int>(c.buses.size());
}

}  // namespace

std::vector<std::string> validateCase(const MarketCase& c) {
  std::vector<std::string> bad;
  auto complain = [&bad](const std::string& msg) { bad.push_back(msg); };

  if (c.periods < 1) complain("periods must be >= 1");
  if (c.buses.empty()) complain("case has no buses");

  std::set<std::string> busIds;
  for (const Bus& b : c.buses)
    if (!busIds.insert(b.id).second)
      complain("duplicate bus id '" + b.id + "'");

  if (!validBusIndex(c, c.hubBus)) complain("hub bus index out of range");

  // Agent kinds partition distinct buses: at most one hyperscaler spec and
  // one MDC spec per bus, and the bus kinds must match the specs.
  std::set<int> mdcBuses;
  for (const MdcSpec& m : c.mdcs) {
    if (!validBusIndex(c, m.bus)) {
      complain("MDC references unknown bus index");
      continue;
    }
    if (!mdcBuses.insert(m.bus).second)
      complain("two MDCs share bus '" + c.buses[m.bus].id + "'");
    if (c.buses[m.bus].kind != BusKind::Mdc)
      complain("MDC at bus '" + c.buses[m.bus].id + "' whose kind is not mdc");
    if (m.capacity < 0)
      complain("MDC at bus '" + c.buses[m.bus].id + "' has negative capacity");
    for (const auto& [unit, series] : m.curtailedEndowment) {
      if (static_cast<int>(series.size()) != c.periods)
        complain("endowment series for unit '" + unit + "' has " +
                 std::to_string(series.size()) + " periods, case has " +
                 std::to_string(c.periods));
      for (double v : series)
        if (v < 0) complain("negative endowment for unit '" + unit + "'");
    }
  }

  std::set<std::string> batchIds;
  if (c.hyperscaler) {
    const HyperscalerSpec& h = *c.hyperscaler;
    if (!validBusIndex(c, h.bus)) {
      complain("hyperscaler references unknown bus index");
    } else {
      if (c.buses[h.bus].kind != BusKind::Hyperscaler)
        complain("hyperscaler at bus '" + c.buses[h.bus].id +
                 "' whose kind is not hyperscaler");
      if (mdcBuses.count(h.bus))
        complain("bus '" + c.buses[h.bus].id +
                 "' hosts both an MDC and the hyperscaler");
    }
    if (!(h.delta >= 0.0 && h.delta <= 1.0)) {
      std::ostringstream os;
      os << "delta = " << h.delta << " outside [0, 1]";
      complain(os.str());
    }
    if (!(h.gpuPowerFactor > 0)) complain("gpuPowerFactor nu must be > 0");
    for (const Batch& b : h.batches) {
      if (b.load < 0) complain("batch '" + b.id + "' has negative load");
      if (!batchIds.insert(b.id).second)
        complain("duplicate batch id '" + b.id + "'");
    }
  }

  for (const MdcSpec& m : c.mdcs)
    for (const std::string& b : m.admissibleBatches)
      if (!batchIds.count(b))
        complain("MDC admissible batch '" + b + "' does not exist");

  // A bus may carry either the hyperscaler kind or the mdc kind only when a
  // matching spec exists.
  for (size_t i = 0; i < c.buses.size(); ++i) {
    const Bus& b = c.buses[i];
    if (b.kind == BusKind::Mdc && !mdcBuses.count(static_cast<int>(i)))
      complain("bus '" + b.id + "' is marked mdc but no MDC spec uses it");
    if (b.kind == BusKind::Hyperscaler &&
        (!c.hyperscaler || c.hyperscaler->bus != static_cast<int>(i)))
      complain("bus '" + b.id +
               "' is marked hyperscaler but no hyperscaler spec uses it");
  }

  std::set<std::string> genIds;
  for (const Generator& g : c.generators) {
    if (!genIds.insert(g.id).second)
      complain("duplicate generator id '" + g.id + "'");
    if (!validBusIndex(c, g.bus))
      complain("generator '" + g.id + "' references unknown bus index");
    if (g.c1 < 0) complain("generator '" + g.id + "' has c1 < 0");
    if (g.capacity < 0) complain("generator '" + g.id + "' has capacity < 0");
    if (g.emissionRate < 0)
      complain("generator '" + g.id + "' has emissionRate < 0");
  }

  std::set<std::pair<int, int>> curveKeys;
  for (const DemandCurve& dc : c.demandCurves) {
    if (!validBusIndex(c, dc.bus)) {
      complain("demand curve references unknown bus index");
      continue;
    }
    if (c.buses[dc.bus].kind != BusKind::ConventionalLoad)
      complain("demand curve at bus '" + c.buses[dc.bus].id +
               "' whose kind is not load");
    if (dc.period < 0 || dc.period >= c.periods)
      complain("demand curve period out of range at bus '" +
               c.buses[dc.bus].id + "'");
    if (dc.b1 < 0)
      complain("demand curve at bus '" + c.buses[dc.bus].id + "' has b1 < 0");
    if (!curveKeys.insert({dc.bus, dc.period}).second)
      complain("duplicate demand curve for bus '" + c.buses[dc.bus].id +
               "', period " + std::to_string(dc.period));
  }

  for (const Line& ln : c.lines) {
    if (!validBusIndex(c, ln.fromBus) || !validBusIndex(c, ln.toBus)) {
      complain("line '" + ln.id + "' references unknown bus index");
      continue;
    }
    if (ln.fromBus == ln.toBus)
      complain("line '" + ln.id + "' connects a bus to itself");
    if (!(ln.reactance > 0))
      complain("line '" + ln.id + "' has non-positive reactance");
    if (ln.limit < 0) complain("line '" + ln.id + "' has negative limit");
  }

  if (c.forwardPolicy) {
    const double phi = c.forwardPolicy->fraction;
    if (!(phi >= 0.0 && phi <= 1.0)) {
      std::ostringstream os;
      os << "forward fraction = " << phi << " outside [0, 1]";
      complain(os.str());
    }
  }

  return bad;
}

std::vector<DemandCurve> calibrateDemand(
    const std::vector<CalibrationPoint>& points, double elasticity) {
  if (!(elasticity < 0))
    throw CalibrationError("price elasticity must be negative");
  std::vector<DemandCurve> out;
  out.reserve(points.size());
  for (const CalibrationPoint& pt : points) {
    if (!(pt.load > 0))
      throw CalibrationError("calibration needs a positive load at bus index " +
                             std::to_string(pt.bus));
    if (!(pt.dual > 0))
      throw CalibrationError(
          "calibration needs a positive dispatch dual at bus index " +
          std::to_string(pt.bus) + " (got " + std::to_string(pt.dual) + ")");
    DemandCurve dc;
    dc.bus = pt.bus;
    dc.period = pt.period;
    dc.b1 = -pt.dual / (elasticity * pt.load);
    dc.b0 = pt.dual + dc.b1 * pt.load;
    out.push_back(dc);
  }
  return out;
}

}  // namespace gridmarket
