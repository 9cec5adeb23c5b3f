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

#include "gridmarket/report_io.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace gridmarket {

namespace {

/// 10 significant digits: stable to reread, short enough to eyeball.
std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

const char* schemeName(Scheme s) {
  return s == Scheme::ExPost ? "expost" : "exante";
}

void checkUniformMdcSet(const std::vector<EquilibriumReport>& reports) {
  for (const EquilibriumReport& r : reports) {
    if (r.mdcs.size() != reports.front().mdcs.size())
      throw std::invalid_argument(
          "report rows disagree on the number of MDC columns");
    for (size_t m = 0; m < r.mdcs.size(); ++m)
      if (r.mdcs[m].busId != reports.front().mdcs[m].busId)
        throw std::invalid_argument("report rows disagree on MDC buses");
  }
}

std::ofstream openOut(const std::string& path) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

nlohmann::json vectorJson(const Eigen::VectorXd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

}  // namespace

void writeReportCsv(std::ostream& out,
                    const std::vector<EquilibriumReport>& reports) {
  out << "case,scheme,delta,forward,status,pivots,fpIterations,fpConverged,"
         "costLocal,costMdc,costTotal,emisLocal,emisMdc,emisWorkload,"
         "emisSystem,congestion";
  if (!reports.empty()) {
    checkUniformMdcSet(reports);
    for (const MdcOutcome& m : reports.front().mdcs)
      out << ",intensity_" << m.busId << ",leasing_" << m.busId
          << ",procurement_" << m.busId;
  }
  out << "\n";
  for (const EquilibriumReport& r : reports) {
    out << r.caseName << "," << schemeName(r.scheme) << "," << fmt(r.delta)
        << "," << fmt(r.forwardFraction) << "," << toString(r.status) << ","
        << r.pivotCount << "," << r.fixedPointIterations << ","
        << (r.fixedPointConverged ? 1 : 0) << ","
        << fmt(r.processingCostLocal) << "," << fmt(r.processingCostMdc)
        << "," << fmt(r.processingCostTotal) << "," << fmt(r.emissionsLocal)
        << "," << fmt(r.emissionsMdc) << "," << fmt(r.emissionsWorkloadTotal)
        << "," << fmt(r.emissionsSystem) << "," << fmt(r.congestionCost);
    for (const MdcOutcome& m : r.mdcs)
      out << "," << fmt(m.intensity) << "," << fmt(m.leasingPrice) << ","
          << fmt(m.avgProcurementCost);
    out << "\n";
  }
}

void writeReportCsv(const std::string& path,
                    const std::vector<EquilibriumReport>& reports) {
  std::ofstream out = openOut(path);
  writeReportCsv(out, reports);
}

void writeReportJson(std::ostream& out,
                     const std::vector<EquilibriumReport>& reports) {
  nlohmann::json rows = nlohmann::json::array();
  for (const EquilibriumReport& r : reports) {
    nlohmann::json row;
    row["case"] = r.caseName;
    row["scheme"] = schemeName(r.scheme);
    row["delta"] = r.delta;
    row["forward"] = r.forwardFraction;
    row["status"] = toString(r.status);
    row["pivots"] = r.pivotCount;
    row["fpIterations"] = r.fixedPointIterations;
    row["fpConverged"] = r.fixedPointConverged;
    row["costLocal"] = r.processingCostLocal;
    row["costMdc"] = r.processingCostMdc;
    row["costTotal"] = r.processingCostTotal;
    row["emisLocal"] = r.emissionsLocal;
    row["emisMdc"] = r.emissionsMdc;
    row["emisWorkload"] = r.emissionsWorkloadTotal;
    row["emisSystem"] = r.emissionsSystem;
    row["congestion"] = r.congestionCost;

    nlohmann::json mdcs = nlohmann::json::array();
    for (const MdcOutcome& m : r.mdcs) {
      nlohmann::json jm;
      jm["bus"] = m.busId;
      jm["leased"] = m.leased;
      jm["procured"] = m.procured;
      jm["spilled"] = m.spilled;
      jm["endowment"] = m.endowment;
      jm["intensity"] = m.intensity;
      jm["leasingPrice"] = m.leasingPrice;
      jm["procurementCost"] = m.avgProcurementCost;
      mdcs.push_back(std::move(jm));
    }
    row["mdcs"] = std::move(mdcs);

    nlohmann::json eps = nlohmann::json::array();
    for (Eigen::Index m = 0; m < r.intensity.eps.rows(); ++m)
      eps.push_back(vectorJson(r.intensity.eps.row(m).transpose()));
    row["declaredIntensity"] = std::move(eps);
    row["thetaD"] = vectorJson(r.thetaD);
    row["thetaX"] = vectorJson(r.thetaX);
    row["thetaK"] = vectorJson(r.thetaK);
    row["omega"] = vectorJson(r.omega);
    row["leasingPrices"] = vectorJson(r.leasingPrices);
    rows.push_back(std::move(row));
  }
  out << rows.dump(2) << "\n";
}

void writeReportJson(const std::string& path,
                     const std::vector<EquilibriumReport>& reports) {
  std::ofstream out = openOut(path);
  writeReportJson(out, reports);
}

void writeErrorJson(std::ostream& out, const std::string& kind,
                    const std::string& detail) {
  nlohmann::json j;
  j["error"] = kind;
  j["detail"] = detail;
  out << j.dump(2) << "\n";
}

}  // namespace gridmarket
