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

#ifndef GRIDMARKET_REPORT_IO_HPP
#define GRIDMARKET_REPORT_IO_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "gridmarket/scenario.hpp"

namespace gridmarket {

/// Plot-ready CSV: a header row, then one row per report.  Fixed columns
/// first (identity, solve stats, costs, emissions, congestion), then three
/// columns per MDC in bus order: intensity_<bus>, leasing_<bus>,
/// procurement_<bus>.  Every row must carry the same MDC set.
void writeReportCsv(std::ostream& out,
                    const std::vector<EquilibriumReport>& reports);
void writeReportCsv(const std::string& path,
                    const std::vector<EquilibriumReport>& reports);

/// Full-fidelity JSON: everything in the CSV plus the per-bus price and
/// wheeling-charge vectors and the declared-intensity matrix.
void writeReportJson(std::ostream& out,
                     const std::vector<EquilibriumReport>& reports);
void writeReportJson(const std::string& path,
                     const std::vector<EquilibriumReport>& reports);

/// Machine-readable failure record: {"error": kind, "detail": message}.
void writeErrorJson(std::ostream& out, const std::string& kind,
                    const std::string& detail);

}  // namespace gridmarket

#endif  // GRIDMARKET_REPORT_IO_HPP
