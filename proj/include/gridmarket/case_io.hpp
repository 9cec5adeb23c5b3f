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

#ifndef GRIDMARKET_CASE_IO_HPP
#define GRIDMARKET_CASE_IO_HPP

#include <iosfwd>
#include <stdexcept>
#include <string>

#include "gridmarket/market_model.hpp"
#include "gridmarket/mlcp_solver.hpp"

namespace gridmarket {

/// Syntax or reference error in a case file, pinned to a source location.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& path, int line, int column,
             const std::string& message);

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_ = 0;
  int column_ = 0;
};

/// Semantic violation found after a syntactically clean parse (the
/// collected validateCase output, or a failed demand calibration).
class CaseError : public std::runtime_error {
 public:
  explicit CaseError(const std::string& what) : std::runtime_error(what) {}
};

/// Parse a case document.  `path` labels error messages only.  Runs the
/// demand-calibration pipeline when the [demand] section uses fixed loads
/// (least-cost dispatch for nodal duals, then curve fitting), and checks
/// every structural invariant before returning.
MarketCase parseCase(std::istream& in, const std::string& path = "<stream>");

/// Read and parse a case file from disk.
MarketCase loadCase(const std::string& path);

/// Render a case back to document form.  Demand is always written as
/// explicit curves (the calibrated form), so a reparse reproduces the
/// MarketCase exactly, field for field.
std::string serializeCase(const MarketCase& c);

/// serializeCase straight to a file.
void saveCase(const MarketCase& c, const std::string& path);

/// Apply the case's [solver] overrides on top of a base configuration.
SolverConfig effectiveSolverConfig(const MarketCase& c,
                                   const SolverConfig& base = {});

}  // namespace gridmarket

#endif  // GRIDMARKET_CASE_IO_HPP
