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

// Pivot-kernel benchmark: times the serial and the parallel row-elimination
// kernel on identical tableaus and checks the results stay bitwise equal,
// then compares end-to-end solve times on random monotone problems.
//
//   gridmarket-bench [--sizes n1,n2,...] [--pivots P] [--seed S]

#include <chrono>
#include <cstdint>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gridmarket/mlcp_solver.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

std::vector<int> parseSizes(const std::string& text) {
  std::vector<int> out;
  std::istringstream is(text);
  std::string item;
  while (std::getline(is, item, ','))
    if (!item.empty()) out.push_back(std::stoi(item));
  return out;
}

/// One timed sweep: `pivots` eliminations at random pivot positions on an
/// n x (2n+2) tableau.  Both kernels replay the identical pivot sequence.
void benchKernels(int n, int pivots, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int cols = 2 * n + 2;
  gridmarket::RowMatrixXd base(n, cols);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < cols; ++j) base(i, j) = gauss(rng);
  // Keep pivot elements away from zero so the replay stays well scaled.
  std::vector<std::pair<int, int>> sequence;
  std::uniform_int_distribution<int> rowPick(0, n - 1);
  std::uniform_int_distribution<int> colPick(0, cols - 1);
  for (int p = 0; p < pivots; ++p) sequence.push_back({rowPick(rng), colPick(rng)});

  auto replay = [&](void (*kernel)(gridmarket::RowMatrixXd&, int, int),
                    gridmarket::RowMatrixXd& tab) {
    for (auto [row, col] : sequence) {
      double head = tab(row, col);
      if (std::abs(head) < 1e-3) {  // renormalise so the sweep cannot blow up
        tab.row(row).setZero();
        tab(row, col) = head = 1.0;
      }
      tab.row(row) /= head;
      kernel(tab, row, col);
    }
  };

  gridmarket::RowMatrixXd serial = base;
  Clock::time_point t0 = Clock::now();
  replay(&gridmarket::detail::eliminateRowsSerial, serial);
  Clock::time_point t1 = Clock::now();

  gridmarket::RowMatrixXd parallel = base;
  Clock::time_point t2 = Clock::now();
  replay(&gridmarket::detail::eliminateRowsParallel, parallel);
  Clock::time_point t3 = Clock::now();

  const bool identical = serial.cwiseEqual(parallel).all();
  const double ts = seconds(t0, t1);
  const double tp = seconds(t2, t3);
  std::printf(
      "kernel  n=%5d  pivots=%4d   serial %8.3f ms   parallel %8.3f ms   "
      "speedup %5.2fx   bitwise %s\n",
      n, pivots, ts * 1e3, tp * 1e3, ts / tp, identical ? "EQUAL" : "DIFFER");
  if (!identical) std::exit(1);
}

/// End-to-end: a random monotone LCP solved with each kernel choice.
void benchSolve(int n, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = gauss(rng);
  Eigen::MatrixXd M = A.transpose() * A + Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd q(n);
  for (int i = 0; i < n; ++i) q[i] = gauss(rng) * 10.0;

  gridmarket::MlcpInstance inst = gridmarket::makeInstance(M, q);
  auto runWith = [&](bool parallel) {
    gridmarket::SolverConfig cfg;
    cfg.useParallelKernel = parallel;
    Clock::time_point t0 = Clock::now();
    gridmarket::EquilibriumSolution sol = gridmarket::solveMixed(inst, cfg);
    Clock::time_point t1 = Clock::now();
    return std::make_pair(sol, seconds(t0, t1));
  };
  auto [solSerial, ts] = runWith(false);
  auto [solParallel, tp] = runWith(true);
  const bool same = solSerial.pivotCount == solParallel.pivotCount &&
                    solSerial.z.cwiseEqual(solParallel.z).all();
  std::printf(
      "solve   n=%5d  pivots=%4d   serial %8.3f ms   parallel %8.3f ms   "
      "speedup %5.2fx   path %s\n",
      n, solSerial.pivotCount, ts * 1e3, tp * 1e3, ts / tp,
      same ? "IDENTICAL" : "DIVERGED");
  if (!same) std::exit(1);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"row-elimination kernel benchmark"};
  std::string sizesArg = "256,512,1024,2048";
  int pivots = 200;
  std::uint32_t seed = 20260816;
  app.add_option("--sizes", sizesArg, "tableau sizes, comma separated");
  app.add_option("--pivots", pivots, "eliminations per kernel sweep");
  app.add_option("--seed", seed, "random seed");
  CLI11_PARSE(app, argc, argv);

  std::cout << "-- kernel replay (identical pivot sequence) --\n";
  for (int n : parseSizes(sizesArg)) benchKernels(n, pivots, seed);
  std::cout << "-- full solves on random monotone problems --\n";
  for (int n : {100, 200, 400}) benchSolve(n, seed);
  return 0;
}
