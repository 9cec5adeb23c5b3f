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

#ifndef GRIDMARKET_MLCP_SOLVER_HPP
#define GRIDMARKET_MLCP_SOLVER_HPP

#include <Eigen/Dense>

#include "gridmarket/kkt_assembly.hpp"

namespace gridmarket {

using RowMatrixXd =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class SolveStatus {
  Solved,           ///< complementary basic solution found
  Infeasible,       ///< secondary ray on a copositive-plus instance
  RayTermination,   ///< secondary ray, no structure claimed
  IterationLimit,   ///< pivot budget exhausted
};

const char* toString(SolveStatus s);

/// Internal permutation applied to the pivoting order.  Both orders must
/// reach the same equilibrium quantities on well-posed instances; the knob
/// exists so tests can probe that.
enum class PivotOrder { Natural, Reversed };

struct SolverConfig {
  double pivotTolerance = 1e-9;  ///< eligibility threshold for pivot entries
  double complementarityTolerance = 1e-8;  ///< post-solve residual target
  int maxPivots = 0;             ///< <= 0 selects 50 x dimension
  bool lexicographic = true;     ///< anti-cycling ratio test
  bool copositivePlus = true;    ///< ray termination certifies infeasibility
  bool equilibrate = true;       ///< symmetric max-norm scaling
  bool useParallelKernel = true; ///< OpenMP row elimination (bitwise equal)
  PivotOrder pivotOrder = PivotOrder::Natural;
  /// Covering direction for the artificial variable; empty selects all-ones.
  /// Must be strictly positive and of lifted dimension when given.
  Eigen::VectorXd coveringVector;
  bool recordPivotTrace = false;  ///< fill EquilibriumSolution::pivotTrace
};

struct EquilibriumSolution {
  SolveStatus status = SolveStatus::RayTermination;
  Eigen::VectorXd z;     ///< nonnegative block
  Eigen::VectorXd pi;    ///< free block
  Residual residuals;    ///< measured on the original instance
  int pivotCount = 0;
  int dimension = 0;     ///< size of the lifted complementarity system
  /// Lifted variable that wanted to enter when pivoting broke down (ray or
  /// no eligible pivot above tolerance); -1 on clean termination.
  int failureIndex = -1;
  /// One line per pivot ("pivot N: enter VAR leave VAR row R") when
  /// requested; variables print as w<i>, x<i>, or cover.
  std::string pivotTrace;
};

/// Solve 0 <= z perp Mz + Npi + q >= 0,  N^T z + D pi = r by complementary
/// pivoting on the nonnegative lifting pi = u - v.  The lifted matrix is
/// copositive-plus whenever sym(M) is positive semidefinite and D is skew,
/// which holds for every instance `assemble` produces.
EquilibriumSolution solveMixed(const MlcpInstance& instance,
                               const SolverConfig& config = {});

/// Wrap raw matrices in an instance with an anonymous single-block layout.
/// Intended for tests and auxiliary subproblems, not market cases.
MlcpInstance makeInstance(const Eigen::SparseMatrix<double>& M,
                          const Eigen::SparseMatrix<double>& N,
                          const Eigen::SparseMatrix<double>& D,
                          const Eigen::VectorXd& q, const Eigen::VectorXd& r);

/// Dense convenience overload for small systems.
MlcpInstance makeInstance(const Eigen::MatrixXd& M, const Eigen::MatrixXd& N,
                          const Eigen::MatrixXd& D, const Eigen::VectorXd& q,
                          const Eigen::VectorXd& r);

/// Pure LCP convenience: 0 <= z perp Mz + q >= 0.
MlcpInstance makeInstance(const Eigen::MatrixXd& M, const Eigen::VectorXd& q);

namespace detail {

/// Gauss-Jordan elimination of every row except `pivotRow` against the
/// (already normalised) pivot row.  The two kernels produce bitwise
/// identical tableaus; the parallel one distributes rows across threads.
void eliminateRowsSerial(RowMatrixXd& tab, int pivotRow, int enterCol);
void eliminateRowsParallel(RowMatrixXd& tab, int pivotRow, int enterCol);

}  // namespace detail

}  // namespace gridmarket

#endif  // GRIDMARKET_MLCP_SOLVER_HPP
