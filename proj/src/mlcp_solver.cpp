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

#include "gridmarket/mlcp_solver.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

namespace gridmarket {

const char* toString(SolveStatus s) {
  switch (s) {
    case SolveStatus::Solved:
      return "solved";
    case SolveStatus::Infeasible:
      return "infeasible";
    case SolveStatus::RayTermination:
      return "ray";
    case SolveStatus::IterationLimit:
      return "iteration-limit";
  }
  return "unknown";
}

namespace detail {

void eliminateRowsSerial(RowMatrixXd& tab, int pivotRow, int enterCol) {
  const int rows = static_cast<int>(tab.rows());
  for (int i = 0; i < rows; ++i) {
    if (i == pivotRow) continue;
    const double f = tab(i, enterCol);
    if (f == 0.0) continue;
    tab.row(i) -= f * tab.row(pivotRow);
  }
}

void eliminateRowsParallel(RowMatrixXd& tab, int pivotRow, int enterCol) {
#ifdef GRIDMARKET_HAVE_OPENMP
  const int rows = static_cast<int>(tab.rows());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < rows; ++i) {
    if (i == pivotRow) continue;
    const double f = tab(i, enterCol);
    if (f == 0.0) continue;
    tab.row(i) -= f * tab.row(pivotRow);
  }
#else
  eliminateRowsSerial(tab, pivotRow, enterCol);
#endif
}

}  // namespace detail

namespace {

/// Lexicographic comparison of tableau rows a and b, both divided by their
/// (positive) pivot-column entries.  The comparison scans the constant
/// column first and then the slack columns, which together hold the inverse
/// of the current basis, so no two rows ever compare equal in exact
/// arithmetic; a row-index fallback keeps the choice deterministic anyway.
bool lexLess(const RowMatrixXd& tab, int a, int b, double ca, double cb,
             int qCol, int n) {
  double va = tab(a, qCol) / ca;
  double vb = tab(b, qCol) / cb;
  if (va != vb) return va < vb;
  for (int c = 0; c < n; ++c) {
    va = tab(a, c) / ca;
    vb = tab(b, c) / cb;
    if (va != vb) return va < vb;
  }
  return a < b;
}

}  // namespace

MlcpInstance makeInstance(const Eigen::SparseMatrix<double>& M,
                          const Eigen::SparseMatrix<double>& N,
                          const Eigen::SparseMatrix<double>& D,
                          const Eigen::VectorXd& q,
                          const Eigen::VectorXd& r) {
  if (M.rows() != M.cols() || M.rows() != q.size() || N.rows() != M.rows() ||
      N.cols() != r.size() || D.rows() != D.cols() || D.rows() != r.size()) {
    throw AssemblyError("inconsistent matrix shapes");
  }
  MlcpInstance inst;
  inst.M = M;
  inst.N = N;
  inst.D = D;
  inst.q = q;
  inst.r = r;
  const int nz = static_cast<int>(q.size());
  const int npi = static_cast<int>(r.size());
  inst.layout.zOff[0] = 0;
  for (int b = 1; b <= kZBlockCount; ++b) inst.layout.zOff[b] = nz;
  inst.layout.piOff[0] = 0;
  for (int b = 1; b <= kPiBlockCount; ++b) inst.layout.piOff[b] = npi;
  return inst;
}

MlcpInstance makeInstance(const Eigen::MatrixXd& M, const Eigen::MatrixXd& N,
                          const Eigen::MatrixXd& D, const Eigen::VectorXd& q,
                          const Eigen::VectorXd& r) {
  return makeInstance(Eigen::SparseMatrix<double>(M.sparseView()),
                      Eigen::SparseMatrix<double>(N.sparseView()),
                      Eigen::SparseMatrix<double>(D.sparseView()), q, r);
}

MlcpInstance makeInstance(const Eigen::MatrixXd& M, const Eigen::VectorXd& q) {
  const int nz = static_cast<int>(q.size());
  return makeInstance(M, Eigen::MatrixXd::Zero(nz, 0),
                      Eigen::MatrixXd::Zero(0, 0), q, Eigen::VectorXd(0));
}

EquilibriumSolution solveMixed(const MlcpInstance& instance,
                               const SolverConfig& config) {
  const int nz = static_cast<int>(instance.M.rows());
  const int npi = static_cast<int>(instance.N.cols());
  const int n = nz + 2 * npi;

  EquilibriumSolution sol;
  sol.dimension = n;
  sol.z = Eigen::VectorXd::Zero(nz);
  sol.pi = Eigen::VectorXd::Zero(npi);
  if (n == 0) {
    sol.status = SolveStatus::Solved;
    return sol;
  }

  // Lift pi = u - v into a plain complementarity system over x = (z, u, v).
  // The two equality half-rows carry opposite signs, so their slacks can
  // only both be feasible when the equality holds exactly.
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  A.topLeftCorner(nz, nz) = Eigen::MatrixXd(instance.M);
  if (npi > 0) {
    Eigen::MatrixXd Nd(instance.N);
    Eigen::MatrixXd Dd(instance.D);
    A.block(0, nz, nz, npi) = Nd;
    A.block(0, nz + npi, nz, npi) = -Nd;
    A.block(nz, 0, npi, nz) = -Nd.transpose();
    A.block(nz, nz, npi, npi) = -Dd;
    A.block(nz, nz + npi, npi, npi) = Dd;
    A.block(nz + npi, 0, npi, nz) = Nd.transpose();
    A.block(nz + npi, nz, npi, npi) = Dd;
    A.block(nz + npi, nz + npi, npi, npi) = -Dd;
  }
  Eigen::VectorXd qf(n);
  qf.head(nz) = instance.q;
  if (npi > 0) {
    qf.segment(nz, npi) = instance.r;
    qf.tail(npi) = -instance.r;
  }

  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  if (config.pivotOrder == PivotOrder::Reversed) {
    for (int i = 0; i < n; ++i) perm[i] = n - 1 - i;
    Eigen::MatrixXd Ap(n, n);
    Eigen::VectorXd qp(n);
    for (int i = 0; i < n; ++i) {
      qp[i] = qf[perm[i]];
      for (int j = 0; j < n; ++j) Ap(i, j) = A(perm[i], perm[j]);
    }
    A.swap(Ap);
    qf.swap(qp);
  }

  // Symmetric max-norm equilibration: a positive diagonal congruence keeps
  // both nonnegativity and the copositive-plus structure intact.
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(n);
  if (config.equilibrate) {
    for (int pass = 0; pass < 6; ++pass) {
      bool settled = true;
      Eigen::VectorXd d(n);
      for (int i = 0; i < n; ++i) {
        double m = std::max(A.row(i).cwiseAbs().maxCoeff(),
                            A.col(i).cwiseAbs().maxCoeff());
        if (m <= 0.0) {
          d[i] = 1.0;
          continue;
        }
        d[i] = std::sqrt(m);
        if (m < 0.5 || m > 2.0) settled = false;
      }
      if (settled) break;
      for (int i = 0; i < n; ++i) {
        scale[i] /= d[i];
        qf[i] /= d[i];
      }
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) A(i, j) /= d[i] * d[j];
      }
    }
  }

  auto finish = [&](const Eigen::VectorXd& xLifted) {
    sol.z = xLifted.head(nz);
    if (npi > 0) {
      sol.pi = xLifted.segment(nz, npi) - xLifted.tail(npi);
    }
    sol.residuals = residual(instance, sol.z, sol.pi);
  };

  if (qf.minCoeff() >= 0.0) {
    sol.status = SolveStatus::Solved;
    finish(Eigen::VectorXd::Zero(n));
    return sol;
  }

  Eigen::VectorXd cover = Eigen::VectorXd::Ones(n);
  if (config.coveringVector.size() > 0) {
    if (config.coveringVector.size() != n) {
      throw AssemblyError("covering vector has wrong dimension");
    }
    if (config.coveringVector.minCoeff() <= 0.0) {
      throw AssemblyError("covering vector must be strictly positive");
    }
    for (int i = 0; i < n; ++i) cover[i] = config.coveringVector[perm[i]];
  }

  // Tableau columns: [slacks | variables | cover | constants].
  const int coverCol = 2 * n;
  const int qCol = 2 * n + 1;
  RowMatrixXd tab(n, 2 * n + 2);
  tab.setZero();
  for (int i = 0; i < n; ++i) tab(i, i) = 1.0;
  tab.middleCols(n, n) = -A;
  tab.col(coverCol) = -cover;
  tab.col(qCol) = qf;

  // Variable ids: [0, n) slack w_i, [n, 2n) variable x_i, 2n cover; they
  // coincide with their tableau columns by construction.
  const int coverVar = 2 * n;
  std::vector<int> basis(n);
  for (int i = 0; i < n; ++i) basis[i] = i;

  std::ostringstream trace;
  auto varName = [&](int var) {
    if (var == coverVar) return std::string("cover");
    if (var < n) return "w" + std::to_string(var);
    return "x" + std::to_string(var - n);
  };

  auto eliminate = [&](int pivotRow, int enterCol) {
    tab.row(pivotRow) /= tab(pivotRow, enterCol);
    if (config.useParallelKernel) {
      detail::eliminateRowsParallel(tab, pivotRow, enterCol);
    } else {
      detail::eliminateRowsSerial(tab, pivotRow, enterCol);
    }
  };

  // Leaving-row choice among rows with positive entering coefficient:
  // lexicographic minimum of the scaled rows (cycle-free), or the plain
  // minimum ratio with a smallest-index tiebreak when disabled.
  auto chooseLeaving = [&](int enterCol, bool everyRow) {
    int best = -1;
    for (int i = 0; i < n; ++i) {
      const double coef =
          everyRow ? cover[i] : tab(i, enterCol);
      if (!everyRow && coef <= config.pivotTolerance) continue;
      if (best < 0) {
        best = i;
        continue;
      }
      const double coefBest = everyRow ? cover[best] : tab(best, enterCol);
      if (config.lexicographic) {
        if (lexLess(tab, i, best, coef, coefBest, qCol, n)) best = i;
      } else {
        const double ri = tab(i, qCol) / coef;
        const double rb = tab(best, qCol) / coefBest;
        if (ri < rb) best = i;
      }
    }
    return best;
  };

  const int maxPivots = config.maxPivots > 0 ? config.maxPivots : 50 * n;

  auto coverRowIndex = [&]() {
    for (int i = 0; i < n; ++i)
      if (basis[i] == coverVar) return i;
    return -1;
  };

  // Drive the cover variable in against the most negative scaled constant.
  int leaveRow = chooseLeaving(coverCol, /*everyRow=*/true);
  eliminate(leaveRow, coverCol);
  int leftVar = basis[leaveRow];
  basis[leaveRow] = coverVar;
  sol.pivotCount = 1;
  if (config.recordPivotTrace) {
    trace << "pivot 1: enter cover leave " << varName(leftVar) << " row "
          << leaveRow << "\n";
  }
  int enterVar = leftVar + n;  // complement of the slack that just left

  while (true) {
    if (sol.pivotCount >= maxPivots) {
      sol.status = SolveStatus::IterationLimit;
      break;
    }
    leaveRow = chooseLeaving(enterVar, /*everyRow=*/false);
    // Degenerate ties would otherwise let the cover sit in the basis at
    // value zero indefinitely: whenever the cover row attains the minimum
    // ratio, retire the cover and stop at the solution it certifies.
    if (leaveRow >= 0 && basis[leaveRow] != coverVar) {
      const int coverRow = coverRowIndex();
      const double coverCoef =
          coverRow >= 0 ? tab(coverRow, enterVar) : 0.0;
      if (coverCoef > config.pivotTolerance) {
        const double coverRatio = tab(coverRow, qCol) / coverCoef;
        const double bestRatio =
            tab(leaveRow, qCol) / tab(leaveRow, enterVar);
        if (coverRatio <= bestRatio + 1e-9 * (1.0 + std::abs(bestRatio))) {
          leaveRow = coverRow;
        }
      }
    }
    if (leaveRow < 0) {
      // A vanished cover is a solution even though it never formally left
      // the basis; only a ray with the cover still positive certifies
      // anything about the instance.
      const int coverRow = coverRowIndex();
      if (coverRow >= 0 &&
          tab(coverRow, qCol) <= 1e-9 * (1.0 + qf.cwiseAbs().maxCoeff())) {
        sol.status = SolveStatus::Solved;
        break;
      }
      sol.status = config.copositivePlus ? SolveStatus::Infeasible
                                         : SolveStatus::RayTermination;
      sol.failureIndex = perm[enterVar % n];
      break;
    }
    eliminate(leaveRow, enterVar);
    ++sol.pivotCount;
    leftVar = basis[leaveRow];
    basis[leaveRow] = enterVar;
    if (config.recordPivotTrace) {
      trace << "pivot " << sol.pivotCount << ": enter " << varName(enterVar)
            << " leave " << varName(leftVar) << " row " << leaveRow << "\n";
    }
    if (leftVar == coverVar) {
      sol.status = SolveStatus::Solved;
      break;
    }
    enterVar = leftVar < n ? leftVar + n : leftVar - n;
  }
  if (config.recordPivotTrace) sol.pivotTrace = trace.str();

  Eigen::VectorXd xScaled = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    const int var = basis[i];
    if (var >= n && var < 2 * n) {
      xScaled[var - n] = std::max(0.0, tab(i, qCol));
    }
  }
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) x[perm[i]] = scale[i] * xScaled[i];
  finish(x);
  return sol;
}

}  // namespace gridmarket
