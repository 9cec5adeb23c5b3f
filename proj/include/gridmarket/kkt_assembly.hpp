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

#ifndef GRIDMARKET_KKT_ASSEMBLY_HPP
#define GRIDMARKET_KKT_ASSEMBLY_HPP

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "gridmarket/market_model.hpp"

namespace gridmarket {

class AssemblyError : public std::runtime_error {
 public:
  explicit AssemblyError(const std::string& what)
      : std::runtime_error(what) {}
};

/// Nonnegative (complementarity) variable blocks, in storage order.
enum ZBlock {
  kZD = 0,    ///< consumer purchases d_{jhit}
  kZG,        ///< producer sales g_{jhit}
  kZLambda,   ///< producer capacity multipliers
  kZMu1,      ///< lower flow-limit multipliers
  kZMu2,      ///< upper flow-limit multipliers
  kZP,        ///< MDC procurement p_{jhit}
  kZKr,       ///< MDC leased capacity k^r_{bit}
  kZS,        ///< MDC renewable spillover s_{it}
  kZRho,      ///< MDC capacity multipliers
  kZUpsilon,  ///< spill-cap multipliers
  kZKs,       ///< hyperscaler offloaded capacity k^s_{bit}
  kZEll,      ///< hyperscaler local processing l_{bjhit}
  kZFwd,      ///< forward lower-bound multipliers (empty until applied)
  kZBlockCount
};

/// Free (equality-paired) variable blocks, in storage order.
enum PiBlock {
  kPiThetaD = 0,  ///< consumer contract prices
  kPiThetaX,      ///< MDC contract prices
  kPiThetaK,      ///< hyperscaler contract prices
  kPiOmega,       ///< wheeling charges per bus
  kPiAlpha,       ///< GPU leasing prices
  kPiY,           ///< net bus withdrawals
  kPiGamma,       ///< system energy-balance price
  kPiEta,         ///< MDC energy-balance prices
  kPiPsi,         ///< batch workload-balance prices (delta-scaled)
  kPiBlockCount
};

/// Index map from named variable blocks to flat positions.  Ordering inside
/// each block is lexicographic by (batch, plant, counterparty bus, period),
/// with plants in case order and buses sorted by index.
struct BlockLayout {
  int T = 1;
  int nBus = 0;
  int nPlant = 0;
  int nLine = 0;
  int hubBus = 0;

  std::vector<int> consumerBuses;  ///< sorted bus indices of I^d
  std::vector<int> mdcBuses;       ///< sorted bus indices of I^chi
  std::vector<int> mdcOrder;       ///< position into MarketCase::mdcs per slot
  int hyperBus = -1;               ///< bus index of I^kappa, -1 when absent
  int nBatch = 0;
  std::vector<std::pair<int, int>> leasePairs;  ///< (batch, mdcSlot), b-major
  std::vector<int> traderBuses;  ///< sorted union of consumer/mdc/hyper buses

  std::array<int, kZBlockCount + 1> zOff{};
  std::array<int, kPiBlockCount + 1> piOff{};

  int nz() const { return zOff[kZBlockCount]; }
  int npi() const { return piOff[kPiBlockCount]; }
  int zSize(ZBlock b) const { return zOff[b + 1] - zOff[b]; }
  int piSize(PiBlock b) const { return piOff[b + 1] - piOff[b]; }

  int nConsumer() const { return static_cast<int>(consumerBuses.size()); }
  int nMdc() const { return static_cast<int>(mdcBuses.size()); }
  int nTrader() const { return static_cast<int>(traderBuses.size()); }
  int nLease() const { return static_cast<int>(leasePairs.size()); }

  int consumerPos(int bus) const;  ///< -1 if bus is not a consumer
  int mdcPos(int bus) const;       ///< -1 if bus hosts no MDC
  int traderPos(int bus) const;    ///< -1 if bus is not a counterparty
  int leasePos(int batch, int mdcSlot) const;  ///< -1 if not admissible

  // Flat z indices.
  int idxD(int plant, int consumerSlot, int t) const;
  int idxG(int plant, int traderSlot, int t) const;
  int idxLambda(int plant, int t) const;
  int idxMu1(int line, int t) const;
  int idxMu2(int line, int t) const;
  int idxP(int plant, int mdcSlot, int t) const;
  int idxKr(int leaseSlot, int t) const;
  int idxS(int mdcSlot, int t) const;
  int idxRho(int mdcSlot, int t) const;
  int idxUpsilon(int mdcSlot, int t) const;
  int idxKs(int leaseSlot, int t) const;
  int idxEll(int batch, int plant, int t) const;
  int idxFwd(int plant, int consumerSlot, int t) const;

  // Flat pi indices.
  int idxThetaD(int plant, int consumerSlot, int t) const;
  int idxThetaX(int plant, int mdcSlot, int t) const;
  int idxThetaK(int plant, int t) const;
  int idxOmega(int bus, int t) const;
  int idxAlpha(int leaseSlot, int t) const;
  int idxY(int bus, int t) const;
  int idxGamma(int t) const;
  int idxEta(int mdcSlot, int t) const;
  int idxPsi(int batch, int t) const;
};

/// Frozen MDC emission intensities (t/MWh) per MDC slot and period, used by
/// the ex ante assembly.
struct IntensityVector {
  Eigen::MatrixXd eps;  // nMdc x T

  static IntensityVector zero(int nMdc, int T) {
    IntensityVector v;
    v.eps = Eigen::MatrixXd::Zero(nMdc, T);
    return v;
  }
};

/// The assembled mixed complementarity data:
///   0 <= z  perp  M z + N pi + q >= 0
///   N^T z + D pi = r
/// D is the skew coupling among free variables inside the wheeling /
/// withdrawal / balance identities; it vanishes everywhere else.
struct MlcpInstance {
  Eigen::SparseMatrix<double> M;  // nz x nz
  Eigen::SparseMatrix<double> N;  // nz x npi
  Eigen::SparseMatrix<double> D;  // npi x npi, skew-symmetric
  Eigen::VectorXd q;              // nz
  Eigen::VectorXd r;              // npi
  BlockLayout layout;
};

/// Effective preference weight used by the assembly: delta clamped to
/// [kMinDelta, 1].  An exact zero weight removes every price term from the
/// hyperscaler's optimality rows and leaves its contract markets unpriced, so
/// the smallest admissible weight stands in for "emissions only".  The floor
/// also bounds the disclosure weight (1-delta)/delta; below 0.1 that weight
/// is steep enough that the ex-ante intensity map loses its fixed point (the
/// workload assignment flips faster than the disclosed intensity can settle).
inline constexpr double kMinDelta = 0.1;
inline double effectiveDelta(double delta) {
  return delta < kMinDelta ? kMinDelta : (delta > 1.0 ? 1.0 : delta);
}

struct SchemeContext {
  Scheme scheme = Scheme::ExPost;
  /// Overrides the case's hyperscaler delta when set (sweep support).
  std::optional<double> deltaOverride;
  /// Required when scheme == ExAnte; ignored otherwise.
  std::optional<IntensityVector> intensity;
  /// Optional externally computed PTDF cache (must match the case network).
  const PtdfMatrix* ptdf = nullptr;
};

BlockLayout buildLayout(const MarketCase& c);

MlcpInstance assemble(const MarketCase& c, const SchemeContext& ctx);

/// Append forward lower bounds g >= phi * gBaseline on every consumer-side
/// position.  gBaseline indexes the g block of `instance.layout` (length
/// zSize(kZG)); entries for non-consumer counterparties are ignored.
MlcpInstance applyForwardBounds(const MlcpInstance& instance,
                                const Eigen::VectorXd& gBaseline, double phi);

struct Residual {
  double complementarityGap = 0.0;  ///< max_i |z_i (Mz + Npi + q)_i|
  double equalityGap = 0.0;         ///< max-norm of N^T z + D pi - r
  double nonnegViolation = 0.0;     ///< max(0, -min z, -min(Mz + Npi + q))
};

Residual residual(const MlcpInstance& instance, const Eigen::VectorXd& z,
                  const Eigen::VectorXd& pi);

/// Debug dump of (M, N, D, q, r) in a sparse-triplet text format (see
/// README for the grammar).
std::string dumpInstance(const MlcpInstance& instance);

}  // namespace gridmarket

#endif  // GRIDMARKET_KKT_ASSEMBLY_HPP
