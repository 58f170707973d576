#pragma once

#include "shuttlekit/goal.h"
#include "shuttlekit/shuttle.h"
#include "shuttlekit/spatial.h"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace shuttlekit {

struct KernelTerm {
  double weight = 1.0;
  double sigma = 1.0;
};

enum class DirectionMode { Binary, Graded };

struct RewardConfig {
  std::vector<KernelTerm> hit;
  std::vector<KernelTerm> recovery;
  double sigmaTime = 0.5; ///< s
  double epsilon = 0.02; ///< s, half-width of the sparse strike window
  double taskWeight = 0.5;
  double styleWeight = 0.5;
  double speedScale = 10.0; ///< m/s at which the return-speed factor saturates
  DirectionMode directionMode = DirectionMode::Binary;
  double directionFalloff = 0.5; ///< m, graded mode only

  void validate() const;
  [[nodiscard]] double hitWeightSum() const;
  [[nodiscard]] double recoveryWeightSum() const;
};

struct TerminationConfig {
  double minBaseHeight = 0.4; ///< m
  double maxTilt = 1.0; ///< rad
  double maxDeviation = 0.5; ///< m

  void validate() const;
};

enum class TerminationReason { None, BaseHeight, Tilt, Deviation };

const char* toString(TerminationReason reason);

struct TerminationResult {
  bool terminate = false;
  TerminationReason reason = TerminationReason::None;
};

/// exp(-errSq / sigma). Throws InvalidInput for sigma <= 0 or errSq < 0.
double expKernel(double errSq, double sigma);

/// Sum_i w_i exp(-|d_i|^2 / sigma_i) over squared error norms.
double weightedKernelSum(std::span<const double> errSq, std::span<const KernelTerm> terms);

/// Squared norm of each error vector.
std::vector<double> squaredNorms(std::span<const VecX> deltas);

/// Dense hit tracking with exponential decay on |tth|.
double trackHitRewardDense(std::span<const VecX> deltas, double tth, const RewardConfig& c);
double trackHitRewardDense(std::span<const double> errSq, double tth, const RewardConfig& c);

/// Root recovery tracking, active only for tth < 0.
double trackRecoveryReward(std::span<const VecX> deltas, double tth, const RewardConfig& c);
double trackRecoveryReward(std::span<const double> errSq, double tth, const RewardConfig& c);

/// Sparse hit tracking, active only for |tth| < epsilon.
double trackHitRewardSparse(std::span<const VecX> deltas, double tth, const RewardConfig& c);
double trackHitRewardSparse(std::span<const double> errSq, double tth, const RewardConfig& c);

/// Direction factor times saturating speed factor of a return.
///
/// Binary mode yields 1 only for an in-bounds landing that cleared the net.
/// Graded mode multiplies the net gate by exp(-(d / falloff)^2), d being the
/// landing point's distance to the court rectangle, and needs the point.
double hitQualityReward(
    const CourtCheck& landing,
    double postImpactSpeed,
    const RewardConfig& c,
    const Vec3* landingPoint = nullptr,
    const CourtGeometry* court = nullptr);

/// max(0, 1 - 0.25 (d - 1)^2).
double styleReward(double discriminator);

/// w_g * task + w_s * style.
double totalReward(double task, double style, const RewardConfig& c);

/// Checks base height, then tilt, then root deviation from the reference.
TerminationResult terminationCheck(
    const RobotState& state,
    const Pose& refRoot,
    const TerminationConfig& c);

/// Angle between the body z axis and world z.
double baseTilt(const Pose& root);

/// Fraction of feet whose contact flag matches the reference schedule; 1 for no feet.
double contactMatchFraction(std::span<const int> actual, std::span<const int> reference);

/// Imitation-stage tracking reward: root, joint and end-effector kernels
/// plus the weighted contact match fraction.
struct ImitationTerms {
  KernelTerm root;
  KernelTerm joint;
  KernelTerm endEffector;
  double contactWeight = 1.0;
};

struct ImitationErrors {
  VecX root; ///< stacked boxminus errors of the root components
  VecX joint;
  VecX endEffector;
  double contactFraction = 1.0;
};

double imitationTrackingReward(const ImitationErrors& e, const ImitationTerms& terms);

enum class TrackingStage { Dense, Sparse };

struct RewardRow {
  double t = 0.0;
  double hit = 0.0;
  double recovery = 0.0;
  double style = 0.0;
  double total = 0.0;
};

/// Batch evaluation over a step log CSV with header
/// `t,tth,disc,hit_0..hit_{I-1},rec_0..rec_{J-1}` holding squared error
/// norms per component. The task reward of a row is hit + recovery.
std::vector<RewardRow> evaluateRewardLog(std::istream& csv, const RewardConfig& c, TrackingStage stage);

} // namespace shuttlekit
