#pragma once

#include "shuttlekit/spatial.h"

#include <Eigen/Core>

#include <vector>

namespace shuttlekit {

/// Bound applied to the time-to-hit input, s.
inline constexpr double kTimeToHitClip = 2.0;

using Vec6d = Eigen::Matrix<double, 6, 1>;

struct StrikeTarget {
  double hitTime = 0.0;
  Pose hitRacketPose;
  Pose recoveryRootPose;
};

enum class Phase { Preparation, Recovery };

const char* toString(Phase phase);

/// Pose deltas are laid out as [position (3), rotation vector (3)], base frame.
struct GoalObservation {
  double tth = 0.0;
  Vec6d hitDelta = Vec6d::Zero();
  Vec6d recoveryDelta = Vec6d::Zero();
  Phase phase = Phase::Preparation;

  /// [tth, hitDelta, recoveryDelta], 13 entries.
  [[nodiscard]] VecX flatten() const;
};

struct RobotState {
  Pose root;
  Twist rootTwist; ///< world frame
  VecX q;
  VecX qd;
  Vec3 projectedGravity = Vec3(0.0, 0.0, -1.0);
  VecX lastAction;
  double baseHeight = 0.0;
  std::vector<int> feetContacts;
};

/// clamp(hitTime - now, -2, 2); positive before impact.
double timeToHit(double now, double hitTime);

/// Position and orientation delta from `current` to `target`, rotated into `base`.
Vec6d poseDeltaInBase(const Pose& target, const Pose& current, const Pose& base);

/// Goal encoding with phase masking. tth == 0 counts as Preparation, so the
/// recovery block is zeroed at the impact instant.
GoalObservation encodeGoal(
    const RobotState& state,
    const Pose& currentRacket,
    const StrikeTarget& target,
    double now);

/// Convenience overload that computes the current racket pose by FK.
GoalObservation encodeGoal(
    const RobotState& state,
    const KinematicChain& chain,
    const std::string& racketFrame,
    const StrikeTarget& target,
    double now);

struct ClipFrame {
  double t = 0.0;
  Pose root;
  Vec3 rootLinear = Vec3::Zero();
  Vec3 rootAngular = Vec3::Zero();
  VecX q;
  std::vector<int> contacts;
};

struct ReferenceClip {
  std::vector<ClipFrame> frames;
  std::vector<double> hitTimes;
  std::vector<double> recoveryTimes;
};

/// Per future frame k = 1..H: root position, rotation, linear and angular
/// velocity deltas (12 entries, base frame of frame t) and joint deltas.
struct ReferenceWindow {
  std::vector<Eigen::Matrix<double, 12, 1>> rootDeltas;
  std::vector<VecX> jointDeltas;

  [[nodiscard]] VecX flatten() const;
};

/// Index of the last frame stamped at or before t, clamped to the clip.
std::size_t frameIndexAt(const ReferenceClip& clip, double t);

/// Window of H future frames starting after the frame at time t. Indices past
/// the clip end repeat the last frame. Throws InvalidInput on an empty clip.
ReferenceWindow referenceWindow(const ReferenceClip& clip, double t, std::size_t horizon);

} // namespace shuttlekit
