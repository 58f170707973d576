#pragma once

#include "shuttlekit/spatial.h"

#include <optional>
#include <vector>

namespace shuttlekit {

/// Default integration step, matching a 200 Hz physics rate.
inline constexpr double kDefaultPhysicsDt = 0.005;

struct ShuttleState {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  /// Unit vector from skirt to head. Absent when the skirt orientation is not tracked.
  std::optional<Vec3> axis;
};

/// No values here are calibrated to a real shuttle; all are configuration.
struct ShuttleParams {
  double mass = 0.005; ///< kg
  double dragCoeff = 0.0; ///< k_d in F = -k_d |v| v, kg/m
  double axisDamping = 0.0; ///< relaxation rate of the skirt axis toward the flight direction, 1/s
  double gravity = 9.81; ///< m/s^2
  double headRestitution = 0.8;
  double skirtRestitution = 0.3;

  /// Throws InvalidInput when an invariant is violated.
  void validate() const;

  /// sqrt(m g / k_d); infinite when k_d == 0.
  [[nodiscard]] double terminalSpeed() const;
};

/// Opponent half of the court; the net is the plane x = netX.
struct CourtGeometry {
  double netHeight = 1.55;
  double netX = 3.0;
  double xMin = 3.0;
  double xMax = 9.7;
  double yMin = -3.05;
  double yMax = 3.05;

  void validate() const;
};

struct TimedState {
  double t = 0.0;
  ShuttleState state;
};

using Trajectory = std::vector<TimedState>;

struct LandingEvent {
  double time = 0.0;
  Vec3 point = Vec3::Zero();
};

struct FlightResult {
  Trajectory trajectory;
  /// Empty on airborne timeout.
  std::optional<LandingEvent> landing;
};

struct CourtCheck {
  bool inBounds = false;
  bool clearedNet = false;
};

/// Gravity plus isotropic quadratic drag.
Vec3 shuttleAccel(const ShuttleState& s, const ShuttleParams& p);

/// One classical RK4 step of position/velocity. The axis, when present, is
/// relaxed toward the post-step flight direction by a factor 1 - exp(-lambda dt).
ShuttleState step(const ShuttleState& s, const ShuttleParams& p, double dt);

/// Fixed-horizon integration. Samples at t0, t0 + dt, ... and a final
/// shortened step so the last sample lands exactly at t0 + duration.
Trajectory simulate(
    const ShuttleState& s,
    const ShuttleParams& p,
    double dt,
    double duration,
    double t0 = 0.0);

/// Integrates until the shuttle crosses z = 0 or t_max elapses. The landing
/// point is interpolated linearly in time across the crossing step.
FlightResult simulateToGround(
    const ShuttleState& s,
    const ShuttleParams& p,
    double dt,
    double tMax);

/// Default half-thickness of the contact slab around the racket plane.
inline constexpr double kDefaultContactDistance = 0.05;

/// Restitution-based contact against the racket face.
///
/// The face normal is the racket frame's local +x axis; both sides of the
/// face are active. The relative normal velocity is reversed and scaled by
/// the head restitution when the shuttle approaches head first (axis pointing
/// into the face, or axis absent), otherwise by the skirt restitution. The
/// tangential relative velocity is kept. Throws NoContact if the shuttle is
/// outside the contact slab or moving away from the face.
ShuttleState racketImpact(
    const ShuttleState& s,
    const Pose& racketPose,
    const Twist& racketVel,
    const ShuttleParams& p,
    double contactDistance = kDefaultContactDistance);

/// In-bounds test on the landing point and net clearance at the first
/// crossing of the net plane along the trajectory.
CourtCheck landsInCourt(const Vec3& landingPoint, const Trajectory& traj, const CourtGeometry& court);

/// Height at which the trajectory first crosses the net plane, if it does.
std::optional<double> netCrossingHeight(const Trajectory& traj, double netX);

/// Kinetic plus potential energy.
double mechanicalEnergy(const ShuttleState& s, const ShuttleParams& p);

} // namespace shuttlekit
