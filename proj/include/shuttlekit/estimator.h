#pragma once

#include "shuttlekit/shuttle.h"
#include "shuttlekit/spatial.h"

#include <Eigen/Core>

#include <optional>

namespace shuttlekit {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// Mean [position; velocity] and covariance of the shuttle state.
struct EkfBelief {
  Vec6 mean = Vec6::Zero();
  Mat6 covariance = Mat6::Zero();

  [[nodiscard]] Vec3 position() const {
    return mean.head<3>();
  }
  [[nodiscard]] Vec3 velocity() const {
    return mean.tail<3>();
  }
  [[nodiscard]] ShuttleState state() const;
};

struct NoiseConfig {
  /// White-noise acceleration intensity q, m^2/s^3.
  double accelPsd = 0.0;
  /// Position measurement covariance, m^2.
  Mat3 measurementCov = Mat3::Identity() * 1e-6;
  /// Measurements are assumed to have been taken this long before their stamp, s.
  double latency = 0.0;

  void validate() const;
};

struct UpdateResult {
  EkfBelief belief;
  Vec3 residual = Vec3::Zero();
  Mat3 innovationCov = Mat3::Zero();
  double nis = 0.0;
};

/// Continuous-time Jacobian of [v; a(v)] with respect to [p; v].
Mat6 driftJacobian(const Vec3& velocity, const ShuttleParams& p);

/// Exact Jacobian of one shuttlekit::step with respect to [p; v].
Mat6 stepJacobian(const Vec3& velocity, const ShuttleParams& p, double dt);

/// Discretized white-noise-acceleration covariance per axis:
/// q * [dt^3/3, dt^2/2; dt^2/2, dt].
Mat6 processNoise(double accelPsd, double dt);

/// Propagates the mean through the flight model and the covariance through
/// F P F^T + Q. Throws NumericalFailure if the result is not PSD.
EkfBelief ekfPredict(const EkfBelief& b, const ShuttleParams& p, const NoiseConfig& n, double dt);

/// Position-measurement update in Joseph form. Throws NumericalFailure when
/// the innovation covariance is singular.
UpdateResult ekfUpdate(const EkfBelief& b, const Vec3& z, const NoiseConfig& n);

/// Mean-only propagation from `startTime`; samples every dt up to the horizon.
Trajectory predictTrajectory(
    const EkfBelief& b,
    const ShuttleParams& p,
    double dt,
    double horizon,
    double startTime = 0.0);

enum class HitPreference { Earliest, Apex };

struct HitCriteria {
  double heightMin = 1.0;
  double heightMax = 1.3;
  AxisBox reachable{Vec3(0.4, 0.0, 1.2), Vec3(0.4, 2.0, 0.3)};
  HitPreference preference = HitPreference::Earliest;
};

struct HitPoint {
  double time = 0.0;
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
};

/// Picks a strike sample from a predicted trajectory: inside the height band
/// and the reachable box, earliest by default or highest for Apex, ties to
/// the earlier sample. Empty when nothing is feasible.
std::optional<HitPoint> selectHitPoint(const Trajectory& traj, const HitCriteria& criteria);

/// Throws NumericalFailure when P is asymmetric beyond 1e-9 or has an
/// eigenvalue below -1e-9.
void checkCovariance(const Mat6& p, const char* stage);

/// Seeds a belief from the first two measurements by finite differences.
EkfBelief initializeFromMeasurements(
    const Vec3& z0,
    const Vec3& z1,
    double dt,
    const NoiseConfig& n);

} // namespace shuttlekit
