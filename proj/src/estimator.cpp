#include "shuttlekit/estimator.h"

#include "shuttlekit/error.h"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <fmt/format.h>

namespace shuttlekit {

ShuttleState EkfBelief::state() const {
  ShuttleState s;
  s.position = position();
  s.velocity = velocity();
  return s;
}

void NoiseConfig::validate() const {
  require(std::isfinite(accelPsd) && accelPsd >= 0.0, "process noise intensity must be >= 0");
  require(measurementCov.allFinite(), "measurement covariance must be finite");
  require(
      (measurementCov - measurementCov.transpose()).cwiseAbs().maxCoeff() <= 1e-12,
      "measurement covariance must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat3> eig(measurementCov);
  require(eig.eigenvalues().minCoeff() >= -1e-12, "measurement covariance must be PSD");
  require(std::isfinite(latency) && latency >= 0.0, "latency must be >= 0");
}

namespace {

Mat3 dragVelocityJacobian(const Vec3& v, const ShuttleParams& p) {
  const double speed = v.norm();
  if (speed == 0.0 || p.dragCoeff == 0.0) {
    return Mat3::Zero();
  }
  const double c = p.dragCoeff / p.mass;
  return -c * (speed * Mat3::Identity() + v * v.transpose() / speed);
}

Vec3 accelAt(const Vec3& v, const ShuttleParams& p) {
  return Vec3(0.0, 0.0, -p.gravity) - (p.dragCoeff / p.mass) * v.norm() * v;
}

} // namespace

Mat6 driftJacobian(const Vec3& velocity, const ShuttleParams& p) {
  Mat6 a = Mat6::Zero();
  a.topRightCorner<3, 3>() = Mat3::Identity();
  a.bottomRightCorner<3, 3>() = dragVelocityJacobian(velocity, p);
  return a;
}

Mat6 stepJacobian(const Vec3& velocity, const ShuttleParams& p, double dt) {
  // Chain rule through the four RK4 stages; the stage velocities mirror shuttlekit::step.
  const Mat6 eye = Mat6::Identity();
  const Vec3& v0 = velocity;
  const Vec3 v1 = v0 + 0.5 * dt * accelAt(v0, p);
  const Vec3 v2 = v0 + 0.5 * dt * accelAt(v1, p);
  const Vec3 v3 = v0 + dt * accelAt(v2, p);

  const Mat6 dk1 = driftJacobian(v0, p);
  const Mat6 dk2 = driftJacobian(v1, p) * (eye + 0.5 * dt * dk1);
  const Mat6 dk3 = driftJacobian(v2, p) * (eye + 0.5 * dt * dk2);
  const Mat6 dk4 = driftJacobian(v3, p) * (eye + dt * dk3);
  return eye + (dt / 6.0) * (dk1 + 2.0 * dk2 + 2.0 * dk3 + dk4);
}

Mat6 processNoise(double accelPsd, double dt) {
  Mat6 q = Mat6::Zero();
  const double dt2 = dt * dt;
  q.topLeftCorner<3, 3>() = Mat3::Identity() * (dt2 * dt / 3.0);
  q.topRightCorner<3, 3>() = Mat3::Identity() * (dt2 / 2.0);
  q.bottomLeftCorner<3, 3>() = Mat3::Identity() * (dt2 / 2.0);
  q.bottomRightCorner<3, 3>() = Mat3::Identity() * dt;
  return accelPsd * q;
}

void checkCovariance(const Mat6& p, const char* stage) {
  if (!p.allFinite()) {
    fail(ErrorKind::NumericalFailure, fmt::format("{}: covariance is not finite", stage));
  }
  const double scale = std::max(1.0, p.cwiseAbs().maxCoeff());
  if ((p - p.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    fail(ErrorKind::NumericalFailure, fmt::format("{}: covariance lost symmetry", stage));
  }
  Eigen::SelfAdjointEigenSolver<Mat6> eig(p, Eigen::EigenvaluesOnly);
  const double minEig = eig.eigenvalues().minCoeff();
  if (minEig < -1e-9) {
    fail(
        ErrorKind::NumericalFailure,
        fmt::format("{}: covariance not PSD (min eigenvalue {})", stage, minEig));
  }
}

EkfBelief ekfPredict(const EkfBelief& b, const ShuttleParams& p, const NoiseConfig& n, double dt) {
  if (!(dt > 0.0)) {
    fail(ErrorKind::InvalidInput, fmt::format("prediction step must be positive, got {}", dt));
  }
  const ShuttleState next = step(b.state(), p, dt);
  const Mat6 f = stepJacobian(b.velocity(), p, dt);

  EkfBelief out;
  out.mean << next.position, next.velocity;
  Mat6 cov = f * b.covariance * f.transpose() + processNoise(n.accelPsd, dt);
  out.covariance = 0.5 * (cov + cov.transpose());
  checkCovariance(out.covariance, "predict");
  return out;
}

UpdateResult ekfUpdate(const EkfBelief& b, const Vec3& z, const NoiseConfig& n) {
  if (!z.allFinite()) {
    fail(ErrorKind::InvalidInput, "measurement is not finite");
  }
  const Mat3 s = b.covariance.topLeftCorner<3, 3>() + n.measurementCov;
  Eigen::LDLT<Mat3> ldlt(s);
  const double scale = std::max(s.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= 1e-14 * scale) {
    fail(ErrorKind::NumericalFailure, "innovation covariance is singular");
  }

  UpdateResult r;
  r.residual = z - b.position();
  r.innovationCov = s;
  // K = P H^T S^-1, with H = [I 0].
  const Eigen::Matrix<double, 6, 3> pht = b.covariance.leftCols<3>();
  const Eigen::Matrix<double, 6, 3> gain = ldlt.solve(pht.transpose()).transpose();

  Eigen::Matrix<double, 6, 6> ikh = Mat6::Identity();
  ikh.leftCols<3>() -= gain;

  r.belief.mean = b.mean + gain * r.residual;
  const Mat6 cov = ikh * b.covariance * ikh.transpose() + gain * n.measurementCov * gain.transpose();
  r.belief.covariance = 0.5 * (cov + cov.transpose());
  checkCovariance(r.belief.covariance, "update");
  r.nis = r.residual.dot(ldlt.solve(r.residual));
  return r;
}

Trajectory predictTrajectory(
    const EkfBelief& b,
    const ShuttleParams& p,
    double dt,
    double horizon,
    double startTime) {
  require(horizon > 0.0, "prediction horizon must be positive");
  require(dt > 0.0, "prediction step must be positive");
  Trajectory traj;
  traj.push_back({startTime, b.state()});
  const auto steps = static_cast<long>(std::floor(horizon / dt + 1e-9));
  ShuttleState cur = b.state();
  for (long k = 1; k <= steps; ++k) {
    cur = step(cur, p, dt);
    traj.push_back({startTime + static_cast<double>(k) * dt, cur});
  }
  return traj;
}

std::optional<HitPoint> selectHitPoint(const Trajectory& traj, const HitCriteria& criteria) {
  require(!traj.empty(), "trajectory is empty");
  require(criteria.heightMin <= criteria.heightMax, "height band must satisfy min <= max");
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const Vec3& pos = traj[i].state.position;
    if (pos.z() < criteria.heightMin || pos.z() > criteria.heightMax) {
      continue;
    }
    if (!criteria.reachable.contains(pos)) {
      continue;
    }
    if (!best) {
      best = i;
      if (criteria.preference == HitPreference::Earliest) {
        break;
      }
      continue;
    }
    if (pos.z() > traj[*best].state.position.z()) {
      best = i;
    }
  }
  if (!best) {
    return std::nullopt;
  }
  const auto& sample = traj[*best];
  return HitPoint{sample.t, sample.state.position, sample.state.velocity};
}

EkfBelief initializeFromMeasurements(
    const Vec3& z0,
    const Vec3& z1,
    double dt,
    const NoiseConfig& n) {
  require(dt > 0.0, "measurement spacing must be positive");
  EkfBelief b;
  b.mean << z1, (z1 - z0) / dt;
  const Mat3& r = n.measurementCov;
  b.covariance.topLeftCorner<3, 3>() = r;
  b.covariance.topRightCorner<3, 3>() = r / dt;
  b.covariance.bottomLeftCorner<3, 3>() = r / dt;
  b.covariance.bottomRightCorner<3, 3>() = 2.0 * r / (dt * dt);
  return b;
}

} // namespace shuttlekit
