#include "shuttlekit/shuttle.h"

#include "shuttlekit/error.h"

#include <cmath>
#include <fmt/format.h>
#include <limits>

namespace shuttlekit {

void ShuttleParams::validate() const {
  require(std::isfinite(mass) && mass > 0.0, "shuttle mass must be > 0");
  require(std::isfinite(dragCoeff) && dragCoeff >= 0.0, "drag coefficient must be >= 0");
  require(std::isfinite(axisDamping) && axisDamping >= 0.0, "axis damping must be >= 0");
  require(std::isfinite(gravity), "gravity must be finite");
  require(headRestitution >= 0.0 && headRestitution <= 1.0, "head restitution must be in [0, 1]");
  require(skirtRestitution >= 0.0 && skirtRestitution <= 1.0, "skirt restitution must be in [0, 1]");
}

double ShuttleParams::terminalSpeed() const {
  if (dragCoeff == 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  return std::sqrt(mass * gravity / dragCoeff);
}

void CourtGeometry::validate() const {
  require(netHeight > 0.0, "net height must be > 0");
  require(xMin < xMax, "court requires x_min < x_max");
  require(yMin < yMax, "court requires y_min < y_max");
}

Vec3 shuttleAccel(const ShuttleState& s, const ShuttleParams& p) {
  const Vec3 gravity(0.0, 0.0, -p.gravity);
  return gravity - (p.dragCoeff / p.mass) * s.velocity.norm() * s.velocity;
}

namespace {

Vec3 accelAt(const Vec3& v, const ShuttleParams& p) {
  return Vec3(0.0, 0.0, -p.gravity) - (p.dragCoeff / p.mass) * v.norm() * v;
}

} // namespace

ShuttleState step(const ShuttleState& s, const ShuttleParams& p, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    fail(ErrorKind::InvalidInput, fmt::format("step size must be positive, got {}", dt));
  }

  // Position derivative is velocity, so each stage only needs the velocity.
  const Vec3& v0 = s.velocity;
  const Vec3 a1 = accelAt(v0, p);
  const Vec3 v1 = v0 + 0.5 * dt * a1;
  const Vec3 a2 = accelAt(v1, p);
  const Vec3 v2 = v0 + 0.5 * dt * a2;
  const Vec3 a3 = accelAt(v2, p);
  const Vec3 v3 = v0 + dt * a3;
  const Vec3 a4 = accelAt(v3, p);

  ShuttleState out;
  out.position = s.position + (dt / 6.0) * (v0 + 2.0 * v1 + 2.0 * v2 + v3);
  out.velocity = v0 + (dt / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4);

  if (s.axis) {
    Vec3 axis = *s.axis;
    const double speed = out.velocity.norm();
    if (p.axisDamping > 0.0 && speed > 1e-12) {
      const double blend = 1.0 - std::exp(-p.axisDamping * dt);
      const Vec3 relaxed = axis + blend * (out.velocity / speed - axis);
      // Exactly anti-parallel axis and velocity leave a zero vector; keep the old axis then.
      if (relaxed.norm() > 1e-12) {
        axis = relaxed.normalized();
      }
    }
    out.axis = axis;
  }
  return out;
}

Trajectory simulate(
    const ShuttleState& s,
    const ShuttleParams& p,
    double dt,
    double duration,
    double t0) {
  require(dt > 0.0, "step size must be positive");
  require(duration >= 0.0, "duration must be non-negative");
  Trajectory traj;
  traj.push_back({t0, s});
  const auto fullSteps = static_cast<long>(std::floor(duration / dt + 1e-9));
  ShuttleState cur = s;
  for (long k = 1; k <= fullSteps; ++k) {
    cur = step(cur, p, dt);
    traj.push_back({t0 + static_cast<double>(k) * dt, cur});
  }
  const double remaining = duration - static_cast<double>(fullSteps) * dt;
  if (remaining > 1e-12) {
    cur = step(cur, p, remaining);
    traj.push_back({t0 + duration, cur});
  }
  return traj;
}

FlightResult simulateToGround(
    const ShuttleState& s,
    const ShuttleParams& p,
    double dt,
    double tMax) {
  require(s.position.z() > 0.0, "shuttle must start above the ground");
  require(dt > 0.0, "step size must be positive");
  FlightResult result;
  result.trajectory.push_back({0.0, s});
  ShuttleState cur = s;
  double t = 0.0;
  long k = 0;
  while (t < tMax - 1e-12) {
    const double h = std::min(dt, tMax - t);
    const ShuttleState next = step(cur, p, h);
    ++k;
    const double tNext = (h == dt) ? static_cast<double>(k) * dt : tMax;
    result.trajectory.push_back({tNext, next});
    if (next.position.z() <= 0.0) {
      const double z0 = cur.position.z();
      const double z1 = next.position.z();
      const double alpha = z0 / (z0 - z1);
      LandingEvent landing;
      landing.time = t + alpha * (tNext - t);
      landing.point = cur.position + alpha * (next.position - cur.position);
      landing.point.z() = 0.0;
      result.landing = landing;
      return result;
    }
    cur = next;
    t = tNext;
  }
  return result;
}

ShuttleState racketImpact(
    const ShuttleState& s,
    const Pose& racketPose,
    const Twist& racketVel,
    const ShuttleParams& p,
    double contactDistance) {
  p.validate();
  const Vec3 normal = racketPose.orientation * Vec3::UnitX();
  const Vec3 offset = s.position - racketPose.position;
  const double distance = offset.dot(normal);
  if (std::abs(distance) > contactDistance) {
    fail(
        ErrorKind::NoContact,
        fmt::format("shuttle is {} m from the racket plane (limit {})", distance, contactDistance));
  }

  const Vec3 pointVel = racketVel.linear + racketVel.angular.cross(offset);
  const Vec3 relVel = s.velocity - pointVel;

  double side = 1.0;
  if (distance < 0.0 || (distance == 0.0 && relVel.dot(normal) > 0.0)) {
    side = -1.0;
  }
  const Vec3 face = side * normal;
  const double approach = relVel.dot(face);
  if (approach >= 0.0) {
    fail(ErrorKind::NoContact, "shuttle is receding from the racket face");
  }

  const bool headFirst = !s.axis || s.axis->dot(face) < 0.0;
  const double e = headFirst ? p.headRestitution : p.skirtRestitution;

  ShuttleState out = s;
  out.velocity = relVel - (1.0 + e) * approach * face + pointVel;
  return out;
}

std::optional<double> netCrossingHeight(const Trajectory& traj, double netX) {
  for (std::size_t i = 1; i < traj.size(); ++i) {
    const Vec3& a = traj[i - 1].state.position;
    const Vec3& b = traj[i].state.position;
    const double da = a.x() - netX;
    const double db = b.x() - netX;
    if (da == 0.0) {
      return a.z();
    }
    if ((da < 0.0) != (db < 0.0) && db != da) {
      const double alpha = da / (da - db);
      return a.z() + alpha * (b.z() - a.z());
    }
  }
  if (!traj.empty() && traj.back().state.position.x() == netX) {
    return traj.back().state.position.z();
  }
  return std::nullopt;
}

CourtCheck landsInCourt(const Vec3& landingPoint, const Trajectory& traj, const CourtGeometry& court) {
  CourtCheck check;
  check.inBounds = landingPoint.x() >= court.xMin && landingPoint.x() <= court.xMax &&
      landingPoint.y() >= court.yMin && landingPoint.y() <= court.yMax;
  const auto crossing = netCrossingHeight(traj, court.netX);
  check.clearedNet = crossing && *crossing > court.netHeight;
  return check;
}

double mechanicalEnergy(const ShuttleState& s, const ShuttleParams& p) {
  return 0.5 * p.mass * s.velocity.squaredNorm() + p.mass * p.gravity * s.position.z();
}

} // namespace shuttlekit
