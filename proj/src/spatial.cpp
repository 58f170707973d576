#include "shuttlekit/spatial.h"

#include "shuttlekit/error.h"

#include <cmath>
#include <fmt/format.h>

namespace shuttlekit {

namespace {

void requireUnit(const Quat& q, const char* label) {
  const double n = q.norm();
  if (!std::isfinite(n) || std::abs(n - 1.0) > kUnitQuatTolerance) {
    fail(ErrorKind::InvalidInput, fmt::format("{} quaternion is not unit-norm (norm {})", label, n));
  }
}

} // namespace

Quat canonical(const Quat& q) {
  Quat out = q.normalized();
  if (out.w() < 0.0) {
    out.coeffs() = -out.coeffs();
  }
  return out;
}

Quat quatFromWxyz(double w, double x, double y, double z) {
  return canonical(Quat(w, x, y, z));
}

Quat quatExp(const Vec3& rotationVector) {
  const double angle = rotationVector.norm();
  if (angle < 1e-12) {
    const Vec3 half = 0.5 * rotationVector;
    return canonical(Quat(1.0, half.x(), half.y(), half.z()));
  }
  const Vec3 axis = rotationVector / angle;
  return canonical(Quat(Eigen::AngleAxisd(angle, axis)));
}

Vec3 quatLog(const Quat& q) {
  const Quat c = canonical(q);
  const Vec3 v = c.vec();
  const double s = v.norm();
  if (s < 1e-12) {
    return 2.0 * v / c.w();
  }
  const double angle = 2.0 * std::atan2(s, c.w());
  return v * (angle / s);
}

Vec3 quatBoxminus(const Quat& ref, const Quat& cur) {
  requireUnit(ref, "reference");
  requireUnit(cur, "current");
  return quatLog(ref * cur.conjugate());
}

Quat quatBoxplus(const Quat& q, const Vec3& delta) {
  return canonical(quatExp(delta) * q);
}

Pose::Pose(Vec3 p, const Quat& q) : position(std::move(p)), orientation(canonical(q)) {}

Pose Pose::compose(const Pose& other) const {
  return {position + orientation * other.position, orientation * other.orientation};
}

Pose Pose::inverse() const {
  const Quat inv = orientation.conjugate();
  return {-(inv * position), inv};
}

Vec3 Pose::transformPoint(const Vec3& p) const {
  return position + orientation * p;
}

Eigen::Matrix4d Pose::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation();
  m.topRightCorner<3, 1>() = position;
  return m;
}

bool AxisBox::contains(const Vec3& p, double slack) const {
  const Vec3 lo = lower();
  const Vec3 hi = upper();
  for (int i = 0; i < 3; ++i) {
    if (p[i] < lo[i] - slack || p[i] > hi[i] + slack) {
      return false;
    }
  }
  return true;
}

const char* toString(StateKind kind) {
  switch (kind) {
    case StateKind::Position:
      return "position";
    case StateKind::Orientation:
      return "orientation";
    case StateKind::Velocity:
      return "velocity";
    case StateKind::Joint:
      return "joint";
  }
  return "unknown";
}

StateComponent StateComponent::position(const Vec3& p) {
  return {StateKind::Position, p};
}

StateComponent StateComponent::velocity(const Vec3& v) {
  return {StateKind::Velocity, v};
}

StateComponent StateComponent::orientation(const Quat& q) {
  VecX wxyz(4);
  wxyz << q.w(), q.x(), q.y(), q.z();
  return {StateKind::Orientation, wxyz};
}

StateComponent StateComponent::joints(const VecX& q) {
  return {StateKind::Joint, q};
}

VecX stateBoxminus(const StateComponent& ref, const StateComponent& cur) {
  if (ref.kind != cur.kind) {
    fail(
        ErrorKind::InvalidInput,
        fmt::format("state kind mismatch: {} vs {}", toString(ref.kind), toString(cur.kind)));
  }
  if (ref.values.size() != cur.values.size()) {
    fail(
        ErrorKind::InvalidInput,
        fmt::format(
            "{} component size mismatch: {} vs {}",
            toString(ref.kind),
            ref.values.size(),
            cur.values.size()));
  }
  if (ref.kind == StateKind::Orientation) {
    require(ref.values.size() == 4, "orientation component must have 4 coefficients");
    const Quat a(ref.values[0], ref.values[1], ref.values[2], ref.values[3]);
    const Quat b(cur.values[0], cur.values[1], cur.values[2], cur.values[3]);
    return quatBoxminus(a, b);
  }
  if (ref.kind != StateKind::Joint) {
    require(ref.values.size() == 3, "position/velocity component must have 3 entries");
  }
  return ref.values - cur.values;
}

Vec3 toBaseFrame(const Vec3& worldVec, const Pose& base, bool isPoint) {
  requireUnit(base.orientation, "base");
  const Quat inv = base.orientation.conjugate();
  return isPoint ? Vec3(inv * (worldVec - base.position)) : Vec3(inv * worldVec);
}

Vec3 fromBaseFrame(const Vec3& baseVec, const Pose& base, bool isPoint) {
  requireUnit(base.orientation, "base");
  return isPoint ? base.transformPoint(baseVec) : Vec3(base.orientation * baseVec);
}

KinematicChain::KinematicChain(std::vector<Joint> joints, std::vector<EndEffector> endEffectors)
    : joints_(std::move(joints)), endEffectors_(std::move(endEffectors)) {
  for (std::size_t i = 0; i < joints_.size(); ++i) {
    auto& j = joints_[i];
    if (j.parent >= static_cast<int>(i) || j.parent < -1) {
      fail(
          ErrorKind::InvalidInput,
          fmt::format("joint '{}' has parent {} not preceding index {}", j.name, j.parent, i));
    }
    if (!(j.lower < j.upper)) {
      fail(ErrorKind::InvalidInput, fmt::format("joint '{}' limits must satisfy lo < hi", j.name));
    }
    const double n = j.axis.norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
      fail(ErrorKind::InvalidInput, fmt::format("joint '{}' has a degenerate axis", j.name));
    }
    j.axis /= n;
    j.offset.orientation = canonical(j.offset.orientation);
  }
  for (auto& ee : endEffectors_) {
    if (ee.parent < -1 || ee.parent >= static_cast<int>(joints_.size())) {
      fail(
          ErrorKind::InvalidInput,
          fmt::format("end effector '{}' references missing joint {}", ee.name, ee.parent));
    }
    ee.offset.orientation = canonical(ee.offset.orientation);
  }
}

bool KinematicChain::hasFrame(const std::string& name) const {
  if (name == "root") {
    return true;
  }
  for (const auto& j : joints_) {
    if (j.name == name) {
      return true;
    }
  }
  for (const auto& ee : endEffectors_) {
    if (ee.name == name) {
      return true;
    }
  }
  return false;
}

VecX KinematicChain::lowerLimits() const {
  VecX lo(joints_.size());
  for (std::size_t i = 0; i < joints_.size(); ++i) {
    lo[static_cast<Eigen::Index>(i)] = joints_[i].lower;
  }
  return lo;
}

VecX KinematicChain::upperLimits() const {
  VecX hi(joints_.size());
  for (std::size_t i = 0; i < joints_.size(); ++i) {
    hi[static_cast<Eigen::Index>(i)] = joints_[i].upper;
  }
  return hi;
}

std::vector<Pose> forwardKinematicsIndexed(
    const KinematicChain& chain,
    const Pose& root,
    const VecX& q) {
  const auto& joints = chain.joints();
  if (static_cast<std::size_t>(q.size()) != joints.size()) {
    fail(
        ErrorKind::InvalidInput,
        fmt::format("joint vector has {} entries, chain has {} joints", q.size(), joints.size()));
  }
  if (!q.allFinite()) {
    fail(ErrorKind::InvalidInput, "joint vector contains non-finite values");
  }

  std::vector<Pose> frames;
  frames.reserve(joints.size() + chain.endEffectors().size());
  for (std::size_t i = 0; i < joints.size(); ++i) {
    const auto& j = joints[i];
    const Pose& parent = j.parent < 0 ? root : frames[static_cast<std::size_t>(j.parent)];
    const Pose local(
        j.offset.position,
        j.offset.orientation * Quat(Eigen::AngleAxisd(q[static_cast<Eigen::Index>(i)], j.axis)));
    frames.push_back(parent.compose(local));
  }
  for (const auto& ee : chain.endEffectors()) {
    const Pose& parent = ee.parent < 0 ? root : frames[static_cast<std::size_t>(ee.parent)];
    frames.push_back(parent.compose(ee.offset));
  }
  return frames;
}

FramePoses forwardKinematics(const KinematicChain& chain, const Pose& root, const VecX& q) {
  const auto indexed = forwardKinematicsIndexed(chain, root, q);
  FramePoses out;
  out.emplace("root", Pose(root.position, root.orientation));
  const auto& joints = chain.joints();
  for (std::size_t i = 0; i < joints.size(); ++i) {
    out.insert_or_assign(joints[i].name, indexed[i]);
  }
  for (std::size_t e = 0; e < chain.endEffectors().size(); ++e) {
    out.insert_or_assign(chain.endEffectors()[e].name, indexed[joints.size() + e]);
  }
  return out;
}

} // namespace shuttlekit
