#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <map>
#include <span>
#include <string>
#include <vector>

namespace shuttlekit {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

/// Tolerance on |‖q‖ - 1| accepted by the quaternion operations.
inline constexpr double kUnitQuatTolerance = 1e-6;

/// Flips q to the hemisphere with non-negative scalar part and renormalizes.
Quat canonical(const Quat& q);

/// Builds a canonical unit quaternion from scalar-first components.
Quat quatFromWxyz(double w, double x, double y, double z);

/// Rotation vector (axis * angle) to unit quaternion.
Quat quatExp(const Vec3& rotationVector);

/// Unit quaternion to rotation vector with angle in [0, pi].
Vec3 quatLog(const Quat& q);

/// Rotation-vector log of ref * cur^-1.
///
/// The result delta satisfies quatExp(delta) * cur == ref, so it is the
/// world-frame (left) error that takes cur onto ref. Throws InvalidInput if
/// either argument is not unit-norm within kUnitQuatTolerance.
Vec3 quatBoxminus(const Quat& ref, const Quat& cur);

/// Inverse of quatBoxminus: quatExp(delta) * q.
Quat quatBoxplus(const Quat& q, const Vec3& delta);

struct Pose {
  Vec3 position = Vec3::Zero();
  Quat orientation = Quat::Identity();

  Pose() = default;
  Pose(Vec3 p, const Quat& q);

  static Pose identity() {
    return {};
  }

  [[nodiscard]] Mat3 rotation() const {
    return orientation.toRotationMatrix();
  }

  /// this * other, i.e. other expressed in this frame mapped to the parent.
  [[nodiscard]] Pose compose(const Pose& other) const;
  [[nodiscard]] Pose inverse() const;
  [[nodiscard]] Vec3 transformPoint(const Vec3& p) const;
  [[nodiscard]] Eigen::Matrix4d matrix() const;
};

struct Twist {
  Vec3 linear = Vec3::Zero();
  Vec3 angular = Vec3::Zero();
};

/// Axis-aligned box, closed on all faces.
struct AxisBox {
  Vec3 center = Vec3::Zero();
  Vec3 size = Vec3::Zero();

  [[nodiscard]] bool contains(const Vec3& p, double slack = 0.0) const;
  [[nodiscard]] Vec3 lower() const {
    return center - 0.5 * size;
  }
  [[nodiscard]] Vec3 upper() const {
    return center + 0.5 * size;
  }
};

enum class StateKind { Position, Orientation, Velocity, Joint };

const char* toString(StateKind kind);

/// One component of a robot state as it enters a manifold-aware error.
/// Orientations are stored as scalar-first quaternion coefficients.
struct StateComponent {
  StateKind kind = StateKind::Position;
  VecX values;

  static StateComponent position(const Vec3& p);
  static StateComponent velocity(const Vec3& v);
  static StateComponent orientation(const Quat& q);
  static StateComponent joints(const VecX& q);
};

/// ref ⊟ cur: vector difference on Euclidean kinds, quatBoxminus on
/// orientations. Throws InvalidInput on kind or size mismatch.
VecX stateBoxminus(const StateComponent& ref, const StateComponent& cur);

/// Expresses a world-frame vector in the frame of `base`. Points are
/// translated and rotated, free vectors only rotated.
Vec3 toBaseFrame(const Vec3& worldVec, const Pose& base, bool isPoint);

/// Inverse of toBaseFrame.
Vec3 fromBaseFrame(const Vec3& baseVec, const Pose& base, bool isPoint);

struct Joint {
  std::string name;
  int parent = -1; ///< -1 means the chain root.
  Pose offset; ///< Fixed transform from the parent frame, applied before the rotation.
  Vec3 axis = Vec3::UnitZ();
  double lower = -M_PI;
  double upper = M_PI;
};

struct EndEffector {
  std::string name;
  int parent = -1;
  Pose offset;
};

/// Revolute serial/tree chain in topological order.
class KinematicChain {
 public:
  KinematicChain() = default;
  KinematicChain(std::vector<Joint> joints, std::vector<EndEffector> endEffectors);

  [[nodiscard]] std::size_t jointCount() const {
    return joints_.size();
  }
  [[nodiscard]] const std::vector<Joint>& joints() const {
    return joints_;
  }
  [[nodiscard]] const std::vector<EndEffector>& endEffectors() const {
    return endEffectors_;
  }

  /// True if `name` names a joint frame, an end effector, or "root".
  [[nodiscard]] bool hasFrame(const std::string& name) const;

  [[nodiscard]] VecX lowerLimits() const;
  [[nodiscard]] VecX upperLimits() const;

 private:
  std::vector<Joint> joints_;
  std::vector<EndEffector> endEffectors_;
};

using FramePoses = std::map<std::string, Pose>;

/// World pose of every joint frame and end effector, plus "root".
///
/// Joint i's frame is parentFrame * offset * Rot(axis, q[i]).
FramePoses forwardKinematics(const KinematicChain& chain, const Pose& root, const VecX& q);

/// Same as forwardKinematics but returns joint frames by index, then end
/// effectors by index, without building the name map.
std::vector<Pose> forwardKinematicsIndexed(
    const KinematicChain& chain,
    const Pose& root,
    const VecX& q);

} // namespace shuttlekit
