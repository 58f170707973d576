#pragma once

#include "shuttlekit/spatial.h"

#include <array>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace shuttlekit {

enum class CostTerm { Global, Local, EeRotation, Collision, Limit, Smooth };

inline constexpr std::array<CostTerm, 6> kAllCostTerms{
    CostTerm::Global,
    CostTerm::Local,
    CostTerm::EeRotation,
    CostTerm::Collision,
    CostTerm::Limit,
    CostTerm::Smooth};

const char* toString(CostTerm term);

struct CostWeights {
  double global = 1.0;
  double local = 1.0;
  double eeRotation = 1.0;
  double collision = 1.0;
  double limit = 1.0;
  double smooth = 0.1;

  [[nodiscard]] double of(CostTerm term) const;
  [[nodiscard]] CostWeights scaled(double factor) const;
};

using TermCosts = std::map<CostTerm, double>;

/// A human keypoint attached to a chain frame ("root", a joint, or an end effector).
struct KeypointBinding {
  std::string name;
  std::string frame;
  Vec3 offset = Vec3::Zero();
};

/// Inter-keypoint vector preserved by the local term; each carries its own scale.
struct Segment {
  std::string from;
  std::string to;
};

struct CollisionSphere {
  std::string frame;
  Vec3 offset = Vec3::Zero();
  double radius = 0.05;
};

struct RetargetFrame {
  double t = 0.0;
  std::map<std::string, Vec3> keypoints;
  /// Target world orientation per chain frame (racket, feet).
  std::map<std::string, Quat> orientations;
};

struct SolverOptions {
  int maxIterations = 200; ///< per LM solve
  double relativeTolerance = 1e-8;
  int maxSweeps = 50;
  double initialDamping = 1e-3;
};

/// Local scales are kept in this range.
inline constexpr double kLocalScaleMin = 0.5;
inline constexpr double kLocalScaleMax = 2.0;

struct RetargetProblem {
  KinematicChain chain;
  std::vector<KeypointBinding> keypoints;
  std::vector<Segment> segments;
  std::vector<RetargetFrame> frames;
  std::vector<CollisionSphere> spheres;
  /// Sphere index pairs to test. Empty means every pair on distinct frames.
  std::vector<std::pair<std::size_t, std::size_t>> collisionPairs;
  CostWeights weights;
  bool optimizeRoot = true;
  bool optimizeScales = true;
  SolverOptions options;

  /// Throws InvalidInput for negative weights, bad radii, or unmapped keypoints.
  void validate() const;
};

struct SolutionFrame {
  Pose root;
  VecX q;
};

struct RetargetSolution {
  std::vector<SolutionFrame> frames;
  double globalScale = 1.0;
  VecX localScales; ///< one per segment
};

/// Raw (unweighted) residuals of one frame, stacked with a term label per entry.
struct Residuals {
  VecX values;
  std::vector<CostTerm> terms;

  [[nodiscard]] VecX block(CostTerm term) const;
};

/// Residual blocks of `frame`; the smooth block compares against frame - 1.
///
/// Global: FK keypoint minus the target scaled about the frame's keypoint
/// centroid. Local: per segment, robot vector minus scaled target vector, then
/// for consecutive segments sharing an endpoint the difference of the
/// cosines of their included angles. EE rotation: boxminus of target vs FK
/// orientation. Collision: max(0, r_i + r_j - distance). Limit: q - clamp(q).
/// Smooth: root position, root rotation and joint differences to frame - 1.
Residuals evaluateResiduals(const RetargetProblem& p, const RetargetSolution& x, std::size_t frame);

/// Sum over frames of w_term |r_term|^2.
TermCosts evaluateCosts(const RetargetProblem& p, const RetargetSolution& x);
double totalCost(const TermCosts& costs);

struct RetargetResult {
  RetargetSolution solution; ///< joints clamped into limits
  TermCosts finalCosts; ///< at the optimizer's final iterate, before clamping
  std::vector<double> costHistory; ///< total cost after each accepted iteration
  int iterations = 0;
};

/// Levenberg-Marquardt by block coordinate descent: each frame's pose is
/// solved with both neighbouring smooth terms active, then the scales with
/// all frames fixed, repeated until a sweep's relative decrease drops below
/// the tolerance.
RetargetResult solveRetarget(const RetargetProblem& p, const RetargetSolution& init);

/// Root at the first frame's keypoint centroid, identity orientation, joints
/// at zero clamped into limits, unit scales.
RetargetSolution defaultInitialGuess(const RetargetProblem& p);

/// Shifts every root vertically so the lowest foot frame over the clip sits at z = 0.
RetargetSolution alignToGround(
    const RetargetSolution& sol,
    const KinematicChain& chain,
    const std::vector<std::string>& feetFrames);

/// contact[f][i] = 1 iff foot i is strictly below the threshold in frame f.
std::vector<std::vector<int>> extractContacts(
    const RetargetSolution& sol,
    const KinematicChain& chain,
    const std::vector<std::string>& feetFrames,
    double threshold);

/// Dense Levenberg-Marquardt over a manifold, with central-difference
/// Jacobians. `retract(x, delta)` applies a tangent step.
template <typename State>
struct LeastSquaresProblem {
  std::function<VecX(const State&)> residuals; ///< already weighted
  std::function<State(const State&, const VecX&)> retract;
  Eigen::Index dimension = 0;
};

template <typename State>
struct LeastSquaresResult {
  State state;
  double cost = 0.0; ///< |r|^2
  int iterations = 0;
  std::vector<double> acceptedCosts;
};

template <typename State>
LeastSquaresResult<State> levenbergMarquardt(
    const LeastSquaresProblem<State>& problem,
    State init,
    const SolverOptions& options);

} // namespace shuttlekit

#include "shuttlekit/detail/levenberg_marquardt.h"
