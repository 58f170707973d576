#include "shuttlekit/goal.h"

#include "shuttlekit/error.h"

#include <algorithm>
#include <cmath>

namespace shuttlekit {

const char* toString(Phase phase) {
  return phase == Phase::Preparation ? "preparation" : "recovery";
}

VecX GoalObservation::flatten() const {
  VecX out(13);
  out << tth, hitDelta, recoveryDelta;
  return out;
}

double timeToHit(double now, double hitTime) {
  return std::clamp(hitTime - now, -kTimeToHitClip, kTimeToHitClip);
}

Vec6d poseDeltaInBase(const Pose& target, const Pose& current, const Pose& base) {
  Vec6d d;
  d.head<3>() = toBaseFrame(target.position - current.position, base, false);
  d.tail<3>() = toBaseFrame(quatBoxminus(target.orientation, current.orientation), base, false);
  return d;
}

GoalObservation encodeGoal(
    const RobotState& state,
    const Pose& currentRacket,
    const StrikeTarget& target,
    double now) {
  GoalObservation obs;
  obs.tth = timeToHit(now, target.hitTime);
  if (obs.tth >= 0.0) {
    obs.phase = Phase::Preparation;
    obs.hitDelta = poseDeltaInBase(target.hitRacketPose, currentRacket, state.root);
  } else {
    obs.phase = Phase::Recovery;
    obs.recoveryDelta = poseDeltaInBase(target.recoveryRootPose, state.root, state.root);
  }
  return obs;
}

GoalObservation encodeGoal(
    const RobotState& state,
    const KinematicChain& chain,
    const std::string& racketFrame,
    const StrikeTarget& target,
    double now) {
  const auto frames = forwardKinematics(chain, state.root, state.q);
  const auto it = frames.find(racketFrame);
  require(it != frames.end(), "racket frame '" + racketFrame + "' not found on chain");
  return encodeGoal(state, it->second, target, now);
}

VecX ReferenceWindow::flatten() const {
  Eigen::Index n = 0;
  for (std::size_t k = 0; k < rootDeltas.size(); ++k) {
    n += 12 + jointDeltas[k].size();
  }
  VecX out(n);
  Eigen::Index at = 0;
  for (const auto& r : rootDeltas) {
    out.segment<12>(at) = r;
    at += 12;
  }
  for (const auto& j : jointDeltas) {
    out.segment(at, j.size()) = j;
    at += j.size();
  }
  return out;
}

std::size_t frameIndexAt(const ReferenceClip& clip, double t) {
  require(!clip.frames.empty(), "reference clip is empty");
  const auto it = std::upper_bound(
      clip.frames.begin(), clip.frames.end(), t + 1e-9, [](double value, const ClipFrame& f) {
        return value < f.t;
      });
  if (it == clip.frames.begin()) {
    return 0;
  }
  return static_cast<std::size_t>(std::distance(clip.frames.begin(), it)) - 1;
}

ReferenceWindow referenceWindow(const ReferenceClip& clip, double t, std::size_t horizon) {
  require(!clip.frames.empty(), "reference clip is empty");
  const std::size_t base = frameIndexAt(clip, t);
  const ClipFrame& now = clip.frames[base];
  const std::size_t last = clip.frames.size() - 1;

  ReferenceWindow w;
  w.rootDeltas.reserve(horizon);
  w.jointDeltas.reserve(horizon);
  for (std::size_t k = 1; k <= horizon; ++k) {
    const ClipFrame& future = clip.frames[std::min(base + k, last)];
    require(future.q.size() == now.q.size(), "clip frames have inconsistent joint counts");
    Eigen::Matrix<double, 12, 1> d;
    d.segment<6>(0) = poseDeltaInBase(future.root, now.root, now.root);
    d.segment<3>(6) = toBaseFrame(future.rootLinear - now.rootLinear, now.root, false);
    d.segment<3>(9) = toBaseFrame(future.rootAngular - now.rootAngular, now.root, false);
    w.rootDeltas.push_back(d);
    w.jointDeltas.emplace_back(future.q - now.q);
  }
  return w;
}

} // namespace shuttlekit
