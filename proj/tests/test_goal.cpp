#include "oracles.h"

#include "shuttlekit/error.h"
#include "shuttlekit/goal.h"

#include <doctest.h>

using namespace shuttlekit;

namespace {

Pose randomPose(std::mt19937_64& rng, double spread = 2.0) {
  std::uniform_real_distribution<double> u(-spread, spread);
  return Pose(Vec3(u(rng), u(rng), u(rng)), Quat(oracle::randomRotation(rng)));
}

ReferenceClip linearClip(std::size_t frames, const Vec3& velocity, double dt) {
  ReferenceClip clip;
  for (std::size_t i = 0; i < frames; ++i) {
    ClipFrame f;
    f.t = static_cast<double>(i) * dt;
    f.root = Pose(velocity * f.t + Vec3(0, 0, 0.9), Quat::Identity());
    f.rootLinear = velocity;
    f.q = VecX::Constant(3, 0.1);
    clip.frames.push_back(f);
  }
  return clip;
}

} // namespace

TEST_CASE("timeToHit clips to two seconds") {
  CHECK(timeToHit(0.0, 3.5) == 2.0);
  CHECK(timeToHit(1.0, 1.0) == 0.0);
  CHECK(timeToHit(5.0, 0.0) == -2.0);
  CHECK(timeToHit(0.0, 1.25) == 1.25);
  double prev = -10.0;
  for (double hit = -5.0; hit <= 5.0; hit += 0.01) {
    const double t = timeToHit(0.0, hit);
    CHECK(t >= -2.0);
    CHECK(t <= 2.0);
    CHECK(t >= prev);
    prev = t;
  }
}

TEST_CASE("encodeGoal masks by phase") {
  std::mt19937_64 rng(31);
  RobotState state;
  state.root = randomPose(rng);
  StrikeTarget target{10.0, randomPose(rng), randomPose(rng)};
  const Pose racket = randomPose(rng);

  const GoalObservation before = encodeGoal(state, racket, target, 9.0);
  CHECK(before.tth == 1.0);
  CHECK((before.phase == Phase::Preparation));
  CHECK(before.recoveryDelta.isZero(0.0));
  CHECK_FALSE(before.hitDelta.isZero(0.0));

  const GoalObservation after = encodeGoal(state, racket, target, 11.0);
  CHECK(after.tth == -1.0);
  CHECK((after.phase == Phase::Recovery));
  CHECK(after.hitDelta.isZero(0.0));
  CHECK_FALSE(after.recoveryDelta.isZero(0.0));

  const GoalObservation impact = encodeGoal(state, target.hitRacketPose, target, 10.0);
  CHECK((impact.phase == Phase::Preparation));
  CHECK(impact.hitDelta.norm() < 1e-12);
  CHECK(impact.recoveryDelta.isZero(0.0));
  CHECK(impact.flatten().size() == 13);
}

TEST_CASE("encodeGoal deltas are base-frame relative") {
  std::mt19937_64 rng(37);
  for (int i = 0; i < 200; ++i) {
    RobotState state;
    state.root = randomPose(rng);
    const StrikeTarget target{0.5, randomPose(rng), randomPose(rng)};
    const Pose racket = randomPose(rng);
    const Pose world = randomPose(rng, 10.0);

    RobotState moved = state;
    moved.root = world.compose(state.root);
    const StrikeTarget movedTarget{
        target.hitTime, world.compose(target.hitRacketPose), world.compose(target.recoveryRootPose)};
    for (const double now : {0.0, 1.0}) {
      const auto a = encodeGoal(state, racket, target, now);
      const auto b = encodeGoal(moved, world.compose(racket), movedTarget, now);
      CHECK((a.flatten() - b.flatten()).norm() < 1e-9);
    }

    // Position block equals the target offset expressed in the base frame.
    const auto obs = encodeGoal(state, racket, target, 0.0);
    const Vec3 expected = state.root.rotation().transpose() * (target.hitRacketPose.position - racket.position);
    CHECK((obs.hitDelta.head<3>() - expected).norm() < 1e-12);
  }
}

TEST_CASE("encodeGoal via forward kinematics") {
  Joint shoulder{"shoulder", -1, Pose(), Vec3::UnitZ(), -M_PI, M_PI};
  EndEffector racket{"racket", 0, Pose(Vec3(0.6, 0, 0), Quat::Identity())};
  const KinematicChain chain({shoulder}, {racket});
  RobotState state;
  state.q = VecX::Constant(1, 0.3);
  const auto fk = forwardKinematics(chain, state.root, state.q);
  const StrikeTarget target{1.0, fk.at("racket"), Pose()};
  const auto obs = encodeGoal(state, chain, "racket", target, 0.5);
  CHECK(obs.hitDelta.norm() < 1e-12);
  CHECK_THROWS_AS(encodeGoal(state, chain, "missing", target, 0.5), Error);
}

TEST_CASE("referenceWindow") {
  const ReferenceClip still = linearClip(5, Vec3::Zero(), 0.02);
  const auto w0 = referenceWindow(still, 0.0, 1);
  CHECK(w0.flatten().isZero(0.0));

  const Vec3 v(1.0, 0.5, 0.0);
  const double dt = 0.02;
  const ReferenceClip moving = linearClip(10, v, dt);
  const auto w = referenceWindow(moving, 0.0, 4);
  REQUIRE(w.rootDeltas.size() == 4);
  for (std::size_t k = 0; k < 4; ++k) {
    const Vec3 expected = v * dt * static_cast<double>(k + 1);
    CHECK((w.rootDeltas[k].head<3>() - expected).norm() < 1e-12);
    CHECK(w.rootDeltas[k].tail<6>().isZero(0.0));
    CHECK(w.jointDeltas[k].isZero(0.0));
  }
  CHECK(w.flatten().size() == 4 * (12 + 3));

  // Past the end the last frame repeats, so deltas saturate.
  const auto tail = referenceWindow(moving, 8 * dt, 5);
  const Vec3 saturated = v * dt;
  for (std::size_t k = 0; k < 5; ++k) {
    CHECK((tail.rootDeltas[k].head<3>() - saturated).norm() < 1e-12);
  }

  CHECK(frameIndexAt(moving, -1.0) == 0);
  CHECK(frameIndexAt(moving, 0.03) == 1);
  CHECK(frameIndexAt(moving, 100.0) == 9);
  CHECK_THROWS_AS(referenceWindow(ReferenceClip(), 0.0, 1), Error);
}
