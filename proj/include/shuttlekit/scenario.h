#pragma once

#include "shuttlekit/shuttle.h"
#include "shuttlekit/spatial.h"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace shuttlekit {

using Rng = std::mt19937_64;

enum class VolumeMode { Easy, Hard };

const char* toString(VolumeMode mode);
VolumeMode volumeModeFromString(const std::string& s);

/// Strike volumes around the robot's nominal base. Sizes are (depth x,
/// lateral y, height z): easy 0.4 x 2.0 x 0.3 m, hard 1.0 x 4.0 x 0.3 m.
struct VolumeConfig {
  Vec3 center = Vec3(0.4, 0.0, 1.2);
  Vec3 easySize = Vec3(0.4, 2.0, 0.3);
  Vec3 hardSize = Vec3(1.0, 4.0, 0.3);

  [[nodiscard]] AxisBox box(VolumeMode mode) const;
};

struct DatasetStrike {
  Vec3 position = Vec3::Zero();
  double time = 0.0; ///< hit time offset, s
};

struct StrikePoint {
  Vec3 position = Vec3::Zero();
  double time = 0.0;
  std::size_t source = 0;
};

using StrikeManifold = std::vector<StrikePoint>;

struct ExpansionConfig {
  double radius = 0.3; ///< m
  double timeJitter = 0.1; ///< s
  std::size_t count = 1000;
  VolumeMode mode = VolumeMode::Easy;
  VolumeConfig volumes;
  std::size_t maxAttemptsPerPoint = 10000;
};

/// Samples `count` strike targets uniformly in balls of `radius` around
/// dataset points (source picked uniformly), with hit times jittered
/// uniformly by +-timeJitter. Candidates outside the mode volume, or with a
/// non-positive time, are resampled. Throws Infeasible when a point exhausts
/// its attempts.
StrikeManifold expandManifold(
    const std::vector<DatasetStrike>& dataset,
    const ExpansionConfig& cfg,
    std::uint64_t seed);

/// Uniform interval between a hit and the next serve, in [1, 6] s.
double sampleRhythmInterval(Rng& rng);

struct RandomizationRange {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
  std::string unit;
};

struct RandomizationTable {
  std::vector<RandomizationRange> ranges;

  /// Domain-randomization ranges used for sim-to-real training.
  static RandomizationTable defaults();
  void validate() const;
};

using ParameterAssignment = std::vector<std::pair<std::string, double>>;

/// Independent uniform draw per entry, in table order.
ParameterAssignment sampleRandomization(const RandomizationTable& table, Rng& rng);

struct ServeConfig {
  Vec3 origin = Vec3(7.5, 0.0, 2.2);
  Vec3 originJitter = Vec3::Zero(); ///< half-widths of a uniform box around origin
  double dt = kDefaultPhysicsDt;
  int maxIterations = 60;
};

/// Shooting-method launch solve: finds the initial velocity at the (jittered)
/// origin such that the simulated flight is at the target point at the target
/// time. Throws Infeasible when the target time is not positive, the target
/// is not on the robot side of the net, or the solver misses by more than 1 cm.
ShuttleState serveTrajectory(
    const StrikePoint& target,
    const CourtGeometry& court,
    const ShuttleParams& p,
    const ServeConfig& cfg,
    Rng& rng);

/// Drag-free launch velocity hitting `target` from `origin` after `time`.
Vec3 ballisticLaunchVelocity(const Vec3& origin, const Vec3& target, double time, double gravity);

/// Position after exactly `time` seconds of flight.
Vec3 positionAt(const ShuttleState& s, const ShuttleParams& p, double dt, double time);

struct ServeRecord {
  std::string serveId;
  bool intercepted = false;
  std::optional<Vec3> impactOffset; ///< sweet spot to ball, present iff intercepted
  bool landed = false;
  bool inBounds = false;
  bool clearedNet = false;
  double speed = 0.0;
};

using EpisodeLog = std::vector<ServeRecord>;

struct IbrWeights {
  double inBounds = 1.0;
  double outOrNet = 0.25; ///< subtracted for out-of-bounds or net returns
  double miss = 0.0;
};

struct EpisodeMetrics {
  double successRate = 0.0;
  double meanSquaredError = 0.0; ///< NaN when nothing was intercepted
  double inBoundsReturn = 0.0;
  std::size_t serves = 0;
  std::size_t intercepted = 0;
};

/// Aggregates SR, MSE and IBR over every serve of every log.
EpisodeMetrics evaluateEpisodes(const std::vector<EpisodeLog>& logs, const IbrWeights& w = {});

} // namespace shuttlekit
