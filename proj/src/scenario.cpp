#include "shuttlekit/scenario.h"

#include "shuttlekit/error.h"
#include "shuttlekit/retarget.h"

#include <cmath>
#include <fmt/format.h>
#include <limits>

namespace shuttlekit {

const char* toString(VolumeMode mode) {
  return mode == VolumeMode::Easy ? "easy" : "hard";
}

VolumeMode volumeModeFromString(const std::string& s) {
  if (s == "easy") {
    return VolumeMode::Easy;
  }
  if (s == "hard") {
    return VolumeMode::Hard;
  }
  fail(ErrorKind::InvalidInput, fmt::format("unknown volume mode '{}' (expected easy|hard)", s));
}

AxisBox VolumeConfig::box(VolumeMode mode) const {
  return {center, mode == VolumeMode::Easy ? easySize : hardSize};
}

namespace {

Vec3 uniformInBall(Rng& rng, double radius) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vec3 dir(normal(rng), normal(rng), normal(rng));
  const double n = dir.norm();
  const double u = unit(rng);
  if (radius == 0.0 || n == 0.0) {
    return Vec3::Zero();
  }
  return dir * (radius * std::cbrt(u) / n);
}

} // namespace

StrikeManifold expandManifold(
    const std::vector<DatasetStrike>& dataset,
    const ExpansionConfig& cfg,
    std::uint64_t seed) {
  require(!dataset.empty(), "strike dataset is empty");
  require(cfg.count >= 1, "manifold size must be >= 1");
  require(cfg.radius >= 0.0, "expansion radius must be >= 0");
  require(cfg.timeJitter >= 0.0, "time jitter must be >= 0");
  const AxisBox volume = cfg.volumes.box(cfg.mode);

  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, dataset.size() - 1);
  std::uniform_real_distribution<double> jitter(-cfg.timeJitter, cfg.timeJitter);

  StrikeManifold out;
  out.reserve(cfg.count);
  for (std::size_t i = 0; i < cfg.count; ++i) {
    bool placed = false;
    for (std::size_t attempt = 0; attempt < cfg.maxAttemptsPerPoint; ++attempt) {
      const std::size_t src = pick(rng);
      const Vec3 pos = dataset[src].position + uniformInBall(rng, cfg.radius);
      const double t = dataset[src].time + (cfg.timeJitter > 0.0 ? jitter(rng) : 0.0);
      if (volume.contains(pos) && t > 0.0) {
        out.push_back({pos, t, src});
        placed = true;
        break;
      }
    }
    if (!placed) {
      fail(
          ErrorKind::Infeasible,
          fmt::format(
              "no strike point inside the {} volume after {} attempts",
              toString(cfg.mode),
              cfg.maxAttemptsPerPoint));
    }
  }
  return out;
}

double sampleRhythmInterval(Rng& rng) {
  std::uniform_real_distribution<double> u(1.0, 6.0);
  return u(rng);
}

RandomizationTable RandomizationTable::defaults() {
  return {{
      {"base_mass", -3.0, 5.0, "kg"},
      {"hand_mass", -0.05, 0.15, "kg"},
      {"racket_mass", -0.005, 0.005, "kg"},
      {"com_offset_x", -0.05, 0.05, "m"},
      {"com_offset_y", -0.05, 0.05, "m"},
      {"com_offset_z", -0.03, 0.03, "m"},
      {"pd_gain_scale", 0.9, 1.1, "-"},
      {"control_latency", 5.0, 30.0, "ms"},
      {"ground_friction", 0.5, 1.0, "-"},
      {"restitution", 0.0, 0.2, "-"},
      {"base_velocity_perturbation", -0.4, 0.4, "m/s"},
      {"terrain_height_noise", 0.0, 0.05, "m"},
  }};
}

void RandomizationTable::validate() const {
  for (const auto& r : ranges) {
    require(
        std::isfinite(r.lo) && std::isfinite(r.hi) && r.lo <= r.hi,
        fmt::format("randomization range '{}' must satisfy lo <= hi", r.name));
  }
}

ParameterAssignment sampleRandomization(const RandomizationTable& table, Rng& rng) {
  table.validate();
  ParameterAssignment out;
  out.reserve(table.ranges.size());
  for (const auto& r : table.ranges) {
    if (r.lo == r.hi) {
      out.emplace_back(r.name, r.lo);
      continue;
    }
    std::uniform_real_distribution<double> u(r.lo, r.hi);
    out.emplace_back(r.name, u(rng));
  }
  return out;
}

Vec3 ballisticLaunchVelocity(const Vec3& origin, const Vec3& target, double time, double gravity) {
  require(time > 0.0, "flight time must be positive");
  Vec3 v = (target - origin) / time;
  v.z() += 0.5 * gravity * time;
  return v;
}

Vec3 positionAt(const ShuttleState& s, const ShuttleParams& p, double dt, double time) {
  return simulate(s, p, dt, time).back().state.position;
}

ShuttleState serveTrajectory(
    const StrikePoint& target,
    const CourtGeometry& court,
    const ShuttleParams& p,
    const ServeConfig& cfg,
    Rng& rng) {
  p.validate();
  court.validate();
  Vec3 origin = cfg.origin;
  for (int i = 0; i < 3; ++i) {
    std::uniform_real_distribution<double> u(-cfg.originJitter[i], cfg.originJitter[i]);
    origin[i] += u(rng);
  }
  if (!(target.time > 0.0)) {
    fail(ErrorKind::Infeasible, fmt::format("target time {} is not after the serve", target.time));
  }
  if (!(origin.x() > court.netX) || !(target.position.x() < court.netX)) {
    fail(ErrorKind::Infeasible, "serve must cross the net from the opponent side to the robot side");
  }

  ShuttleState launch;
  launch.position = origin;

  LeastSquaresProblem<Vec3> lsq;
  lsq.dimension = 3;
  lsq.residuals = [&](const Vec3& v) {
    ShuttleState s;
    s.position = origin;
    s.velocity = v;
    return VecX(positionAt(s, p, cfg.dt, target.time) - target.position);
  };
  lsq.retract = [](const Vec3& v, const VecX& d) { return Vec3(v + d); };

  SolverOptions opts;
  opts.maxIterations = cfg.maxIterations;
  opts.relativeTolerance = 0.0;
  const Vec3 guess = ballisticLaunchVelocity(origin, target.position, target.time, p.gravity);
  const auto solved = levenbergMarquardt(lsq, guess, opts);

  launch.velocity = solved.state;
  const double miss = std::sqrt(solved.cost);
  if (!launch.velocity.allFinite() || miss > 0.01) {
    fail(ErrorKind::Infeasible, fmt::format("launch solve missed the target by {} m", miss));
  }
  const double speed = launch.velocity.norm();
  if (speed > 0.0) {
    launch.axis = launch.velocity / speed;
  }
  return launch;
}

EpisodeMetrics evaluateEpisodes(const std::vector<EpisodeLog>& logs, const IbrWeights& w) {
  EpisodeMetrics m;
  double sqSum = 0.0;
  double ibrSum = 0.0;
  for (const auto& log : logs) {
    for (const auto& r : log) {
      require(
          r.intercepted == r.impactOffset.has_value(),
          fmt::format("serve '{}': impact offset must be present iff intercepted", r.serveId));
      ++m.serves;
      if (r.intercepted) {
        ++m.intercepted;
        sqSum += r.impactOffset->squaredNorm();
        ibrSum += (r.inBounds && r.clearedNet) ? w.inBounds : -w.outOrNet;
      } else {
        ibrSum -= w.miss;
      }
    }
  }
  require(m.serves > 0, "episode logs contain no serves");
  const double n = static_cast<double>(m.serves);
  m.successRate = static_cast<double>(m.intercepted) / n;
  m.meanSquaredError = m.intercepted > 0 ? sqSum / static_cast<double>(m.intercepted)
                                         : std::numeric_limits<double>::quiet_NaN();
  m.inBoundsReturn = ibrSum / n;
  return m;
}

} // namespace shuttlekit
