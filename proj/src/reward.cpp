#include "shuttlekit/reward.h"

#include "csv.h"
#include "shuttlekit/error.h"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace shuttlekit {

namespace {

void validateTerms(const std::vector<KernelTerm>& terms, const char* label) {
  for (const auto& t : terms) {
    require(std::isfinite(t.weight) && t.weight >= 0.0, fmt::format("{} weights must be >= 0", label));
    require(std::isfinite(t.sigma) && t.sigma > 0.0, fmt::format("{} scales must be > 0", label));
  }
}

double weightSum(const std::vector<KernelTerm>& terms) {
  double s = 0.0;
  for (const auto& t : terms) {
    s += t.weight;
  }
  return s;
}

double distanceToRect(const Vec3& p, const CourtGeometry& court) {
  const double dx = std::max({court.xMin - p.x(), 0.0, p.x() - court.xMax});
  const double dy = std::max({court.yMin - p.y(), 0.0, p.y() - court.yMax});
  return std::hypot(dx, dy);
}

} // namespace

void RewardConfig::validate() const {
  validateTerms(hit, "hit");
  validateTerms(recovery, "recovery");
  require(sigmaTime > 0.0, "sigma_time must be > 0");
  require(epsilon > 0.0, "epsilon must be > 0");
  require(taskWeight >= 0.0 && styleWeight >= 0.0, "task/style weights must be >= 0");
  require(speedScale > 0.0, "speed scale must be > 0");
  require(directionFalloff > 0.0, "direction falloff must be > 0");
}

double RewardConfig::hitWeightSum() const {
  return weightSum(hit);
}

double RewardConfig::recoveryWeightSum() const {
  return weightSum(recovery);
}

void TerminationConfig::validate() const {
  require(minBaseHeight > 0.0, "min base height must be > 0");
  require(maxTilt > 0.0, "max tilt must be > 0");
  require(maxDeviation > 0.0, "max deviation must be > 0");
}

const char* toString(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::None:
      return "none";
    case TerminationReason::BaseHeight:
      return "height";
    case TerminationReason::Tilt:
      return "tilt";
    case TerminationReason::Deviation:
      return "deviation";
  }
  return "unknown";
}

double expKernel(double errSq, double sigma) {
  if (!(sigma > 0.0)) {
    fail(ErrorKind::InvalidInput, fmt::format("kernel scale must be > 0, got {}", sigma));
  }
  if (!(errSq >= 0.0)) {
    fail(ErrorKind::InvalidInput, fmt::format("squared error must be >= 0, got {}", errSq));
  }
  return std::exp(-errSq / sigma);
}

double weightedKernelSum(std::span<const double> errSq, std::span<const KernelTerm> terms) {
  if (errSq.size() != terms.size()) {
    fail(
        ErrorKind::InvalidInput,
        fmt::format("{} error components for {} configured terms", errSq.size(), terms.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    sum += terms[i].weight * expKernel(errSq[i], terms[i].sigma);
  }
  return sum;
}

std::vector<double> squaredNorms(std::span<const VecX> deltas) {
  std::vector<double> out;
  out.reserve(deltas.size());
  for (const auto& d : deltas) {
    out.push_back(d.squaredNorm());
  }
  return out;
}

double trackHitRewardDense(std::span<const double> errSq, double tth, const RewardConfig& c) {
  require(c.sigmaTime > 0.0, "sigma_time must be > 0");
  return std::exp(-std::abs(tth) / c.sigmaTime) * weightedKernelSum(errSq, c.hit);
}

double trackHitRewardDense(std::span<const VecX> deltas, double tth, const RewardConfig& c) {
  return trackHitRewardDense(squaredNorms(deltas), tth, c);
}

double trackRecoveryReward(std::span<const double> errSq, double tth, const RewardConfig& c) {
  const double sum = weightedKernelSum(errSq, c.recovery);
  return tth < 0.0 ? sum : 0.0;
}

double trackRecoveryReward(std::span<const VecX> deltas, double tth, const RewardConfig& c) {
  return trackRecoveryReward(squaredNorms(deltas), tth, c);
}

double trackHitRewardSparse(std::span<const double> errSq, double tth, const RewardConfig& c) {
  require(c.epsilon > 0.0, "epsilon must be > 0");
  const double sum = weightedKernelSum(errSq, c.hit);
  return std::abs(tth) < c.epsilon ? sum : 0.0;
}

double trackHitRewardSparse(std::span<const VecX> deltas, double tth, const RewardConfig& c) {
  return trackHitRewardSparse(squaredNorms(deltas), tth, c);
}

double hitQualityReward(
    const CourtCheck& landing,
    double postImpactSpeed,
    const RewardConfig& c,
    const Vec3* landingPoint,
    const CourtGeometry* court) {
  require(postImpactSpeed >= 0.0, "return speed must be >= 0");
  require(c.speedScale > 0.0, "speed scale must be > 0");
  double direction = 0.0;
  if (c.directionMode == DirectionMode::Binary) {
    direction = (landing.inBounds && landing.clearedNet) ? 1.0 : 0.0;
  } else {
    require(landingPoint && court, "graded direction reward needs the landing point and court");
    if (landing.clearedNet) {
      const double d = landing.inBounds ? 0.0 : distanceToRect(*landingPoint, *court);
      direction = std::exp(-(d / c.directionFalloff) * (d / c.directionFalloff));
    }
  }
  const double speed = std::min(postImpactSpeed / c.speedScale, 1.0);
  return direction * speed;
}

double styleReward(double discriminator) {
  const double d = discriminator - 1.0;
  return std::max(0.0, 1.0 - 0.25 * d * d);
}

double totalReward(double task, double style, const RewardConfig& c) {
  return c.taskWeight * task + c.styleWeight * style;
}

double baseTilt(const Pose& root) {
  const Vec3 bodyZ = root.orientation * Vec3::UnitZ();
  return std::acos(std::clamp(bodyZ.z(), -1.0, 1.0));
}

TerminationResult terminationCheck(
    const RobotState& state,
    const Pose& refRoot,
    const TerminationConfig& c) {
  if (state.baseHeight < c.minBaseHeight) {
    return {true, TerminationReason::BaseHeight};
  }
  if (baseTilt(state.root) > c.maxTilt) {
    return {true, TerminationReason::Tilt};
  }
  if ((state.root.position - refRoot.position).norm() > c.maxDeviation) {
    return {true, TerminationReason::Deviation};
  }
  return {};
}

double contactMatchFraction(std::span<const int> actual, std::span<const int> reference) {
  require(actual.size() == reference.size(), "contact vectors differ in length");
  if (actual.empty()) {
    return 1.0;
  }
  std::size_t matches = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if ((actual[i] != 0) == (reference[i] != 0)) {
      ++matches;
    }
  }
  return static_cast<double>(matches) / static_cast<double>(actual.size());
}

double imitationTrackingReward(const ImitationErrors& e, const ImitationTerms& terms) {
  return terms.root.weight * expKernel(e.root.squaredNorm(), terms.root.sigma) +
      terms.joint.weight * expKernel(e.joint.squaredNorm(), terms.joint.sigma) +
      terms.endEffector.weight * expKernel(e.endEffector.squaredNorm(), terms.endEffector.sigma) +
      terms.contactWeight * e.contactFraction;
}

std::vector<RewardRow> evaluateRewardLog(std::istream& in, const RewardConfig& c, TrackingStage stage) {
  c.validate();
  const auto table = csv::read(in);
  const auto tCol = csv::column(table, "t");
  const auto tthCol = csv::column(table, "tth");
  const auto discCol = csv::column(table, "disc");
  std::vector<std::size_t> hitCols;
  std::vector<std::size_t> recCols;
  for (std::size_t i = 0; i < c.hit.size(); ++i) {
    hitCols.push_back(csv::column(table, fmt::format("hit_{}", i)));
  }
  for (std::size_t j = 0; j < c.recovery.size(); ++j) {
    recCols.push_back(csv::column(table, fmt::format("rec_{}", j)));
  }

  std::vector<RewardRow> out;
  out.reserve(table.rows.size());
  std::vector<double> hitErr(hitCols.size());
  std::vector<double> recErr(recCols.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto line = table.lineNumbers[r];
    for (std::size_t i = 0; i < hitCols.size(); ++i) {
      hitErr[i] = csv::toDouble(row[hitCols[i]], line);
    }
    for (std::size_t j = 0; j < recCols.size(); ++j) {
      recErr[j] = csv::toDouble(row[recCols[j]], line);
    }
    RewardRow rr;
    rr.t = csv::toDouble(row[tCol], line);
    const double tth = csv::toDouble(row[tthCol], line);
    rr.hit = stage == TrackingStage::Dense ? trackHitRewardDense(hitErr, tth, c)
                                           : trackHitRewardSparse(hitErr, tth, c);
    rr.recovery = trackRecoveryReward(recErr, tth, c);
    rr.style = styleReward(csv::toDouble(row[discCol], line));
    rr.total = totalReward(rr.hit + rr.recovery, rr.style, c);
    out.push_back(rr);
  }
  return out;
}

} // namespace shuttlekit
