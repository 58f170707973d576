#pragma once

#include "oracles.h"

#include "shuttlekit/io.h"
#include "shuttlekit/retarget.h"
#include "shuttlekit/scenario.h"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

namespace fixture {

using namespace shuttlekit;
namespace fs = std::filesystem;

constexpr double kUpper = 0.3;
constexpr double kFore = 0.3;
constexpr double kHand = 0.2;

// Shoulder yaw about z, then elbow and wrist pitch about y.
inline KinematicChain arm() {
  Joint shoulder{"shoulder", -1, Pose(), Vec3::UnitZ(), -2.5, 2.5};
  Joint elbow{"elbow", 0, Pose(Vec3(kUpper, 0, 0), Quat::Identity()), Vec3::UnitY(), -2.5, 2.5};
  Joint wrist{"wrist", 1, Pose(Vec3(kFore, 0, 0), Quat::Identity()), Vec3::UnitY(), -2.5, 2.5};
  EndEffector tip{"tip", 2, Pose(Vec3(kHand, 0, 0), Quat::Identity())};
  return KinematicChain({shoulder, elbow, wrist}, {tip});
}

struct ArmPoints {
  Vec3 pelvis;
  Vec3 pelvisLeft;
  Vec3 pelvisUp;
  Vec3 elbow;
  Vec3 wrist;
  Vec3 tip;
};

// Homogeneous-matrix forward kinematics for arm(), written independently.
inline ArmPoints armOracle(const Mat3& rootRot, const Vec3& rootPos, const Vec3& q) {
  using oracle::axisAngle;
  using oracle::homogeneous;
  const Eigen::Matrix4d root = homogeneous(rootRot, rootPos);
  const Eigen::Matrix4d s = root * homogeneous(axisAngle(Vec3::UnitZ(), q[0]), Vec3::Zero());
  const Eigen::Matrix4d e =
      s * homogeneous(Mat3::Identity(), Vec3(kUpper, 0, 0)) * homogeneous(axisAngle(Vec3::UnitY(), q[1]), Vec3::Zero());
  const Eigen::Matrix4d w =
      e * homogeneous(Mat3::Identity(), Vec3(kFore, 0, 0)) * homogeneous(axisAngle(Vec3::UnitY(), q[2]), Vec3::Zero());
  auto at = [](const Eigen::Matrix4d& m, const Vec3& local) { return Vec3((m * local.homogeneous()).head<3>()); };
  return {at(root, Vec3::Zero()),
          at(root, Vec3(0, 0.1, 0)),
          at(root, Vec3(0, 0, 0.1)),
          at(e, Vec3::Zero()),
          at(w, Vec3::Zero()),
          at(w, Vec3(kHand, 0, 0))};
}

inline RetargetProblem armProblem() {
  RetargetProblem p;
  p.chain = arm();
  p.keypoints = {{"pelvis", "root", Vec3::Zero()},
                 {"pelvis_l", "root", Vec3(0, 0.1, 0)},
                 {"pelvis_u", "root", Vec3(0, 0, 0.1)},
                 {"elbow", "elbow", Vec3::Zero()},
                 {"wrist", "wrist", Vec3::Zero()},
                 {"tip", "tip", Vec3::Zero()}};
  p.segments = {{"pelvis", "elbow"}, {"elbow", "wrist"}, {"wrist", "tip"}};
  return p;
}

inline RetargetFrame frameFrom(const ArmPoints& a, double t) {
  RetargetFrame f;
  f.t = t;
  f.keypoints = {{"pelvis", a.pelvis},
                 {"pelvis_l", a.pelvisLeft},
                 {"pelvis_u", a.pelvisUp},
                 {"elbow", a.elbow},
                 {"wrist", a.wrist},
                 {"tip", a.tip}};
  return f;
}

struct Truth {
  Mat3 rot;
  Vec3 pos;
  Vec3 q;
};

inline std::vector<Truth> truthSequence() {
  std::vector<Truth> out;
  for (int k = 0; k < 4; ++k) {
    const double s = 0.05 * k;
    out.push_back({oracle::axisAngle(Vec3(0.2, -0.1, 1.0).normalized(), 0.15 + s),
                   Vec3(0.1 + s, -0.05, 0.9),
                   Vec3(0.4 + s, -0.6 + s, 0.5 - 2 * s)});
  }
  return out;
}

// One revolute joint with a unit link; the tip keypoint is the only target.
inline RetargetProblem pendulum(double targetAngle) {
  RetargetProblem p;
  Joint j{"hinge", -1, Pose(), Vec3::UnitZ(), -0.5, 0.5};
  EndEffector tip{"tip", 0, Pose(Vec3(1, 0, 0), Quat::Identity())};
  p.chain = KinematicChain({j}, {tip});
  p.keypoints = {{"tip", "tip", Vec3::Zero()}};
  RetargetFrame f;
  f.keypoints["tip"] = Vec3(std::cos(targetAngle), std::sin(targetAngle), 0.0);
  p.frames = {f};
  p.optimizeRoot = false;
  p.optimizeScales = false;
  return p;
}

/// Fresh scratch directory under the system temp dir.
inline fs::path scratchDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("shuttlekit_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

inline void writeFile(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string readFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

constexpr double kDt = 0.005;
constexpr double kDrag = 1.1e-3;
constexpr double kMass = 0.005;
constexpr double kGravity = 9.81;

inline ShuttleParams shuttle() {
  ShuttleParams p;
  p.mass = kMass;
  p.dragCoeff = kDrag;
  p.gravity = kGravity;
  p.axisDamping = 5.0;
  return p;
}

/// Position of the true flight after `steps` physics steps.
inline Vec3 truePosition(const ShuttleState& s0, int steps) {
  return oracle::rk4(s0.position, s0.velocity, kMass, kDrag, kGravity, kDt, steps).first;
}

/// Samples of the true flight every physics step over [0, duration], with
/// Gaussian position noise.
inline std::vector<io::Measurement> observe(const ShuttleState& s0, double duration, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<io::Measurement> out;
  Vec3 p = s0.position;
  Vec3 v = s0.velocity;
  const int steps = static_cast<int>(std::lround(duration / kDt));
  for (int k = 0; k <= steps; ++k) {
    const Vec3 e(noise(rng), noise(rng), noise(rng));
    out.push_back({k * kDt, p + sigma * e});
    std::tie(p, v) = oracle::rk4(p, v, kMass, kDrag, kGravity, kDt, 1);
  }
  return out;
}

/// Config shared by the CLI tests: drag shuttle and the default court and volumes.
inline io::Json config(double sigma) {
  return {
      {"shuttle", {{"mass", kMass}, {"drag_coeff", kDrag}, {"gravity", kGravity}, {"axis_damping", 5.0}}},
      {"noise", {{"accel_psd", 1e-6}, {"measurement_sigma", sigma}, {"latency", 0.0}}},
      {"hit", {{"height_band", {1.0, 1.3}}, {"reachable_center", {0.4, 0.0, 1.2}}, {"reachable_size", {0.4, 2.0, 0.3}}}},
      {"track", {{"dt", kDt}, {"horizon", 2.0}}},
      {"simulate", {{"dt", kDt}, {"t_max", 10.0}}},
      {"expand", {{"radius", 0.3}, {"time_jitter", 0.1}, {"count", 200}}},
      {"ibr", {{"in_bounds", 1.0}, {"out_or_net", 0.25}, {"miss", 0.0}}},
  };
}

/// Launch state of a serve from the default origin through `target` at `time`.
inline ShuttleState serveTo(const Vec3& target, double time) {
  std::mt19937_64 rng(0);
  return serveTrajectory({target, time, 0}, CourtGeometry(), shuttle(), ServeConfig(), rng);
}

inline std::string measurementsCsv(const std::vector<io::Measurement>& m) {
  std::ostringstream ss;
  io::writeMeasurementsCsv(ss, m);
  return ss.str();
}

/// Retarget problem JSON for the arm, keypoints from the generating truth.
inline io::Json armProblemJson() {
  const auto truth = truthSequence();
  io::Json frames = io::Json::array();
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const RetargetFrame f = frameFrom(armOracle(truth[k].rot, truth[k].pos, truth[k].q), 0.02 * static_cast<double>(k));
    io::Json kp = io::Json::object();
    for (const auto& [name, pos] : f.keypoints) {
      kp[name] = {pos.x(), pos.y(), pos.z()};
    }
    frames.push_back({{"t", f.t}, {"keypoints", kp}});
  }
  io::Json map = io::Json::object();
  for (const auto& b : armProblem().keypoints) {
    map[b.name] = {{"frame", b.frame}, {"offset", {b.offset.x(), b.offset.y(), b.offset.z()}}};
  }
  io::Json segments = io::Json::array();
  for (const auto& s : armProblem().segments) {
    segments.push_back({s.from, s.to});
  }
  return {
      {"chain", io::toJson(arm())},
      {"keypoint_map", map},
      {"segments", segments},
      {"weights", {{"smooth", 0.0}}},
      {"frames", frames},
      {"annotations", {{"hit_times", {0.04}}, {"recovery_times", {0.06}}}},
  };
}

inline io::Json strikeDataset() {
  return {{"strikes",
           {{{"pos", {0.4, 0.5, 1.2}}, {"t", 0.9}},
            {{"pos", {0.3, -0.6, 1.15}}, {"t", 1.0}},
            {{"pos", {0.5, 0.0, 1.25}}, {"t", 0.8}}}}};
}

inline std::string episodeCsv() {
  return "serve_id,intercepted,dx,dy,dz,landing,in_bounds,cleared_net,speed\n"
         "s0,1,0,0,0,1,1,1,20\n"
         "s1,1,0,0,0,1,1,1,18.5\n"
         "s2,1,0,0,0,1,1,1,22\n"
         "s3,0,,,,0,0,0,0\n";
}

} // namespace fixture
