#include "shuttlekit/retarget.h"

#include "shuttlekit/error.h"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <optional>

namespace shuttlekit {

const char* toString(CostTerm term) {
  switch (term) {
    case CostTerm::Global:
      return "global";
    case CostTerm::Local:
      return "local";
    case CostTerm::EeRotation:
      return "ee_rotation";
    case CostTerm::Collision:
      return "collision";
    case CostTerm::Limit:
      return "limit";
    case CostTerm::Smooth:
      return "smooth";
  }
  return "unknown";
}

double CostWeights::of(CostTerm term) const {
  switch (term) {
    case CostTerm::Global:
      return global;
    case CostTerm::Local:
      return local;
    case CostTerm::EeRotation:
      return eeRotation;
    case CostTerm::Collision:
      return collision;
    case CostTerm::Limit:
      return limit;
    case CostTerm::Smooth:
      return smooth;
  }
  return 0.0;
}

CostWeights CostWeights::scaled(double factor) const {
  return {global * factor,
          local * factor,
          eeRotation * factor,
          collision * factor,
          limit * factor,
          smooth * factor};
}

VecX Residuals::block(CostTerm term) const {
  std::vector<double> picked;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (terms[static_cast<std::size_t>(i)] == term) {
      picked.push_back(values[i]);
    }
  }
  return Eigen::Map<const VecX>(picked.data(), static_cast<Eigen::Index>(picked.size()));
}

namespace {

constexpr int kRootFrame = -1;

struct Context {
  std::map<std::string, int> frameIndex; // into forwardKinematicsIndexed output, -1 = root
  std::map<std::string, std::size_t> bindingIndex;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<int> sphereFrame;
  std::vector<std::pair<std::size_t, std::size_t>> anglePairs; // consecutive segments sharing a keypoint
};

Context buildContext(const RetargetProblem& p) {
  Context c;
  c.frameIndex["root"] = kRootFrame;
  const auto& joints = p.chain.joints();
  for (std::size_t i = 0; i < joints.size(); ++i) {
    c.frameIndex[joints[i].name] = static_cast<int>(i);
  }
  for (std::size_t e = 0; e < p.chain.endEffectors().size(); ++e) {
    c.frameIndex[p.chain.endEffectors()[e].name] = static_cast<int>(joints.size() + e);
  }
  for (std::size_t k = 0; k < p.keypoints.size(); ++k) {
    c.bindingIndex[p.keypoints[k].name] = k;
  }
  for (const auto& s : p.spheres) {
    c.sphereFrame.push_back(c.frameIndex.at(s.frame));
  }
  if (p.collisionPairs.empty()) {
    for (std::size_t i = 0; i < p.spheres.size(); ++i) {
      for (std::size_t j = i + 1; j < p.spheres.size(); ++j) {
        if (c.sphereFrame[i] != c.sphereFrame[j]) {
          c.pairs.emplace_back(i, j);
        }
      }
    }
  } else {
    c.pairs = p.collisionPairs;
  }
  for (std::size_t k = 0; k + 1 < p.segments.size(); ++k) {
    if (p.segments[k].to == p.segments[k + 1].from) {
      c.anglePairs.emplace_back(k, k + 1);
    }
  }
  return c;
}

const Pose& framePose(const std::vector<Pose>& fk, const Pose& root, int index) {
  return index == kRootFrame ? root : fk[static_cast<std::size_t>(index)];
}

class ResidualWriter {
 public:
  explicit ResidualWriter(Residuals& out) : out_(out) {}

  void push(CostTerm term, double v) {
    values_.push_back(v);
    out_.terms.push_back(term);
  }
  void push(CostTerm term, const Vec3& v) {
    for (int i = 0; i < 3; ++i) {
      push(term, v[i]);
    }
  }
  void finish() {
    const auto old = out_.values.size();
    out_.values.conservativeResize(old + static_cast<Eigen::Index>(values_.size()));
    for (std::size_t i = 0; i < values_.size(); ++i) {
      out_.values[old + static_cast<Eigen::Index>(i)] = values_[i];
    }
    values_.clear();
  }

 private:
  Residuals& out_;
  std::vector<double> values_;
};

double cosBetween(const Vec3& a, const Vec3& b) {
  const double n = a.norm() * b.norm();
  return n > 1e-12 ? a.dot(b) / n : 1.0;
}

void appendSmooth(const SolutionFrame& cur, const SolutionFrame& prev, ResidualWriter& w) {
  w.push(CostTerm::Smooth, Vec3(cur.root.position - prev.root.position));
  w.push(CostTerm::Smooth, quatBoxminus(cur.root.orientation, prev.root.orientation));
  for (Eigen::Index i = 0; i < cur.q.size(); ++i) {
    w.push(CostTerm::Smooth, cur.q[i] - prev.q[i]);
  }
}

// Target keypoint positions scaled about their centroid, and the robot's
// corresponding positions.
struct KeypointPositions {
  std::map<std::string, Vec3> target;
  std::map<std::string, Vec3> robot;
};

KeypointPositions keypointPositions(
    const RetargetProblem& p,
    const Context& c,
    const RetargetFrame& frame,
    const std::vector<Pose>& fk,
    const Pose& root,
    double globalScale) {
  Vec3 centroid = Vec3::Zero();
  int count = 0;
  for (const auto& [name, pos] : frame.keypoints) {
    if (c.bindingIndex.count(name) != 0) {
      centroid += pos;
      ++count;
    }
  }
  if (count > 0) {
    centroid /= count;
  }
  KeypointPositions out;
  for (const auto& [name, pos] : frame.keypoints) {
    const auto it = c.bindingIndex.find(name);
    if (it == c.bindingIndex.end()) {
      continue;
    }
    const auto& binding = p.keypoints[it->second];
    out.target[name] = centroid + globalScale * (pos - centroid);
    out.robot[name] = framePose(fk, root, c.frameIndex.at(binding.frame)).transformPoint(binding.offset);
  }
  return out;
}

void appendScaleTerms(
    const RetargetProblem& p,
    const Context& c,
    const KeypointPositions& kp,
    const RetargetFrame& frame,
    double globalScale,
    const VecX& localScales,
    ResidualWriter& w) {
  for (const auto& [name, target] : kp.target) {
    w.push(CostTerm::Global, Vec3(kp.robot.at(name) - target));
  }
  for (std::size_t k = 0; k < p.segments.size(); ++k) {
    const auto& seg = p.segments[k];
    const auto a = frame.keypoints.find(seg.from);
    const auto b = frame.keypoints.find(seg.to);
    if (a == frame.keypoints.end() || b == frame.keypoints.end()) {
      continue;
    }
    const Vec3 robotVec = kp.robot.at(seg.to) - kp.robot.at(seg.from);
    const Vec3 targetVec = b->second - a->second;
    w.push(
        CostTerm::Local,
        Vec3(robotVec - globalScale * localScales[static_cast<Eigen::Index>(k)] * targetVec));
  }
  for (const auto& [k0, k1] : c.anglePairs) {
    const auto& s0 = p.segments[k0];
    const auto& s1 = p.segments[k1];
    const auto a = frame.keypoints.find(s0.from);
    const auto m = frame.keypoints.find(s0.to);
    const auto b = frame.keypoints.find(s1.to);
    if (a == frame.keypoints.end() || m == frame.keypoints.end() || b == frame.keypoints.end()) {
      continue;
    }
    const double robotCos =
        cosBetween(kp.robot.at(s0.to) - kp.robot.at(s0.from), kp.robot.at(s1.to) - kp.robot.at(s1.from));
    const double targetCos = cosBetween(m->second - a->second, b->second - m->second);
    w.push(CostTerm::Local, robotCos - targetCos);
  }
}

void appendPoseTerms(
    const RetargetProblem& p,
    const Context& c,
    const RetargetFrame& frame,
    const std::vector<Pose>& fk,
    const SolutionFrame& cur,
    ResidualWriter& w) {
  for (const auto& [name, target] : frame.orientations) {
    const Pose& pose = framePose(fk, cur.root, c.frameIndex.at(name));
    w.push(CostTerm::EeRotation, quatBoxminus(target, pose.orientation));
  }
  for (const auto& [i, j] : c.pairs) {
    const auto& si = p.spheres[i];
    const auto& sj = p.spheres[j];
    const Vec3 ci = framePose(fk, cur.root, c.sphereFrame[i]).transformPoint(si.offset);
    const Vec3 cj = framePose(fk, cur.root, c.sphereFrame[j]).transformPoint(sj.offset);
    w.push(CostTerm::Collision, std::max(0.0, si.radius + sj.radius - (ci - cj).norm()));
  }
  const auto& joints = p.chain.joints();
  for (std::size_t i = 0; i < joints.size(); ++i) {
    const double q = cur.q[static_cast<Eigen::Index>(i)];
    w.push(CostTerm::Limit, q - std::clamp(q, joints[i].lower, joints[i].upper));
  }
}

void frameResiduals(
    const RetargetProblem& p,
    const Context& c,
    std::size_t frameIdx,
    const SolutionFrame& cur,
    const SolutionFrame* prev,
    double globalScale,
    const VecX& localScales,
    Residuals& out) {
  const auto& frame = p.frames[frameIdx];
  const auto fk = forwardKinematicsIndexed(p.chain, cur.root, cur.q);
  ResidualWriter w(out);
  const auto kp = keypointPositions(p, c, frame, fk, cur.root, globalScale);
  appendScaleTerms(p, c, kp, frame, globalScale, localScales, w);
  appendPoseTerms(p, c, frame, fk, cur, w);
  if (prev != nullptr) {
    appendSmooth(cur, *prev, w);
  }
  w.finish();
}

// Multiplies each entry by sqrt(weight of its term).
VecX weighted(const Residuals& r, const CostWeights& weights) {
  VecX out = r.values;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    out[i] *= std::sqrt(weights.of(r.terms[static_cast<std::size_t>(i)]));
  }
  return out;
}

void checkSolutionShape(const RetargetProblem& p, const RetargetSolution& x) {
  require(x.frames.size() == p.frames.size(), "solution frame count does not match the problem");
  require(
      static_cast<std::size_t>(x.localScales.size()) == p.segments.size(),
      "one local scale per segment is required");
  require(x.globalScale > 0.0, "global scale must be > 0");
  for (const auto& f : x.frames) {
    require(
        static_cast<std::size_t>(f.q.size()) == p.chain.jointCount(),
        "solution joint vector does not match the chain");
    require(f.q.allFinite() && f.root.position.allFinite(), "solution contains non-finite values");
  }
}

void checkFinite(const TermCosts& costs) {
  for (const auto& [term, value] : costs) {
    if (!std::isfinite(value)) {
      fail(ErrorKind::NumericalFailure, fmt::format("non-finite cost in term '{}'", toString(term)));
    }
  }
}

} // namespace

void RetargetProblem::validate() const {
  require(!frames.empty(), "retarget problem has no frames");
  for (const auto term : kAllCostTerms) {
    const double w = weights.of(term);
    require(std::isfinite(w) && w >= 0.0, fmt::format("weight of '{}' must be >= 0", toString(term)));
  }
  std::map<std::string, std::size_t> bound;
  for (std::size_t k = 0; k < keypoints.size(); ++k) {
    const auto& b = keypoints[k];
    if (!chain.hasFrame(b.frame)) {
      fail(
          ErrorKind::InvalidInput,
          fmt::format("keypoint '{}' is bound to unknown frame '{}'", b.name, b.frame));
    }
    bound[b.name] = k;
  }
  for (const auto& f : frames) {
    for (const auto& [name, pos] : f.keypoints) {
      if (bound.count(name) == 0) {
        fail(ErrorKind::InvalidInput, fmt::format("keypoint '{}' is not mapped onto the chain", name));
      }
      require(pos.allFinite(), fmt::format("keypoint '{}' is not finite", name));
    }
    for (const auto& [name, q] : f.orientations) {
      if (!chain.hasFrame(name)) {
        fail(ErrorKind::InvalidInput, fmt::format("orientation target on unknown frame '{}'", name));
      }
      (void)q;
    }
  }
  for (const auto& s : segments) {
    require(
        bound.count(s.from) != 0 && bound.count(s.to) != 0,
        fmt::format("segment {}->{} references an unmapped keypoint", s.from, s.to));
  }
  for (const auto& s : spheres) {
    require(s.radius > 0.0, "collision sphere radius must be > 0");
    require(chain.hasFrame(s.frame), fmt::format("collision sphere on unknown frame '{}'", s.frame));
  }
  for (const auto& [i, j] : collisionPairs) {
    require(i < spheres.size() && j < spheres.size() && i != j, "invalid collision pair");
  }
}

Residuals evaluateResiduals(const RetargetProblem& p, const RetargetSolution& x, std::size_t frame) {
  p.validate();
  checkSolutionShape(p, x);
  require(frame < p.frames.size(), fmt::format("frame {} out of range", frame));
  const Context c = buildContext(p);
  Residuals r;
  const SolutionFrame* prev = frame > 0 ? &x.frames[frame - 1] : nullptr;
  frameResiduals(p, c, frame, x.frames[frame], prev, x.globalScale, x.localScales, r);
  return r;
}

namespace {

TermCosts costsWithContext(const RetargetProblem& p, const Context& c, const RetargetSolution& x) {
  TermCosts costs;
  for (const auto term : kAllCostTerms) {
    costs[term] = 0.0;
  }
  for (std::size_t f = 0; f < p.frames.size(); ++f) {
    Residuals r;
    const SolutionFrame* prev = f > 0 ? &x.frames[f - 1] : nullptr;
    frameResiduals(p, c, f, x.frames[f], prev, x.globalScale, x.localScales, r);
    for (Eigen::Index i = 0; i < r.values.size(); ++i) {
      const auto term = r.terms[static_cast<std::size_t>(i)];
      costs[term] += p.weights.of(term) * r.values[i] * r.values[i];
    }
  }
  return costs;
}

} // namespace

TermCosts evaluateCosts(const RetargetProblem& p, const RetargetSolution& x) {
  p.validate();
  checkSolutionShape(p, x);
  return costsWithContext(p, buildContext(p), x);
}

double totalCost(const TermCosts& costs) {
  double s = 0.0;
  for (const auto& [term, value] : costs) {
    s += value;
  }
  return s;
}

RetargetSolution defaultInitialGuess(const RetargetProblem& p) {
  RetargetSolution x;
  const VecX lo = p.chain.lowerLimits();
  const VecX hi = p.chain.upperLimits();
  const VecX q0 = VecX::Zero(static_cast<Eigen::Index>(p.chain.jointCount())).cwiseMax(lo).cwiseMin(hi);
  for (const auto& f : p.frames) {
    Vec3 centroid = Vec3::Zero();
    for (const auto& [name, pos] : f.keypoints) {
      centroid += pos;
    }
    if (!f.keypoints.empty()) {
      centroid /= static_cast<double>(f.keypoints.size());
    }
    x.frames.push_back({Pose(centroid, Quat::Identity()), q0});
  }
  x.globalScale = 1.0;
  x.localScales = VecX::Ones(static_cast<Eigen::Index>(p.segments.size()));
  return x;
}

RetargetResult solveRetarget(const RetargetProblem& p, const RetargetSolution& init) {
  p.validate();
  checkSolutionShape(p, init);
  const Context c = buildContext(p);
  const auto n = static_cast<Eigen::Index>(p.chain.jointCount());
  const std::size_t frameCount = p.frames.size();

  RetargetResult result;
  RetargetSolution x = init;
  x.localScales = x.localScales.cwiseMax(kLocalScaleMin).cwiseMin(kLocalScaleMax);

  TermCosts costs = costsWithContext(p, c, x);
  checkFinite(costs);
  double total = totalCost(costs);
  result.costHistory.push_back(total);

  // Subproblem for frame f: its own residuals plus the smooth link from f + 1.
  auto frameProblem = [&](std::size_t f) {
    LeastSquaresProblem<SolutionFrame> lsq;
    lsq.dimension = (p.optimizeRoot ? 6 : 0) + n;
    lsq.residuals = [&, f](const SolutionFrame& cur) {
      Residuals r;
      const SolutionFrame* prev = f > 0 ? &x.frames[f - 1] : nullptr;
      frameResiduals(p, c, f, cur, prev, x.globalScale, x.localScales, r);
      if (f + 1 < frameCount) {
        ResidualWriter w(r);
        appendSmooth(x.frames[f + 1], cur, w);
        w.finish();
      }
      return weighted(r, p.weights);
    };
    lsq.retract = [&](const SolutionFrame& cur, const VecX& d) {
      SolutionFrame out = cur;
      Eigen::Index at = 0;
      if (p.optimizeRoot) {
        out.root.position += d.segment<3>(0);
        out.root.orientation = quatBoxplus(cur.root.orientation, d.segment<3>(3));
        at = 6;
      }
      out.q += d.segment(at, n);
      return out;
    };
    return lsq;
  };

  auto recordAccepted = [&](double subBefore, const std::vector<double>& accepted) {
    for (const double cst : accepted) {
      result.costHistory.push_back(total - (subBefore - cst));
    }
    if (!accepted.empty()) {
      total -= subBefore - accepted.back();
    }
  };

  for (int sweep = 0; sweep < p.options.maxSweeps; ++sweep) {
    const double sweepStart = total;
    for (std::size_t f = 0; f < frameCount; ++f) {
      const auto lsq = frameProblem(f);
      double subBefore = lsq.residuals(x.frames[f]).squaredNorm();
      if (sweep == 0 && f > 0) {
        // Warm start from the previous frame when that is already better.
        const SolutionFrame candidate = x.frames[f - 1];
        const double candCost = lsq.residuals(candidate).squaredNorm();
        if (std::isfinite(candCost) && candCost < subBefore) {
          x.frames[f] = candidate;
          total -= subBefore - candCost;
          result.costHistory.push_back(total);
          subBefore = candCost;
        }
      }
      const auto solved = levenbergMarquardt(lsq, x.frames[f], p.options);
      result.iterations += solved.iterations;
      x.frames[f] = solved.state;
      recordAccepted(subBefore, solved.acceptedCosts);
    }

    if (p.optimizeScales && (p.weights.global > 0.0 || p.weights.local > 0.0)) {
      std::vector<std::vector<Pose>> fkCache;
      fkCache.reserve(frameCount);
      for (std::size_t f = 0; f < frameCount; ++f) {
        fkCache.push_back(forwardKinematicsIndexed(p.chain, x.frames[f].root, x.frames[f].q));
      }
      const auto segs = static_cast<Eigen::Index>(p.segments.size());
      LeastSquaresProblem<VecX> lsq;
      lsq.dimension = 1 + segs;
      lsq.residuals = [&](const VecX& scales) {
        Residuals r;
        const VecX local = scales.tail(segs);
        for (std::size_t f = 0; f < frameCount; ++f) {
          ResidualWriter w(r);
          const auto kp = keypointPositions(p, c, p.frames[f], fkCache[f], x.frames[f].root, scales[0]);
          appendScaleTerms(p, c, kp, p.frames[f], scales[0], local, w);
          w.finish();
        }
        return weighted(r, p.weights);
      };
      lsq.retract = [](const VecX& s, const VecX& d) {
        VecX out = s + d;
        out[0] = std::clamp(out[0], 1e-3, 1e3);
        for (Eigen::Index i = 1; i < out.size(); ++i) {
          out[i] = std::clamp(out[i], kLocalScaleMin, kLocalScaleMax);
        }
        return out;
      };
      VecX scales(1 + segs);
      scales << x.globalScale, x.localScales;
      const double subBefore = lsq.residuals(scales).squaredNorm();
      const auto solved = levenbergMarquardt(lsq, scales, p.options);
      result.iterations += solved.iterations;
      x.globalScale = solved.state[0];
      x.localScales = solved.state.tail(segs);
      recordAccepted(subBefore, solved.acceptedCosts);
    }

    if (total <= 1e-30 || sweepStart <= 0.0) {
      break;
    }
    if ((sweepStart - total) / sweepStart < p.options.relativeTolerance) {
      break;
    }
  }

  result.finalCosts = costsWithContext(p, c, x);
  checkFinite(result.finalCosts);

  const VecX lo = p.chain.lowerLimits();
  const VecX hi = p.chain.upperLimits();
  for (auto& f : x.frames) {
    f.q = f.q.cwiseMax(lo).cwiseMin(hi);
  }
  result.solution = std::move(x);
  return result;
}

namespace {

std::vector<int> footIndices(const KinematicChain& chain, const std::vector<std::string>& feetFrames) {
  std::vector<int> idx;
  const auto& joints = chain.joints();
  for (const auto& name : feetFrames) {
    int found = std::numeric_limits<int>::min();
    for (std::size_t i = 0; i < joints.size(); ++i) {
      if (joints[i].name == name) {
        found = static_cast<int>(i);
      }
    }
    for (std::size_t e = 0; e < chain.endEffectors().size(); ++e) {
      if (chain.endEffectors()[e].name == name) {
        found = static_cast<int>(joints.size() + e);
      }
    }
    if (found == std::numeric_limits<int>::min()) {
      fail(ErrorKind::InvalidInput, fmt::format("foot frame '{}' not found on chain", name));
    }
    idx.push_back(found);
  }
  return idx;
}

} // namespace

RetargetSolution alignToGround(
    const RetargetSolution& sol,
    const KinematicChain& chain,
    const std::vector<std::string>& feetFrames) {
  const auto feet = footIndices(chain, feetFrames);
  if (feet.empty() || sol.frames.empty()) {
    return sol;
  }
  double minHeight = std::numeric_limits<double>::infinity();
  for (const auto& f : sol.frames) {
    const auto fk = forwardKinematicsIndexed(chain, f.root, f.q);
    for (const int i : feet) {
      minHeight = std::min(minHeight, fk[static_cast<std::size_t>(i)].position.z());
    }
  }
  RetargetSolution out = sol;
  for (auto& f : out.frames) {
    f.root.position.z() -= minHeight;
  }
  return out;
}

std::vector<std::vector<int>> extractContacts(
    const RetargetSolution& sol,
    const KinematicChain& chain,
    const std::vector<std::string>& feetFrames,
    double threshold) {
  require(threshold > 0.0, "contact threshold must be > 0");
  const auto feet = footIndices(chain, feetFrames);
  std::vector<std::vector<int>> contacts;
  contacts.reserve(sol.frames.size());
  for (const auto& f : sol.frames) {
    const auto fk = forwardKinematicsIndexed(chain, f.root, f.q);
    std::vector<int> c;
    for (const int i : feet) {
      c.push_back(fk[static_cast<std::size_t>(i)].position.z() < threshold ? 1 : 0);
    }
    contacts.push_back(std::move(c));
  }
  return contacts;
}

} // namespace shuttlekit
