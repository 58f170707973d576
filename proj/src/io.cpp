#include "shuttlekit/io.h"

#include "csv.h"
#include "shuttlekit/error.h"

#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <sstream>

namespace shuttlekit::io {

namespace {

template <typename T>
void optional(const Json& j, const char* key, T& out) {
  if (j.is_object() && j.contains(key) && !j.at(key).is_null()) {
    try {
      out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::InvalidInput, fmt::format("field '{}': {}", key, e.what()));
    }
  }
}

const Json& member(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    fail(ErrorKind::InvalidInput, fmt::format("missing field '{}'", key));
  }
  return j.at(key);
}

double numberAt(const Json& j, const char* what) {
  if (!j.is_number()) {
    fail(ErrorKind::InvalidInput, fmt::format("'{}' must be a number", what));
  }
  return j.get<double>();
}

VecX vecX(const Json& j, const char* what) {
  if (!j.is_array()) {
    fail(ErrorKind::InvalidInput, fmt::format("'{}' must be an array", what));
  }
  VecX v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = numberAt(j[i], what);
  }
  return v;
}

Json toJson(const VecX& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    a.push_back(number(v[i]));
  }
  return a;
}

Pose poseFrom(const Json& j, const char* posKey, const char* quatKey) {
  Pose p;
  if (j.contains(posKey)) {
    p.position = vec3(j.at(posKey), posKey);
  }
  if (j.contains(quatKey)) {
    p.orientation = quatWxyz(j.at(quatKey), quatKey);
  }
  return p;
}

int resolveParent(const Json& j, const std::map<std::string, int>& names, const std::string& owner) {
  if (!j.contains("parent") || j.at("parent").is_null()) {
    return -1;
  }
  const auto& parent = j.at("parent");
  if (parent.is_number_integer()) {
    return parent.get<int>();
  }
  if (parent.is_string()) {
    const auto name = parent.get<std::string>();
    if (name == "root") {
      return -1;
    }
    const auto it = names.find(name);
    if (it == names.end()) {
      fail(ErrorKind::InvalidInput, fmt::format("'{}' names unknown parent '{}'", owner, name));
    }
    return it->second;
  }
  fail(ErrorKind::InvalidInput, fmt::format("'{}' parent must be an index or a joint name", owner));
}

bool flag(const std::string& field, std::size_t line) {
  if (field == "1" || field == "true") {
    return true;
  }
  if (field == "0" || field == "false") {
    return false;
  }
  fail(ErrorKind::InvalidInput, fmt::format("line {}: '{}' is not a 0/1 flag", line, field));
}

} // namespace

std::string formatNumber(double v) {
  return fmt::format("{:.9g}", v);
}

Json number(double v) {
  if (!std::isfinite(v)) {
    return nullptr;
  }
  return std::stod(formatNumber(v));
}

Json readJsonFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    fail(ErrorKind::Io, fmt::format("cannot open '{}'", path.string()));
  }
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::InvalidInput, fmt::format("'{}': {}", path.string(), e.what()));
  }
}

void writeTextFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    fail(ErrorKind::Io, fmt::format("cannot write '{}'", path.string()));
  }
  out << text;
}

void writeJsonFile(const std::filesystem::path& path, const Json& j) {
  writeTextFile(path, j.dump(2) + "\n");
}

Vec3 vec3(const Json& j, const char* what) {
  const VecX v = vecX(j, what);
  if (v.size() != 3) {
    fail(ErrorKind::InvalidInput, fmt::format("'{}' must have 3 entries", what));
  }
  return v;
}

Quat quatWxyz(const Json& j, const char* what) {
  const VecX v = vecX(j, what);
  if (v.size() != 4 || v.norm() == 0.0) {
    fail(ErrorKind::InvalidInput, fmt::format("'{}' must be a non-zero [w,x,y,z] quaternion", what));
  }
  return quatFromWxyz(v[0], v[1], v[2], v[3]);
}

Json toJson(const Vec3& v) {
  return Json::array({number(v.x()), number(v.y()), number(v.z())});
}

Json toJson(const Quat& q) {
  const Quat c = canonical(q);
  return Json::array({number(c.w()), number(c.x()), number(c.y()), number(c.z())});
}

KinematicChain chainFromJson(const Json& j) {
  const auto& joints = member(j, "joints");
  if (!joints.is_array()) {
    fail(ErrorKind::InvalidInput, "'joints' must be an array");
  }
  std::map<std::string, int> names;
  std::vector<Joint> out;
  for (const auto& jj : joints) {
    Joint joint;
    joint.name = member(jj, "name").get<std::string>();
    joint.parent = resolveParent(jj, names, joint.name);
    joint.offset = poseFrom(jj, "offset_pos", "offset_quat");
    if (jj.contains("axis")) {
      joint.axis = vec3(jj.at("axis"), "axis");
    }
    if (jj.contains("limits")) {
      const VecX lim = vecX(jj.at("limits"), "limits");
      require(lim.size() == 2, "joint limits must be [lo, hi]");
      joint.lower = lim[0];
      joint.upper = lim[1];
    }
    names[joint.name] = static_cast<int>(out.size());
    out.push_back(std::move(joint));
  }
  std::vector<EndEffector> ees;
  if (j.contains("end_effectors")) {
    for (const auto& e : j.at("end_effectors")) {
      EndEffector ee;
      ee.name = member(e, "name").get<std::string>();
      ee.parent = resolveParent(e, names, ee.name);
      ee.offset = poseFrom(e, "offset_pos", "offset_quat");
      ees.push_back(std::move(ee));
    }
  }
  return KinematicChain(std::move(out), std::move(ees));
}

Json toJson(const KinematicChain& chain) {
  Json joints = Json::array();
  for (const auto& j : chain.joints()) {
    joints.push_back({
        {"name", j.name},
        {"parent", j.parent},
        {"offset_pos", toJson(j.offset.position)},
        {"offset_quat", toJson(j.offset.orientation)},
        {"axis", toJson(j.axis)},
        {"limits", Json::array({number(j.lower), number(j.upper)})},
    });
  }
  Json ees = Json::array();
  for (const auto& e : chain.endEffectors()) {
    ees.push_back({
        {"name", e.name},
        {"parent", e.parent},
        {"offset_pos", toJson(e.offset.position)},
        {"offset_quat", toJson(e.offset.orientation)},
    });
  }
  return {{"joints", joints}, {"end_effectors", ees}};
}

ShuttleParams shuttleParamsFromJson(const Json& j) {
  ShuttleParams p;
  optional(j, "mass", p.mass);
  optional(j, "drag_coeff", p.dragCoeff);
  optional(j, "axis_damping", p.axisDamping);
  optional(j, "gravity", p.gravity);
  optional(j, "head_restitution", p.headRestitution);
  optional(j, "skirt_restitution", p.skirtRestitution);
  p.validate();
  return p;
}

CourtGeometry courtFromJson(const Json& j) {
  CourtGeometry c;
  optional(j, "net_height", c.netHeight);
  optional(j, "net_x", c.netX);
  optional(j, "x_min", c.xMin);
  optional(j, "x_max", c.xMax);
  optional(j, "y_min", c.yMin);
  optional(j, "y_max", c.yMax);
  c.validate();
  return c;
}

NoiseConfig noiseFromJson(const Json& j) {
  NoiseConfig n;
  optional(j, "accel_psd", n.accelPsd);
  optional(j, "latency", n.latency);
  if (j.contains("measurement_sigma")) {
    const double s = numberAt(j.at("measurement_sigma"), "measurement_sigma");
    n.measurementCov = Mat3::Identity() * s * s;
  }
  if (j.contains("measurement_cov")) {
    const auto& rows = j.at("measurement_cov");
    require(rows.is_array() && rows.size() == 3, "measurement_cov must be 3x3");
    for (int r = 0; r < 3; ++r) {
      n.measurementCov.row(r) = vec3(rows[static_cast<std::size_t>(r)], "measurement_cov").transpose();
    }
  }
  n.validate();
  return n;
}

HitCriteria hitCriteriaFromJson(const Json& j) {
  HitCriteria c;
  if (j.contains("height_band")) {
    const VecX band = vecX(j.at("height_band"), "height_band");
    require(band.size() == 2, "height_band must be [min, max]");
    c.heightMin = band[0];
    c.heightMax = band[1];
  }
  if (j.contains("reachable_center")) {
    c.reachable.center = vec3(j.at("reachable_center"), "reachable_center");
  }
  if (j.contains("reachable_size")) {
    c.reachable.size = vec3(j.at("reachable_size"), "reachable_size");
  }
  std::string pref = "earliest";
  optional(j, "preference", pref);
  if (pref == "earliest") {
    c.preference = HitPreference::Earliest;
  } else if (pref == "apex") {
    c.preference = HitPreference::Apex;
  } else {
    fail(ErrorKind::InvalidInput, fmt::format("unknown hit preference '{}'", pref));
  }
  require(c.heightMin <= c.heightMax, "height band must satisfy min <= max");
  return c;
}

RewardConfig rewardConfigFromJson(const Json& j) {
  RewardConfig c;
  auto terms = [&](const char* key, std::vector<KernelTerm>& out) {
    if (!j.contains(key)) {
      return;
    }
    out.clear();
    for (const auto& t : j.at(key)) {
      KernelTerm k;
      optional(t, "weight", k.weight);
      optional(t, "sigma", k.sigma);
      out.push_back(k);
    }
  };
  terms("hit", c.hit);
  terms("recovery", c.recovery);
  optional(j, "sigma_time", c.sigmaTime);
  optional(j, "epsilon", c.epsilon);
  optional(j, "task_weight", c.taskWeight);
  optional(j, "style_weight", c.styleWeight);
  optional(j, "speed_scale", c.speedScale);
  optional(j, "direction_falloff", c.directionFalloff);
  std::string mode = "binary";
  optional(j, "direction_mode", mode);
  if (mode == "binary") {
    c.directionMode = DirectionMode::Binary;
  } else if (mode == "graded") {
    c.directionMode = DirectionMode::Graded;
  } else {
    fail(ErrorKind::InvalidInput, fmt::format("unknown direction mode '{}'", mode));
  }
  c.validate();
  return c;
}

TerminationConfig terminationFromJson(const Json& j) {
  TerminationConfig c;
  optional(j, "min_base_height", c.minBaseHeight);
  optional(j, "max_tilt", c.maxTilt);
  optional(j, "max_deviation", c.maxDeviation);
  c.validate();
  return c;
}

AmpConfig ampConfigFromJson(const Json& j) {
  AmpConfig c;
  optional(j, "history_length", c.historyLength);
  optional(j, "gradient_penalty", c.gradientPenalty);
  optional(j, "end_effectors", c.endEffectors);
  c.validate();
  return c;
}

VolumeConfig volumeConfigFromJson(const Json& j) {
  VolumeConfig v;
  if (j.contains("center")) {
    v.center = vec3(j.at("center"), "center");
  }
  if (j.contains("easy_size")) {
    v.easySize = vec3(j.at("easy_size"), "easy_size");
  }
  if (j.contains("hard_size")) {
    v.hardSize = vec3(j.at("hard_size"), "hard_size");
  }
  return v;
}

ServeConfig serveConfigFromJson(const Json& j) {
  ServeConfig s;
  if (j.contains("origin")) {
    s.origin = vec3(j.at("origin"), "origin");
  }
  if (j.contains("origin_jitter")) {
    s.originJitter = vec3(j.at("origin_jitter"), "origin_jitter");
  }
  optional(j, "dt", s.dt);
  optional(j, "max_iterations", s.maxIterations);
  require(s.dt > 0.0, "serve dt must be > 0");
  return s;
}

IbrWeights ibrWeightsFromJson(const Json& j) {
  IbrWeights w;
  optional(j, "in_bounds", w.inBounds);
  optional(j, "out_or_net", w.outOrNet);
  optional(j, "miss", w.miss);
  return w;
}

ShuttleState shuttleStateFromJson(const Json& j) {
  ShuttleState s;
  s.position = vec3(member(j, "position"), "position");
  s.velocity = vec3(member(j, "velocity"), "velocity");
  if (j.contains("axis") && !j.at("axis").is_null()) {
    const Vec3 a = vec3(j.at("axis"), "axis");
    require(a.norm() > 0.0, "axis must be non-zero");
    s.axis = a.normalized();
  }
  require(s.position.allFinite() && s.velocity.allFinite(), "shuttle state must be finite");
  return s;
}

Mlp mlpFromJson(const Json& j) {
  const auto& layers = member(j, "layers");
  std::vector<DenseLayer> out;
  for (const auto& l : layers) {
    const auto& w = member(l, "w");
    require(w.is_array() && !w.empty(), "layer weights must be a non-empty matrix");
    DenseLayer d;
    const auto rows = static_cast<Eigen::Index>(w.size());
    const auto cols = static_cast<Eigen::Index>(w[0].size());
    d.weight.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const VecX row = vecX(w[static_cast<std::size_t>(r)], "w");
      require(row.size() == cols, "ragged weight matrix");
      d.weight.row(r) = row.transpose();
    }
    d.bias = vecX(member(l, "b"), "b");
    out.push_back(std::move(d));
  }
  return Mlp(std::move(out));
}

Json toJson(const Mlp& net) {
  Json layers = Json::array();
  for (const auto& l : net.layers()) {
    Json w = Json::array();
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      w.push_back(toJson(VecX(l.weight.row(r).transpose())));
    }
    layers.push_back({{"w", w}, {"b", toJson(l.bias)}});
  }
  return {{"layers", layers}};
}

ReferenceClip clipFromJson(const Json& j) {
  ReferenceClip clip;
  const Json& frames = j.is_array() ? j : member(j, "frames");
  for (const auto& f : frames) {
    ClipFrame cf;
    cf.t = numberAt(member(f, "t"), "t");
    cf.root = poseFrom(f, "root_pos", "root_quat");
    if (f.contains("root_lin")) {
      cf.rootLinear = vec3(f.at("root_lin"), "root_lin");
    }
    if (f.contains("root_ang")) {
      cf.rootAngular = vec3(f.at("root_ang"), "root_ang");
    }
    cf.q = f.contains("q") ? vecX(f.at("q"), "q") : VecX();
    optional(f, "contacts", cf.contacts);
    if (!clip.frames.empty()) {
      require(cf.t > clip.frames.back().t, "clip frame times must be increasing");
    }
    clip.frames.push_back(std::move(cf));
  }
  if (j.is_object() && j.contains("annotations")) {
    optional(j.at("annotations"), "hit_times", clip.hitTimes);
    optional(j.at("annotations"), "recovery_times", clip.recoveryTimes);
  }
  return clip;
}

Json toJson(const ReferenceClip& clip) {
  Json frames = Json::array();
  for (const auto& f : clip.frames) {
    Json jf = {
        {"t", number(f.t)},
        {"root_pos", toJson(f.root.position)},
        {"root_quat", toJson(f.root.orientation)},
        {"root_lin", toJson(f.rootLinear)},
        {"root_ang", toJson(f.rootAngular)},
        {"q", toJson(f.q)},
    };
    if (!f.contacts.empty()) {
      jf["contacts"] = f.contacts;
    }
    frames.push_back(std::move(jf));
  }
  Json hits = Json::array();
  for (const double t : clip.hitTimes) {
    hits.push_back(number(t));
  }
  Json recs = Json::array();
  for (const double t : clip.recoveryTimes) {
    recs.push_back(number(t));
  }
  return {{"frames", frames}, {"annotations", {{"hit_times", hits}, {"recovery_times", recs}}}};
}

RetargetJob retargetJobFromJson(const Json& j, const std::filesystem::path& baseDir) {
  RetargetJob job;
  auto& p = job.problem;
  const auto& chainJson = member(j, "chain");
  p.chain = chainJson.is_string() ? chainFromJson(readJsonFile(baseDir / chainJson.get<std::string>()))
                                  : chainFromJson(chainJson);

  for (const auto& [name, b] : member(j, "keypoint_map").items()) {
    KeypointBinding kb;
    kb.name = name;
    kb.frame = member(b, "frame").get<std::string>();
    if (b.contains("offset")) {
      kb.offset = vec3(b.at("offset"), "offset");
    }
    p.keypoints.push_back(std::move(kb));
  }
  if (j.contains("segments")) {
    for (const auto& s : j.at("segments")) {
      require(s.is_array() && s.size() == 2, "segments must be [from, to] pairs");
      p.segments.push_back({s[0].get<std::string>(), s[1].get<std::string>()});
    }
  }
  if (j.contains("weights")) {
    const auto& w = j.at("weights");
    optional(w, "global", p.weights.global);
    optional(w, "local", p.weights.local);
    optional(w, "ee_rotation", p.weights.eeRotation);
    optional(w, "collision", p.weights.collision);
    optional(w, "limit", p.weights.limit);
    optional(w, "smooth", p.weights.smooth);
  }
  if (j.contains("spheres")) {
    for (const auto& s : j.at("spheres")) {
      CollisionSphere cs;
      cs.frame = member(s, "frame").get<std::string>();
      if (s.contains("offset")) {
        cs.offset = vec3(s.at("offset"), "offset");
      }
      cs.radius = numberAt(member(s, "radius"), "radius");
      p.spheres.push_back(std::move(cs));
    }
  }
  if (j.contains("collision_pairs")) {
    for (const auto& pr : j.at("collision_pairs")) {
      require(pr.is_array() && pr.size() == 2, "collision pairs must be [i, j]");
      p.collisionPairs.emplace_back(pr[0].get<std::size_t>(), pr[1].get<std::size_t>());
    }
  }
  optional(j, "optimize_root", p.optimizeRoot);
  optional(j, "optimize_scales", p.optimizeScales);
  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    optional(s, "max_iterations", p.options.maxIterations);
    optional(s, "relative_tolerance", p.options.relativeTolerance);
    optional(s, "max_sweeps", p.options.maxSweeps);
  }
  optional(j, "racket_frame", job.racketFrame);
  optional(j, "feet_frames", job.feetFrames);
  optional(j, "contact_threshold", job.contactThreshold);

  for (const auto& f : member(j, "frames")) {
    RetargetFrame rf;
    rf.t = numberAt(member(f, "t"), "t");
    for (const auto& [name, pos] : member(f, "keypoints").items()) {
      rf.keypoints[name] = vec3(pos, "keypoint");
    }
    if (f.contains("racket_quat") && !f.at("racket_quat").is_null()) {
      require(!job.racketFrame.empty(), "racket_quat given but no racket_frame configured");
      rf.orientations[job.racketFrame] = quatWxyz(f.at("racket_quat"), "racket_quat");
    }
    if (f.contains("orientations")) {
      for (const auto& [name, q] : f.at("orientations").items()) {
        rf.orientations[name] = quatWxyz(q, "orientation");
      }
    }
    p.frames.push_back(std::move(rf));
  }
  p.validate();
  return job;
}

ReferenceClip solutionToClip(
    const RetargetSolution& sol,
    const std::vector<RetargetFrame>& frames,
    const std::vector<std::vector<int>>& contacts) {
  require(sol.frames.size() == frames.size(), "solution and frame counts differ");
  ReferenceClip clip;
  for (std::size_t f = 0; f < sol.frames.size(); ++f) {
    ClipFrame cf;
    cf.t = frames[f].t;
    cf.root = sol.frames[f].root;
    cf.q = sol.frames[f].q;
    if (f < contacts.size()) {
      cf.contacts = contacts[f];
    }
    clip.frames.push_back(std::move(cf));
  }
  // Forward differences; the last frame reuses the previous interval.
  for (std::size_t f = 0; f + 1 < clip.frames.size(); ++f) {
    const auto& a = clip.frames[f];
    const auto& b = clip.frames[f + 1];
    const double dt = b.t - a.t;
    require(dt > 0.0, "keypoint frame times must be increasing");
    clip.frames[f].rootLinear = (b.root.position - a.root.position) / dt;
    clip.frames[f].rootAngular = quatBoxminus(b.root.orientation, a.root.orientation) / dt;
  }
  if (clip.frames.size() >= 2) {
    auto& last = clip.frames.back();
    const auto& prev = clip.frames[clip.frames.size() - 2];
    last.rootLinear = prev.rootLinear;
    last.rootAngular = prev.rootAngular;
  }
  return clip;
}

std::vector<DatasetStrike> datasetFromJson(const Json& j) {
  const Json& items = j.is_array() ? j : member(j, "strikes");
  std::vector<DatasetStrike> out;
  for (const auto& s : items) {
    DatasetStrike d;
    d.position = vec3(member(s, "pos"), "pos");
    d.time = numberAt(member(s, "t"), "t");
    out.push_back(d);
  }
  return out;
}

Json toJson(const StrikeManifold& manifold) {
  Json a = Json::array();
  for (const auto& p : manifold) {
    a.push_back({{"pos", toJson(p.position)}, {"t", number(p.time)}, {"src", p.source}});
  }
  return a;
}

StrikeManifold manifoldFromJson(const Json& j) {
  StrikeManifold out;
  for (const auto& s : j) {
    StrikePoint p;
    p.position = vec3(member(s, "pos"), "pos");
    p.time = numberAt(member(s, "t"), "t");
    p.source = member(s, "src").get<std::size_t>();
    out.push_back(p);
  }
  return out;
}

void writeTrajectoryCsv(std::ostream& out, const Trajectory& traj) {
  out << "t,x,y,z,vx,vy,vz\n";
  for (const auto& s : traj) {
    const auto& p = s.state.position;
    const auto& v = s.state.velocity;
    out << fmt::format(
        "{},{},{},{},{},{},{}\n",
        formatNumber(s.t),
        formatNumber(p.x()),
        formatNumber(p.y()),
        formatNumber(p.z()),
        formatNumber(v.x()),
        formatNumber(v.y()),
        formatNumber(v.z()));
  }
}

Trajectory readTrajectoryCsv(std::istream& in) {
  const auto table = csv::read(in);
  const std::vector<std::string> cols{"t", "x", "y", "z", "vx", "vy", "vz"};
  std::vector<std::size_t> idx;
  for (const auto& c : cols) {
    idx.push_back(csv::column(table, c));
  }
  Trajectory traj;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto line = table.lineNumbers[r];
    TimedState s;
    s.t = csv::toDouble(row[idx[0]], line);
    for (int i = 0; i < 3; ++i) {
      s.state.position[i] = csv::toDouble(row[idx[1 + static_cast<std::size_t>(i)]], line);
      s.state.velocity[i] = csv::toDouble(row[idx[4 + static_cast<std::size_t>(i)]], line);
    }
    traj.push_back(s);
  }
  return traj;
}

std::vector<Measurement> readMeasurementsCsv(std::istream& in) {
  const auto table = csv::read(in);
  if (table.header.empty()) {
    fail(ErrorKind::InvalidInput, "measurement CSV is empty");
  }
  const auto t = csv::column(table, "t");
  const auto x = csv::column(table, "x");
  const auto y = csv::column(table, "y");
  const auto z = csv::column(table, "z");
  std::vector<Measurement> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto line = table.lineNumbers[r];
    Measurement m;
    m.t = csv::toDouble(row[t], line);
    m.position = Vec3(csv::toDouble(row[x], line), csv::toDouble(row[y], line), csv::toDouble(row[z], line));
    if (!out.empty() && !(m.t > out.back().t)) {
      fail(ErrorKind::InvalidInput, fmt::format("line {}: timestamps must increase", line));
    }
    out.push_back(m);
  }
  return out;
}

void writeMeasurementsCsv(std::ostream& out, const std::vector<Measurement>& m) {
  out << "t,x,y,z\n";
  for (const auto& s : m) {
    out << fmt::format(
        "{},{},{},{}\n",
        formatNumber(s.t),
        formatNumber(s.position.x()),
        formatNumber(s.position.y()),
        formatNumber(s.position.z()));
  }
}

void writeFilterLogCsv(std::ostream& out, const std::vector<FilterLogRow>& rows) {
  out << "t,mx,my,mz,mvx,mvy,mvz,nis\n";
  for (const auto& r : rows) {
    out << formatNumber(r.t);
    for (int i = 0; i < 6; ++i) {
      out << ',' << formatNumber(r.mean[i]);
    }
    out << ',' << formatNumber(r.nis) << '\n';
  }
}

EpisodeLog readEpisodeLogCsv(std::istream& in) {
  const auto table = csv::read(in);
  const auto id = csv::column(table, "serve_id");
  const auto hit = csv::column(table, "intercepted");
  const auto dx = csv::column(table, "dx");
  const auto dy = csv::column(table, "dy");
  const auto dz = csv::column(table, "dz");
  const auto landing = csv::column(table, "landing");
  const auto inBounds = csv::column(table, "in_bounds");
  const auto cleared = csv::column(table, "cleared_net");
  const auto speed = csv::column(table, "speed");
  EpisodeLog log;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto line = table.lineNumbers[r];
    ServeRecord s;
    s.serveId = row[id];
    s.intercepted = flag(row[hit], line);
    const bool hasOffset = !row[dx].empty() || !row[dy].empty() || !row[dz].empty();
    if (s.intercepted) {
      s.impactOffset = Vec3(csv::toDouble(row[dx], line), csv::toDouble(row[dy], line), csv::toDouble(row[dz], line));
    } else if (hasOffset) {
      fail(ErrorKind::InvalidInput, fmt::format("line {}: offset given for a missed serve", line));
    }
    s.landed = flag(row[landing], line);
    s.inBounds = flag(row[inBounds], line);
    s.clearedNet = flag(row[cleared], line);
    s.speed = row[speed].empty() ? 0.0 : csv::toDouble(row[speed], line);
    log.push_back(std::move(s));
  }
  return log;
}

void writeEpisodeLogCsv(std::ostream& out, const EpisodeLog& log) {
  out << "serve_id,intercepted,dx,dy,dz,landing,in_bounds,cleared_net,speed\n";
  for (const auto& s : log) {
    out << s.serveId << ',' << (s.intercepted ? 1 : 0) << ',';
    if (s.impactOffset) {
      out << formatNumber(s.impactOffset->x()) << ',' << formatNumber(s.impactOffset->y()) << ','
          << formatNumber(s.impactOffset->z());
    } else {
      out << ",,";
    }
    out << ',' << (s.landed ? 1 : 0) << ',' << (s.inBounds ? 1 : 0) << ',' << (s.clearedNet ? 1 : 0)
        << ',' << formatNumber(s.speed) << '\n';
  }
}

std::vector<VecX> readObservationBatchCsv(std::istream& in) {
  const auto table = csv::read(in, false);
  std::vector<VecX> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (r == 0 && !row.empty()) {
      char* end = nullptr;
      std::strtod(row[0].c_str(), &end);
      if (end == row[0].c_str()) {
        continue;
      }
    }
    VecX v(static_cast<Eigen::Index>(row.size()));
    for (std::size_t i = 0; i < row.size(); ++i) {
      v[static_cast<Eigen::Index>(i)] = csv::toDouble(row[i], table.lineNumbers[r]);
    }
    if (!out.empty()) {
      require(v.size() == out.front().size(), "observation rows differ in length");
    }
    out.push_back(std::move(v));
  }
  return out;
}

} // namespace shuttlekit::io
