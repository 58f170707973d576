#include "commands.h"

#include "shuttlekit/error.h"
#include "shuttlekit/estimator.h"
#include "shuttlekit/io.h"
#include "shuttlekit/retarget.h"
#include "shuttlekit/scenario.h"
#include "shuttlekit/shuttle.h"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

namespace shuttlekit::cli {

namespace fs = std::filesystem;
using io::Json;

namespace {

/// Top-level config; each section is inline JSON or a path relative to the
/// config file.
struct RunConfig {
  Json root = Json::object();
  fs::path baseDir = ".";
  std::uint64_t seed = 0;
  fs::path outDir = ".";

  [[nodiscard]] Json section(const char* name) const {
    if (!root.contains(name) || root.at(name).is_null()) {
      return Json::object();
    }
    const Json& s = root.at(name);
    if (s.is_string()) {
      return io::readJsonFile(resolve(s.get<std::string>()));
    }
    return s;
  }

  [[nodiscard]] fs::path resolve(const std::string& path) const {
    const fs::path p(path);
    return p.is_absolute() ? p : baseDir / p;
  }

  [[nodiscard]] fs::path output(const char* name) const {
    return outDir / name;
  }
};

/// Subcommand input selected on the command line, else from the config section.
fs::path inputPath(const RunConfig& cfg, const std::string& flag, const Json& section, const char* key) {
  if (!flag.empty()) {
    return fs::path(flag);
  }
  if (section.contains(key) && section.at(key).is_string()) {
    return cfg.resolve(section.at(key).get<std::string>());
  }
  fail(ErrorKind::InvalidInput, fmt::format("no input given (pass a path or set '{}' in the config)", key));
}

template <typename T>
T value(const Json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) {
    return fallback;
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::InvalidInput, fmt::format("field '{}': {}", key, e.what()));
  }
}

std::ifstream openInput(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    fail(ErrorKind::Io, fmt::format("cannot open '{}'", path.string()));
  }
  return in;
}

int simulateCommand(const RunConfig& cfg, const std::string& stateFile) {
  const ShuttleParams params = io::shuttleParamsFromJson(cfg.section("shuttle"));
  const CourtGeometry court = io::courtFromJson(cfg.section("court"));
  const Json sim = cfg.section("simulate");
  const double dt = value(sim, "dt", kDefaultPhysicsDt);
  const double tMax = value(sim, "t_max", 10.0);
  require(dt > 0.0 && tMax > 0.0, "simulate.dt and simulate.t_max must be > 0");

  Json stateJson;
  if (!stateFile.empty()) {
    stateJson = io::readJsonFile(stateFile);
  } else if (sim.contains("state")) {
    stateJson = sim.at("state").is_string() ? io::readJsonFile(cfg.resolve(sim.at("state").get<std::string>()))
                                            : sim.at("state");
  } else {
    fail(ErrorKind::InvalidInput, "no initial state (pass --state or set simulate.state)");
  }
  const ShuttleState s0 = io::shuttleStateFromJson(stateJson);

  spdlog::info("simulating from z = {:.3f} m for at most {} s", s0.position.z(), tMax);
  const FlightResult flight = simulateToGround(s0, params, dt, tMax);

  std::ostringstream csv;
  io::writeTrajectoryCsv(csv, flight.trajectory);
  io::writeTextFile(cfg.output("trajectory.csv"), csv.str());

  Json landing = {{"landed", flight.landing.has_value()}};
  if (flight.landing) {
    const CourtCheck check = landsInCourt(flight.landing->point, flight.trajectory, court);
    landing["time"] = io::number(flight.landing->time);
    landing["point"] = io::toJson(flight.landing->point);
    landing["in_bounds"] = check.inBounds;
    landing["cleared_net"] = check.clearedNet;
    const auto crossing = netCrossingHeight(flight.trajectory, court.netX);
    landing["net_crossing_height"] = crossing ? io::number(*crossing) : Json(nullptr);
  }
  io::writeJsonFile(cfg.output("landing.json"), landing);

  if (!flight.landing) {
    spdlog::error("shuttle still airborne after {} s", tMax);
    return kExitTimeout;
  }
  spdlog::info("landed at t = {:.4f} s", flight.landing->time);
  return kExitOk;
}

int trackCommand(const RunConfig& cfg, const std::string& measFile) {
  const ShuttleParams params = io::shuttleParamsFromJson(cfg.section("shuttle"));
  NoiseConfig noise = io::noiseFromJson(cfg.section("noise"));
  const HitCriteria criteria = io::hitCriteriaFromJson(cfg.section("hit"));
  const Json track = cfg.section("track");
  const double physicsDt = value(track, "dt", kDefaultPhysicsDt);
  const double horizon = value(track, "horizon", 2.0);
  require(physicsDt > 0.0 && horizon > 0.0, "track.dt and track.horizon must be > 0");

  auto in = openInput(inputPath(cfg, measFile, track, "measurements"));
  const auto meas = io::readMeasurementsCsv(in);
  require(meas.size() >= 2, "at least two measurements are needed to start the filter");

  const fs::path targetPath = cfg.output("target.json");
  std::vector<io::FilterLogRow> log;
  EkfBelief belief = initializeFromMeasurements(meas[0].position, meas[1].position, meas[1].t - meas[0].t, noise);
  log.push_back({meas[1].t - noise.latency, belief.mean, 0.0});
  for (std::size_t k = 2; k < meas.size(); ++k) {
    // Long gaps are bridged in steps no longer than the physics step.
    const double gap = meas[k].t - meas[k - 1].t;
    const int steps = std::max(1, static_cast<int>(std::ceil(gap / physicsDt - 1e-9)));
    for (int i = 0; i < steps; ++i) {
      belief = ekfPredict(belief, params, noise, gap / steps);
    }
    const UpdateResult u = ekfUpdate(belief, meas[k].position, noise);
    belief = u.belief;
    log.push_back({meas[k].t - noise.latency, belief.mean, u.nis});
  }
  const double tNow = meas.back().t - noise.latency;

  std::ostringstream csv;
  io::writeFilterLogCsv(csv, log);
  io::writeTextFile(cfg.output("filter_log.csv"), csv.str());

  const Trajectory predicted = predictTrajectory(belief, params, physicsDt, horizon, tNow);
  const auto hit = selectHitPoint(predicted, criteria);
  if (!hit) {
    io::writeTextFile(targetPath, "");
    spdlog::error("no feasible hit point within {} s", horizon);
    return kExitInfeasible;
  }

  // Face normal (local +x) turned against the incoming ball.
  const Quat racket = hit->velocity.norm() > 1e-9 ? Quat::FromTwoVectors(Vec3::UnitX(), -hit->velocity)
                                                  : Quat::Identity();
  Json target = {
      {"hit_time", io::number(hit->time)},
      {"time_to_hit", io::number(hit->time - tNow)},
      {"hit_position", io::toJson(hit->position)},
      {"hit_velocity", io::toJson(hit->velocity)},
      {"racket_pose", {{"position", io::toJson(hit->position)}, {"orientation", io::toJson(racket)}}},
  };
  io::writeJsonFile(targetPath, target);
  spdlog::info("hit point at t = {:.4f} s, z = {:.3f} m", hit->time, hit->position.z());
  return kExitOk;
}

int retargetCommand(const RunConfig& cfg, const std::string& problemFile) {
  const Json section = cfg.section("retarget");
  fs::path path;
  Json problemJson;
  if (!problemFile.empty() || section.contains("problem")) {
    path = inputPath(cfg, problemFile, section, "problem");
    problemJson = io::readJsonFile(path);
  } else {
    fail(ErrorKind::InvalidInput, "no retarget problem (pass a problem path or set retarget.problem)");
  }
  const io::RetargetJob job = io::retargetJobFromJson(problemJson, path.parent_path());

  spdlog::info(
      "retargeting {} frames onto {} joints",
      job.problem.frames.size(),
      job.problem.chain.joints().size());
  const RetargetResult result = solveRetarget(job.problem, defaultInitialGuess(job.problem));

  RetargetSolution sol = result.solution;
  std::vector<std::vector<int>> contacts;
  if (!job.feetFrames.empty()) {
    sol = alignToGround(sol, job.problem.chain, job.feetFrames);
    contacts = extractContacts(sol, job.problem.chain, job.feetFrames, job.contactThreshold);
  }
  const ReferenceClip clip = io::solutionToClip(sol, job.problem.frames, contacts);
  Json clipJson = io::toJson(clip);
  if (problemJson.contains("annotations")) {
    clipJson["annotations"] = problemJson.at("annotations");
  }
  io::writeJsonFile(cfg.output("clip.json"), clipJson);

  Json terms = Json::object();
  for (const CostTerm term : kAllCostTerms) {
    terms[toString(term)] = io::number(result.finalCosts.at(term));
  }
  Json scales = Json::array();
  for (Eigen::Index i = 0; i < result.solution.localScales.size(); ++i) {
    scales.push_back(io::number(result.solution.localScales[i]));
  }
  const Json costs = {
      {"terms", terms},
      {"total", io::number(totalCost(result.finalCosts))},
      {"iterations", result.iterations},
      {"global_scale", io::number(result.solution.globalScale)},
      {"local_scales", scales},
  };
  io::writeJsonFile(cfg.output("costs.json"), costs);
  spdlog::info("final cost {:.3e} after {} iterations", totalCost(result.finalCosts), result.iterations);
  return kExitOk;
}

int expandCommand(
    const RunConfig& cfg,
    const std::string& datasetFile,
    const std::string& mode,
    std::optional<std::size_t> count) {
  const Json section = cfg.section("expand");
  ExpansionConfig ec;
  ec.volumes = io::volumeConfigFromJson(cfg.section("volumes"));
  ec.radius = value(section, "radius", ec.radius);
  ec.timeJitter = value(section, "time_jitter", ec.timeJitter);
  ec.count = count.value_or(value(section, "count", ec.count));
  ec.maxAttemptsPerPoint = value(section, "max_attempts", ec.maxAttemptsPerPoint);
  ec.mode = volumeModeFromString(mode.empty() ? value<std::string>(section, "mode", "easy") : mode);

  const auto dataset = io::datasetFromJson(io::readJsonFile(inputPath(cfg, datasetFile, section, "dataset")));
  spdlog::info("expanding {} strikes into {} {} targets", dataset.size(), ec.count, toString(ec.mode));
  const StrikeManifold manifold = expandManifold(dataset, ec, cfg.seed);
  io::writeJsonFile(cfg.output("manifold.json"), io::toJson(manifold));
  return kExitOk;
}

int scoreCommand(const RunConfig& cfg, const std::vector<std::string>& logFiles) {
  const Json section = cfg.section("score");
  const IbrWeights weights = io::ibrWeightsFromJson(cfg.section("ibr"));
  std::vector<fs::path> paths;
  for (const auto& f : logFiles) {
    paths.emplace_back(f);
  }
  if (paths.empty() && section.contains("logs")) {
    for (const auto& p : section.at("logs")) {
      paths.push_back(cfg.resolve(p.get<std::string>()));
    }
  }
  require(!paths.empty(), "no episode logs (pass log paths or set score.logs)");

  std::vector<EpisodeLog> logs;
  for (const auto& p : paths) {
    auto in = openInput(p);
    logs.push_back(io::readEpisodeLogCsv(in));
  }
  const EpisodeMetrics m = evaluateEpisodes(logs, weights);
  const Json metrics = {
      {"SR", io::number(m.successRate)},
      {"MSE", io::number(m.meanSquaredError)},
      {"IBR", io::number(m.inBoundsReturn)},
      {"serves", m.serves},
      {"intercepted", m.intercepted},
  };
  io::writeJsonFile(cfg.output("metrics.json"), metrics);
  return kExitOk;
}

void configureLogging() {
  auto logger = spdlog::get("shuttlekit");
  if (!logger) {
    logger = spdlog::stderr_color_mt("shuttlekit");
    spdlog::set_default_logger(logger);
  }
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("SHUTTLEKIT_LOG")) {
    spdlog::set_level(spdlog::level::from_str(env));
  }
}

} // namespace

int run(const std::vector<std::string>& args) {
  configureLogging();

  CLI::App app{"Shuttlecock flight, tracking, retargeting and scenario tools"};
  app.require_subcommand(1);
  std::string configFile;
  std::string outDir = ".";
  std::uint64_t seed = 0;
  app.add_option("--config", configFile, "JSON config; sections inline or as relative paths");
  app.add_option("--seed", seed, "RNG seed");
  app.add_option("--out", outDir, "Output directory");

  std::string stateFile;
  auto* simulate = app.add_subcommand("simulate", "Integrate a flight until landing");
  simulate->add_option("--state", stateFile, "Initial ShuttleState JSON");

  std::string measFile;
  auto* track = app.add_subcommand("track", "EKF over measurements and hit-point selection");
  track->add_option("measurements", measFile, "Measurement CSV (t,x,y,z)");

  std::string problemFile;
  auto* retarget = app.add_subcommand("retarget", "Keypoint motion retargeting");
  retarget->add_option("problem", problemFile, "Retarget problem JSON");

  std::string datasetFile;
  std::string mode;
  std::optional<std::size_t> count;
  auto* expand = app.add_subcommand("expand", "Densify strike points into a target manifold");
  expand->add_option("dataset", datasetFile, "Strike dataset JSON");
  expand->add_option("--mode", mode, "Target volume")->check(CLI::IsMember({"easy", "hard"}));
  expand->add_option("-n,--count", count, "Number of targets");

  std::vector<std::string> logFiles;
  auto* score = app.add_subcommand("score", "SR / MSE / IBR over episode logs");
  score->add_option("logs", logFiles, "Episode log CSVs");

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    RunConfig cfg;
    cfg.seed = seed;
    cfg.outDir = outDir;
    if (!configFile.empty()) {
      cfg.root = io::readJsonFile(configFile);
      require(cfg.root.is_object(), "config must be a JSON object");
      cfg.baseDir = fs::path(configFile).parent_path();
    }
    fs::create_directories(cfg.outDir);

    if (simulate->parsed()) {
      return simulateCommand(cfg, stateFile);
    }
    if (track->parsed()) {
      return trackCommand(cfg, measFile);
    }
    if (retarget->parsed()) {
      return retargetCommand(cfg, problemFile);
    }
    if (expand->parsed()) {
      return expandCommand(cfg, datasetFile, mode, count);
    }
    return scoreCommand(cfg, logFiles);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return e.kind() == ErrorKind::Infeasible ? kExitInfeasible : kExitInput;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitInput;
  }
}

} // namespace shuttlekit::cli
