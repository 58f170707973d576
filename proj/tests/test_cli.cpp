#include "fixtures.h"

#include "commands.h"

#include <doctest.h>

#include <algorithm>
#include <cstdlib>

using namespace shuttlekit;
namespace fs = std::filesystem;
using fs::path;
using io::Json;

namespace {

struct Workspace {
  path dir;
  path config;
  path out;

  Workspace(const std::string& name, const Json& cfg) : dir(fixture::scratchDir(name)) {
    ::setenv("SHUTTLEKIT_LOG", "off", 1);
    config = dir / "config.json";
    out = dir / "out";
    fixture::writeFile(config, cfg.dump(2));
  }

  int run(std::vector<std::string> args) const {
    std::vector<std::string> full{"--config", config.string(), "--out", out.string()};
    full.insert(full.end(), args.begin(), args.end());
    return cli::run(full);
  }

  [[nodiscard]] Json json(const char* name) const {
    return io::readJsonFile(out / name);
  }
};

std::size_t lineCount(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

} // namespace

TEST_CASE("cli simulate") {
  Json cfg = fixture::config(1e-4);
  Workspace ws("cli_simulate", cfg);
  fixture::writeFile(ws.dir / "drop.json", R"({"position": [0, 0, 2], "velocity": [0, 0, 0]})");
  CHECK(ws.run({"simulate", "--state", (ws.dir / "drop.json").string()}) == cli::kExitOk);
  CHECK(lineCount(fixture::readFile(ws.out / "trajectory.csv")) >= 2);
  const Json landing = ws.json("landing.json");
  CHECK(landing.at("landed").get<bool>());
  CHECK(landing.at("time").get<double>() > std::sqrt(2 * 2.0 / fixture::kGravity));
  CHECK(std::abs(landing.at("point")[2].get<double>()) < 1e-9);

  cfg["simulate"]["t_max"] = 0.1;
  Workspace slow("cli_timeout", cfg);
  fixture::writeFile(slow.dir / "drop.json", R"({"position": [0, 0, 2], "velocity": [0, 0, 0]})");
  CHECK(slow.run({"simulate", "--state", (slow.dir / "drop.json").string()}) == cli::kExitTimeout);
  CHECK_FALSE(slow.json("landing.json").at("landed").get<bool>());

  CHECK(slow.run({"simulate"}) == cli::kExitInput);
  cfg["shuttle"]["mass"] = -1.0;
  Workspace bad("cli_bad_mass", cfg);
  fixture::writeFile(bad.dir / "drop.json", R"({"position": [0, 0, 2], "velocity": [0, 0, 0]})");
  CHECK(bad.run({"simulate", "--state", (bad.dir / "drop.json").string()}) == cli::kExitInput);
}

TEST_CASE("cli track") {
  const ShuttleState launch = fixture::serveTo(Vec3(0.4, 0.3, 1.2), 1.0);
  std::mt19937_64 rng(1);
  const auto meas = fixture::observe(launch, 0.6, 0.0, rng);
  Json cfg = fixture::config(1e-4);
  Workspace ws("cli_track", cfg);
  const path csv = ws.dir / "meas.csv";
  fixture::writeFile(csv, fixture::measurementsCsv(meas));
  REQUIRE(ws.run({"track", csv.string()}) == cli::kExitOk);

  const Json target = ws.json("target.json");
  const double hitTime = target.at("hit_time").get<double>();
  const Vec3 hit = io::vec3(target.at("hit_position"), "hit_position");
  const Vec3 truth = fixture::truePosition(launch, static_cast<int>(std::lround(hitTime / fixture::kDt)));
  CHECK((hit - truth).norm() < 0.01);
  CHECK(hit.z() <= 1.3);
  CHECK(hit.z() >= 1.0);
  CHECK(std::abs(target.at("time_to_hit").get<double>() - (hitTime - 0.6)) < 1e-9);
  const Quat racket = io::quatWxyz(target.at("racket_pose").at("orientation"), "orientation");
  const Vec3 velocity = io::vec3(target.at("hit_velocity"), "hit_velocity");
  CHECK((racket * Vec3::UnitX()).dot(velocity.normalized()) < -0.999);
  CHECK(lineCount(fixture::readFile(ws.out / "filter_log.csv")) == meas.size());

  fixture::writeFile(csv, "t,x,y,z\n");
  CHECK(ws.run({"track", csv.string()}) == cli::kExitInput);
  fixture::writeFile(csv, "");
  CHECK(ws.run({"track", csv.string()}) == cli::kExitInput);
  CHECK(ws.run({"track", (ws.dir / "missing.csv").string()}) == cli::kExitInput);

  cfg["hit"]["height_band"] = {3.0, 3.5};
  cfg["hit"]["reachable_center"] = {0.4, 0.0, 3.2};
  Workspace high("cli_track_high", cfg);
  fixture::writeFile(high.dir / "meas.csv", fixture::measurementsCsv(meas));
  CHECK(high.run({"track", (high.dir / "meas.csv").string()}) == cli::kExitInfeasible);
  CHECK(fs::exists(high.out / "target.json"));
  CHECK(fixture::readFile(high.out / "target.json").empty());
}

TEST_CASE("cli retarget") {
  Workspace ws("cli_retarget", fixture::config(1e-4));
  const Json problem = fixture::armProblemJson();
  fixture::writeFile(ws.dir / "problem.json", problem.dump());
  REQUIRE(ws.run({"retarget", (ws.dir / "problem.json").string()}) == cli::kExitOk);
  const Json costs = ws.json("costs.json");
  CHECK(costs.at("terms").size() == 6);
  for (const char* term : {"global", "local", "ee_rotation", "collision", "limit", "smooth"}) {
    CHECK(costs.at("terms").contains(term));
  }
  CHECK(costs.at("total").get<double>() < 1e-8);
  const Json clip = ws.json("clip.json");
  CHECK(clip.at("frames").size() == 4);
  CHECK(clip.at("annotations").at("hit_times")[0].get<double>() == 0.04);
  CHECK_NOTHROW(io::clipFromJson(clip));

  Json broken = problem;
  broken["keypoint_map"].erase("tip");
  fixture::writeFile(ws.dir / "broken.json", broken.dump());
  CHECK(ws.run({"retarget", (ws.dir / "broken.json").string()}) == cli::kExitInput);
}

TEST_CASE("cli expand") {
  Json cfg = fixture::config(1e-4);
  cfg["expand"]["dataset"] = "dataset.json";
  Workspace ws("cli_expand", cfg);
  fixture::writeFile(ws.dir / "dataset.json", fixture::strikeDataset().dump());
  REQUIRE(ws.run({"--seed", "5", "expand", "--mode", "hard", "-n", "300"}) == cli::kExitOk);
  const StrikeManifold m = io::manifoldFromJson(ws.json("manifold.json"));
  CHECK(m.size() == 300);
  const AxisBox box = VolumeConfig().box(VolumeMode::Hard);
  for (const auto& s : m) {
    CHECK(box.contains(s.position));
  }
  REQUIRE(ws.run({"expand"}) == cli::kExitOk);
  CHECK(ws.json("manifold.json").size() == 200);
  CHECK(ws.run({"expand", "--mode", "medium"}) == cli::kExitInput);

  cfg["volumes"] = {{"center", {4.0, 4.0, 4.0}}};
  cfg["expand"]["max_attempts"] = 50;
  Workspace nowhere("cli_expand_empty", cfg);
  fixture::writeFile(nowhere.dir / "dataset.json", fixture::strikeDataset().dump());
  CHECK(nowhere.run({"expand"}) == cli::kExitInfeasible);
}

TEST_CASE("cli score") {
  Workspace ws("cli_score", fixture::config(1e-4));
  fixture::writeFile(ws.dir / "log.csv", fixture::episodeCsv());
  REQUIRE(ws.run({"score", (ws.dir / "log.csv").string()}) == cli::kExitOk);
  const Json m = ws.json("metrics.json");
  CHECK(m.at("SR").get<double>() == 0.75);
  CHECK(m.at("MSE").get<double>() == 0.0);
  CHECK(m.at("IBR").get<double>() == 0.75);
  CHECK(m.at("serves").get<int>() == 4);
  CHECK(ws.run({"score"}) == cli::kExitInput);
}

TEST_CASE("cli argument handling") {
  ::setenv("SHUTTLEKIT_LOG", "off", 1);
  CHECK(cli::run({}) == cli::kExitInput);
  CHECK(cli::run({"launch"}) == cli::kExitInput);
  CHECK(cli::run({"--config", "/nonexistent/config.json", "score"}) == cli::kExitInput);
}
