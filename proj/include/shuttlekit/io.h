#pragma once

#include "shuttlekit/amp.h"
#include "shuttlekit/estimator.h"
#include "shuttlekit/goal.h"
#include "shuttlekit/retarget.h"
#include "shuttlekit/reward.h"
#include "shuttlekit/scenario.h"
#include "shuttlekit/shuttle.h"
#include "shuttlekit/spatial.h"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace shuttlekit::io {

using Json = nlohmann::json;

/// Formats with 9 significant digits, the precision of every file output.
std::string formatNumber(double v);

/// Rounds to 9 significant digits so JSON dumps carry the same precision.
/// Non-finite values become null.
Json number(double v);

Json readJsonFile(const std::filesystem::path& path);
void writeTextFile(const std::filesystem::path& path, const std::string& text);
/// Pretty-printed with a trailing newline.
void writeJsonFile(const std::filesystem::path& path, const Json& j);

Vec3 vec3(const Json& j, const char* what);
Quat quatWxyz(const Json& j, const char* what);
Json toJson(const Vec3& v);
Json toJson(const Quat& q);

// Config sections. Missing keys keep the struct defaults.
KinematicChain chainFromJson(const Json& j);
Json toJson(const KinematicChain& chain);
ShuttleParams shuttleParamsFromJson(const Json& j);
CourtGeometry courtFromJson(const Json& j);
NoiseConfig noiseFromJson(const Json& j);
HitCriteria hitCriteriaFromJson(const Json& j);
RewardConfig rewardConfigFromJson(const Json& j);
TerminationConfig terminationFromJson(const Json& j);
AmpConfig ampConfigFromJson(const Json& j);
VolumeConfig volumeConfigFromJson(const Json& j);
ServeConfig serveConfigFromJson(const Json& j);
IbrWeights ibrWeightsFromJson(const Json& j);
ShuttleState shuttleStateFromJson(const Json& j);

/// {layers:[{w:[[..]], b:[..]}]}
Mlp mlpFromJson(const Json& j);
Json toJson(const Mlp& net);

/// {frames:[{t, root_pos, root_quat, root_lin, root_ang, q, contacts?}],
///  annotations:{hit_times, recovery_times}}
ReferenceClip clipFromJson(const Json& j);
Json toJson(const ReferenceClip& clip);

/// Keypoint problem file: chain, keypoint bindings, segments, weights,
/// spheres and frames {t, keypoints:{name:[x,y,z]}, racket_quat[4]}.
struct RetargetJob {
  RetargetProblem problem;
  std::string racketFrame;
  std::vector<std::string> feetFrames;
  double contactThreshold = 0.03;
};

/// `baseDir` resolves a chain given as a file path.
RetargetJob retargetJobFromJson(const Json& j, const std::filesystem::path& baseDir);

/// Solution as a reference clip; velocities by finite differences between frames.
ReferenceClip solutionToClip(
    const RetargetSolution& sol,
    const std::vector<RetargetFrame>& frames,
    const std::vector<std::vector<int>>& contacts);

std::vector<DatasetStrike> datasetFromJson(const Json& j);
/// [{pos:[x,y,z], t, src}]
Json toJson(const StrikeManifold& manifold);
StrikeManifold manifoldFromJson(const Json& j);

/// Header `t,x,y,z,vx,vy,vz`.
void writeTrajectoryCsv(std::ostream& out, const Trajectory& traj);
Trajectory readTrajectoryCsv(std::istream& in);

struct Measurement {
  double t = 0.0;
  Vec3 position = Vec3::Zero();
};

/// Header `t,x,y,z`; rows must be strictly increasing in t.
std::vector<Measurement> readMeasurementsCsv(std::istream& in);
void writeMeasurementsCsv(std::ostream& out, const std::vector<Measurement>& m);

struct FilterLogRow {
  double t = 0.0;
  Vec6 mean = Vec6::Zero();
  double nis = 0.0;
};

/// Header `t,mx,my,mz,mvx,mvy,mvz,nis`.
void writeFilterLogCsv(std::ostream& out, const std::vector<FilterLogRow>& rows);

/// Header `serve_id,intercepted,dx,dy,dz,landing,in_bounds,cleared_net,speed`.
/// Offsets are blank for serves that were not intercepted.
EpisodeLog readEpisodeLogCsv(std::istream& in);
void writeEpisodeLogCsv(std::ostream& out, const EpisodeLog& log);

/// One observation per row, no header (a non-numeric first line is skipped).
std::vector<VecX> readObservationBatchCsv(std::istream& in);

} // namespace shuttlekit::io
