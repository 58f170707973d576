#pragma once

#include "shuttlekit/goal.h"
#include "shuttlekit/spatial.h"

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace shuttlekit {

struct AmpConfig {
  std::size_t historyLength = 5;
  double gradientPenalty = 5.0; ///< w_gp
  std::vector<std::string> endEffectors{"left_ankle", "right_ankle", "left_hand", "right_hand"};

  void validate() const;
};

/// Length of one frame: v_base(3) + q(n) + h_base(1) + g_proj(3) + 6 per end effector.
std::size_t ampFrameLength(std::size_t jointCount, std::size_t endEffectorCount);

/// Discriminator features of one frame, all in the base frame:
/// [v_base, q, h_base, g_proj, p_ee..., v_ee...]. End-effector velocities are
/// world-frame linear velocities rotated into the base frame.
VecX frameFeatures(
    const RobotState& state,
    const std::map<std::string, Pose>& eePoses,
    const std::map<std::string, Vec3>& eeVelocities,
    const KinematicChain& chain,
    const AmpConfig& cfg);

/// Concatenates the newest H frames, newest first. `buffer` is ordered
/// oldest to newest; if it holds fewer than H frames the oldest is repeated.
VecX assembleHistory(std::span<const VecX> buffer, const AmpConfig& cfg);

struct DenseLayer {
  MatX weight; ///< out x in
  VecX bias;
};

/// Gradients with the same shapes as the network parameters.
struct MlpGradients {
  std::vector<MatX> weight;
  std::vector<VecX> bias;

  [[nodiscard]] VecX flatten() const;
};

/// tanh hidden layers and a scalar linear output.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<DenseLayer> layers);

  /// Xavier-uniform weights, zero biases. `sizes` runs input to output and must end in 1.
  static Mlp random(const std::vector<std::size_t>& sizes, std::uint64_t seed);

  [[nodiscard]] const std::vector<DenseLayer>& layers() const {
    return layers_;
  }
  [[nodiscard]] std::size_t inputSize() const;
  [[nodiscard]] std::size_t parameterCount() const;

  [[nodiscard]] double forward(const VecX& x) const;
  [[nodiscard]] VecX gradientWrtInput(const VecX& x) const;

  [[nodiscard]] VecX parameters() const;
  void setParameters(const VecX& flat);

  /// Applies params -= rate * grads.
  void descend(const MlpGradients& grads, double rate);

 private:
  void checkInput(const VecX& x) const;

  std::vector<DenseLayer> layers_;
};

struct DiscriminatorLoss {
  double loss = 0.0;
  double realTerm = 0.0;
  double fakeTerm = 0.0;
  double penaltyTerm = 0.0;
  MlpGradients grads;
};

/// LSGAN discriminator loss with a gradient penalty on reference samples:
/// mean_real (D-1)^2 + mean_fake (D+1)^2 + (w_gp/2) mean_real |dD/do|^2,
/// with exact parameter gradients of all three terms.
DiscriminatorLoss discriminatorLoss(
    const Mlp& net,
    std::span<const VecX> real,
    std::span<const VecX> fake,
    const AmpConfig& cfg);

} // namespace shuttlekit
