#include "shuttlekit/amp.h"

#include "shuttlekit/error.h"

#include <cmath>
#include <fmt/format.h>
#include <random>

namespace shuttlekit {

void AmpConfig::validate() const {
  require(historyLength >= 1, "AMP history length must be >= 1");
  require(std::isfinite(gradientPenalty) && gradientPenalty >= 0.0, "gradient penalty weight must be >= 0");
}

std::size_t ampFrameLength(std::size_t jointCount, std::size_t endEffectorCount) {
  return 7 + jointCount + 6 * endEffectorCount;
}

VecX frameFeatures(
    const RobotState& state,
    const std::map<std::string, Pose>& eePoses,
    const std::map<std::string, Vec3>& eeVelocities,
    const KinematicChain& chain,
    const AmpConfig& cfg) {
  const auto n = static_cast<Eigen::Index>(chain.jointCount());
  require(state.q.size() == n, "joint vector does not match the chain");
  const std::size_t e = cfg.endEffectors.size();
  VecX x(static_cast<Eigen::Index>(ampFrameLength(chain.jointCount(), e)));

  Eigen::Index at = 0;
  x.segment<3>(at) = toBaseFrame(state.rootTwist.linear, state.root, false);
  at += 3;
  x.segment(at, n) = state.q;
  at += n;
  x[at++] = state.baseHeight;
  x.segment<3>(at) = state.projectedGravity;
  at += 3;
  for (const auto& name : cfg.endEffectors) {
    const auto it = eePoses.find(name);
    if (it == eePoses.end()) {
      fail(ErrorKind::InvalidInput, fmt::format("missing end-effector pose '{}'", name));
    }
    x.segment<3>(at) = toBaseFrame(it->second.position, state.root, true);
    at += 3;
  }
  for (const auto& name : cfg.endEffectors) {
    const auto it = eeVelocities.find(name);
    if (it == eeVelocities.end()) {
      fail(ErrorKind::InvalidInput, fmt::format("missing end-effector velocity '{}'", name));
    }
    x.segment<3>(at) = toBaseFrame(it->second, state.root, false);
    at += 3;
  }
  return x;
}

VecX assembleHistory(std::span<const VecX> buffer, const AmpConfig& cfg) {
  require(!buffer.empty(), "AMP frame buffer is empty");
  require(cfg.historyLength >= 1, "AMP history length must be >= 1");
  const Eigen::Index len = buffer.back().size();
  const auto h = static_cast<Eigen::Index>(cfg.historyLength);
  VecX out(len * h);
  const auto newest = static_cast<std::ptrdiff_t>(buffer.size()) - 1;
  for (Eigen::Index k = 0; k < h; ++k) {
    const auto idx = std::max<std::ptrdiff_t>(newest - k, 0);
    const VecX& frame = buffer[static_cast<std::size_t>(idx)];
    require(frame.size() == len, "AMP frames differ in length");
    out.segment(k * len, len) = frame;
  }
  return out;
}

VecX MlpGradients::flatten() const {
  Eigen::Index n = 0;
  for (std::size_t i = 0; i < weight.size(); ++i) {
    n += weight[i].size() + bias[i].size();
  }
  VecX out(n);
  Eigen::Index at = 0;
  for (std::size_t i = 0; i < weight.size(); ++i) {
    out.segment(at, weight[i].size()) = weight[i].reshaped();
    at += weight[i].size();
    out.segment(at, bias[i].size()) = bias[i];
    at += bias[i].size();
  }
  return out;
}

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  require(!layers_.empty(), "MLP needs at least one layer");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    require(l.weight.rows() == l.bias.size(), fmt::format("layer {} bias size mismatch", i));
    require(l.weight.rows() > 0 && l.weight.cols() > 0, fmt::format("layer {} is empty", i));
    if (i > 0) {
      require(
          l.weight.cols() == layers_[i - 1].weight.rows(),
          fmt::format("layer {} input size does not match layer {} output", i, i - 1));
    }
  }
  require(layers_.back().weight.rows() == 1, "MLP output layer must be scalar");
}

Mlp Mlp::random(const std::vector<std::size_t>& sizes, std::uint64_t seed) {
  require(sizes.size() >= 2, "MLP needs input and output sizes");
  std::mt19937_64 rng(seed);
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    const auto in = static_cast<Eigen::Index>(sizes[i]);
    const auto out = static_cast<Eigen::Index>(sizes[i + 1]);
    const double a = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> u(-a, a);
    DenseLayer l;
    l.weight = MatX::NullaryExpr(out, in, [&]() { return u(rng); });
    l.bias = VecX::Zero(out);
    layers.push_back(std::move(l));
  }
  return Mlp(std::move(layers));
}

std::size_t Mlp::inputSize() const {
  return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.front().weight.cols());
}

std::size_t Mlp::parameterCount() const {
  std::size_t n = 0;
  for (const auto& l : layers_) {
    n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  }
  return n;
}

void Mlp::checkInput(const VecX& x) const {
  require(!layers_.empty(), "MLP has no layers");
  if (static_cast<std::size_t>(x.size()) != inputSize()) {
    fail(
        ErrorKind::InvalidInput,
        fmt::format("discriminator input has {} entries, expected {}", x.size(), inputSize()));
  }
}

namespace {

// activations[i] is the input to layer i; activations[0] is the observation.
struct ForwardCache {
  std::vector<VecX> activations;
  double output = 0.0;
};

ForwardCache runForward(const std::vector<DenseLayer>& layers, const VecX& x) {
  ForwardCache c;
  c.activations.reserve(layers.size());
  c.activations.push_back(x);
  for (std::size_t i = 0; i + 1 < layers.size(); ++i) {
    const auto& l = layers[i];
    c.activations.emplace_back((l.weight * c.activations.back() + l.bias).array().tanh().matrix());
  }
  const auto& last = layers.back();
  c.output = (last.weight * c.activations.back() + last.bias)(0);
  return c;
}

// upstream[i] is dD/dz_i, the gradient at layer i's pre-activation.
std::vector<VecX> runInputBackward(const std::vector<DenseLayer>& layers, const ForwardCache& c) {
  const std::size_t n = layers.size();
  std::vector<VecX> upstream(n);
  upstream[n - 1] = VecX::Ones(1);
  for (std::size_t i = n - 1; i > 0; --i) {
    const VecX& a = c.activations[i];
    const VecX u = layers[i].weight.transpose() * upstream[i];
    upstream[i - 1] = u.cwiseProduct((1.0 - a.array().square()).matrix());
  }
  return upstream;
}

// Accumulates d(loss)/d(params) for one sample, where loss depends on the
// output D with sensitivity outputSeed and on dD/dx with sensitivity inputGradSeed.
void accumulateSample(
    const std::vector<DenseLayer>& layers,
    const ForwardCache& c,
    const std::vector<VecX>& upstream,
    double outputSeed,
    const VecX* inputGradSeed,
    MlpGradients& g) {
  const std::size_t n = layers.size();
  // Adjoints of the hidden activations collected from the penalty path.
  std::vector<VecX> actAdj(n);
  for (std::size_t i = 0; i < n; ++i) {
    actAdj[i] = VecX::Zero(c.activations[i].size());
  }

  if (inputGradSeed != nullptr) {
    // Reverse of the input-gradient pass: u_i = W_i^T g_i, g_{i-1} = u_i .* (1 - a_i^2).
    VecX uAdj = *inputGradSeed;
    for (std::size_t i = 0; i < n; ++i) {
      g.weight[i].noalias() += upstream[i] * uAdj.transpose();
      const VecX gAdj = layers[i].weight * uAdj;
      if (i + 1 == n) {
        break;
      }
      const VecX& a = c.activations[i + 1];
      const VecX u = layers[i + 1].weight.transpose() * upstream[i + 1];
      const VecX slope = (1.0 - a.array().square()).matrix();
      actAdj[i + 1] += (gAdj.cwiseProduct(u)).cwiseProduct(-2.0 * a);
      uAdj = gAdj.cwiseProduct(slope);
    }
  }

  VecX preAdj = VecX::Constant(1, outputSeed);
  for (std::size_t i = n; i-- > 0;) {
    g.weight[i].noalias() += preAdj * c.activations[i].transpose();
    g.bias[i] += preAdj;
    if (i == 0) {
      break;
    }
    const VecX& a = c.activations[i];
    const VecX aAdj = actAdj[i] + layers[i].weight.transpose() * preAdj;
    preAdj = aAdj.cwiseProduct((1.0 - a.array().square()).matrix());
  }
}

MlpGradients zeroGradients(const std::vector<DenseLayer>& layers) {
  MlpGradients g;
  for (const auto& l : layers) {
    g.weight.push_back(MatX::Zero(l.weight.rows(), l.weight.cols()));
    g.bias.push_back(VecX::Zero(l.bias.size()));
  }
  return g;
}

} // namespace

double Mlp::forward(const VecX& x) const {
  checkInput(x);
  return runForward(layers_, x).output;
}

VecX Mlp::gradientWrtInput(const VecX& x) const {
  checkInput(x);
  const auto cache = runForward(layers_, x);
  const auto upstream = runInputBackward(layers_, cache);
  return layers_.front().weight.transpose() * upstream.front();
}

VecX Mlp::parameters() const {
  MlpGradients shaped;
  for (const auto& l : layers_) {
    shaped.weight.push_back(l.weight);
    shaped.bias.push_back(l.bias);
  }
  return shaped.flatten();
}

void Mlp::setParameters(const VecX& flat) {
  require(static_cast<std::size_t>(flat.size()) == parameterCount(), "parameter vector size mismatch");
  Eigen::Index at = 0;
  for (auto& l : layers_) {
    l.weight.reshaped() = flat.segment(at, l.weight.size());
    at += l.weight.size();
    l.bias = flat.segment(at, l.bias.size());
    at += l.bias.size();
  }
}

void Mlp::descend(const MlpGradients& grads, double rate) {
  require(grads.weight.size() == layers_.size(), "gradient layer count mismatch");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i].weight -= rate * grads.weight[i];
    layers_[i].bias -= rate * grads.bias[i];
  }
}

DiscriminatorLoss discriminatorLoss(
    const Mlp& net,
    std::span<const VecX> real,
    std::span<const VecX> fake,
    const AmpConfig& cfg) {
  require(!real.empty(), "reference batch is empty");
  require(!fake.empty(), "policy batch is empty");
  cfg.validate();
  const auto& layers = net.layers();
  require(!layers.empty(), "MLP has no layers");

  DiscriminatorLoss out;
  out.grads = zeroGradients(layers);
  const double nReal = static_cast<double>(real.size());
  const double nFake = static_cast<double>(fake.size());

  for (const auto& o : real) {
    require(static_cast<std::size_t>(o.size()) == net.inputSize(), "reference sample size mismatch");
    const auto cache = runForward(layers, o);
    const auto upstream = runInputBackward(layers, cache);
    const VecX inputGrad = layers.front().weight.transpose() * upstream.front();
    const double d = cache.output;
    out.realTerm += (d - 1.0) * (d - 1.0) / nReal;
    out.penaltyTerm += 0.5 * cfg.gradientPenalty * inputGrad.squaredNorm() / nReal;
    const VecX penaltySeed = (cfg.gradientPenalty / nReal) * inputGrad;
    accumulateSample(layers, cache, upstream, 2.0 * (d - 1.0) / nReal, &penaltySeed, out.grads);
  }
  for (const auto& o : fake) {
    require(static_cast<std::size_t>(o.size()) == net.inputSize(), "policy sample size mismatch");
    const auto cache = runForward(layers, o);
    const double d = cache.output;
    out.fakeTerm += (d + 1.0) * (d + 1.0) / nFake;
    accumulateSample(layers, cache, {}, 2.0 * (d + 1.0) / nFake, nullptr, out.grads);
  }
  out.loss = out.realTerm + out.fakeTerm + out.penaltyTerm;
  return out;
}

} // namespace shuttlekit
