#include "oracles.h"

#include "shuttlekit/error.h"
#include "shuttlekit/estimator.h"

#include <doctest.h>

using namespace shuttlekit;

namespace {

ShuttleParams dragParams() {
  ShuttleParams p;
  p.dragCoeff = 1.1e-3;
  return p;
}

EkfBelief beliefAt(const Vec3& p, const Vec3& v, double sigma) {
  EkfBelief b;
  b.mean << p, v;
  b.covariance = Mat6::Identity() * sigma * sigma;
  return b;
}

ShuttleState at(const Vec3& p, const Vec3& v) {
  ShuttleState s;
  s.position = p;
  s.velocity = v;
  return s;
}

bool isSymmetricPsd(const Mat6& p) {
  const double scale = std::max(1.0, p.cwiseAbs().maxCoeff());
  if ((p - p.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    return false;
  }
  Eigen::SelfAdjointEigenSolver<Mat6> es(0.5 * (p + p.transpose()));
  return es.eigenvalues().minCoeff() >= -1e-9;
}

} // namespace

TEST_CASE("predict with zero covariance reproduces the flight model") {
  const ShuttleParams p = dragParams();
  const EkfBelief b = beliefAt(Vec3(1, 2, 3), Vec3(-8, 1, 4), 0.0);
  const EkfBelief next = ekfPredict(b, p, NoiseConfig(), 0.005);
  const ShuttleState s = step(b.state(), p, 0.005);
  CHECK((next.position() - s.position).norm() < 1e-9);
  CHECK((next.velocity() - s.velocity).norm() < 1e-9);
  CHECK(next.covariance.norm() == 0.0);
}

TEST_CASE("drag-free predict is the constant-velocity model") {
  const double dt = 0.01;
  const Mat6 f = stepJacobian(Vec3(3, 1, 2), ShuttleParams(), dt);
  Mat6 cv = Mat6::Identity();
  cv.topRightCorner<3, 3>() = Mat3::Identity() * dt;
  CHECK((f - cv).cwiseAbs().maxCoeff() < 1e-15);

  NoiseConfig n;
  n.accelPsd = 0.3;
  std::mt19937_64 rng(1);
  MatX a = MatX::Random(6, 6);
  EkfBelief b;
  b.covariance = a * a.transpose();
  const EkfBelief next = ekfPredict(b, ShuttleParams(), n, dt);
  Mat6 q = Mat6::Zero();
  for (int i = 0; i < 3; ++i) {
    q(i, i) = n.accelPsd * dt * dt * dt / 3.0;
    q(i, i + 3) = q(i + 3, i) = n.accelPsd * dt * dt / 2.0;
    q(i + 3, i + 3) = n.accelPsd * dt;
  }
  const Mat6 expected = cv * b.covariance * cv.transpose() + q;
  CHECK((next.covariance - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("step Jacobian matches central differences") {
  const ShuttleParams p = dragParams();
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec3 v = Vec3::Random() * 15;
    VecX x(6);
    x << Vec3::Random(), v;
    auto f = [&](const VecX& y) {
      const ShuttleState s = step(at(y.head<3>(), y.tail<3>()), p, 0.005);
      VecX out(6);
      out << s.position, s.velocity;
      return out;
    };
    const MatX numeric = oracle::centralJacobian(f, x, 1e-6);
    CHECK(oracle::relativeError(stepJacobian(v, p, 0.005), numeric, 1.0) < 1e-5);
  }
}

TEST_CASE("drift Jacobian matches central differences") {
  const ShuttleParams p = dragParams();
  const Vec3 v(4, -3, 7);
  auto f = [&](const VecX& y) {
    VecX out(6);
    out << y.tail<3>(), oracle::dragAccel(y.tail<3>(), p.mass, p.dragCoeff, p.gravity);
    return out;
  };
  VecX x(6);
  x << 0, 0, 0, v;
  CHECK(oracle::relativeError(driftJacobian(v, p), oracle::centralJacobian(f, x, 1e-6), 1.0) < 1e-6);
}

TEST_CASE("update closed forms") {
  NoiseConfig n;
  const EkfBelief b = beliefAt(Vec3(1, 2, 3), Vec3(4, 5, 6), 0.1);
  const UpdateResult same = ekfUpdate(b, b.position(), n);
  CHECK((same.belief.mean - b.mean).norm() < 1e-15);
  CHECK(same.belief.covariance.trace() < b.covariance.trace());
  CHECK(same.nis == 0.0);

  NoiseConfig wide;
  wide.measurementCov = n.measurementCov * 1e12;
  const UpdateResult none = ekfUpdate(b, b.position() + Vec3(0.5, -0.5, 0.2), wide);
  CHECK((none.belief.mean - b.mean).norm() < 1e-6);

  // Linear-Gaussian closed form for the update.
  const Vec3 z = b.position() + Vec3(0.01, 0.02, -0.01);
  const UpdateResult u = ekfUpdate(b, z, n);
  Eigen::Matrix<double, 3, 6> h = Eigen::Matrix<double, 3, 6>::Zero();
  h.leftCols<3>().setIdentity();
  const Mat3 s = h * b.covariance * h.transpose() + n.measurementCov;
  const Eigen::Matrix<double, 6, 3> k = b.covariance * h.transpose() * s.inverse();
  CHECK((u.belief.mean - (b.mean + k * (z - b.position()))).norm() < 1e-12);
  CHECK((u.innovationCov - s).norm() < 1e-15);
  const Vec3 r = z - b.position();
  CHECK(std::abs(u.nis - r.dot(s.inverse() * r)) < 1e-9);
  CHECK(isSymmetricPsd(u.belief.covariance));

  EkfBelief singular;
  NoiseConfig exact;
  exact.measurementCov.setZero();
  CHECK_THROWS_AS(ekfUpdate(singular, Vec3::Zero(), exact), Error);
}

TEST_CASE("repeated exact updates converge to a fixed point") {
  NoiseConfig n;
  n.measurementCov = Mat3::Identity() * 1e-12;
  EkfBelief b = beliefAt(Vec3(1, 2, 3), Vec3(4, 5, 6), 0.1);
  const Vec3 z(1.05, 1.98, 3.01);
  Vec6 prev = b.mean;
  double lastShift = 1.0;
  for (int i = 0; i < 20; ++i) {
    b = ekfUpdate(b, z, n).belief;
    lastShift = (b.mean - prev).norm();
    prev = b.mean;
  }
  CHECK(lastShift < 1e-12);
  CHECK((b.position() - z).norm() < 1e-9);
}

TEST_CASE("checkCovariance") {
  Mat6 p = Mat6::Identity();
  CHECK_NOTHROW(checkCovariance(p, "test"));
  p(0, 1) = 0.5;
  CHECK_THROWS_AS(checkCovariance(p, "test"), Error);
  p = Mat6::Identity();
  p(2, 2) = -1e-3;
  try {
    checkCovariance(p, "test");
    FAIL("expected NumericalFailure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NumericalFailure);
  }
}

TEST_CASE("noiseless tracking converges") {
  const ShuttleParams p = dragParams();
  NoiseConfig n;
  n.measurementCov = Mat3::Identity() * 1e-6;
  const double dt = 0.005;
  ShuttleState truth = at(Vec3(7, 0.3, 2), Vec3(-14, -0.5, 5));
  std::vector<Vec3> zs{truth.position};
  for (int i = 0; i < 51; ++i) {
    truth = step(truth, p, dt);
    zs.push_back(truth.position);
  }
  EkfBelief b = initializeFromMeasurements(zs[0], zs[1], dt, n);
  for (std::size_t k = 2; k < zs.size(); ++k) {
    b = ekfPredict(b, p, n, dt);
    REQUIRE(isSymmetricPsd(b.covariance));
    b = ekfUpdate(b, zs[k], n).belief;
    REQUIRE(isSymmetricPsd(b.covariance));
  }
  CHECK((b.position() - truth.position).norm() < 1e-3);
}

TEST_CASE("NIS is consistent with the chi-square mean") {
  const ShuttleParams p = dragParams();
  NoiseConfig n;
  const double sigma = 0.005;
  n.measurementCov = Mat3::Identity() * sigma * sigma;
  n.accelPsd = 1e-6;
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> g(0.0, 1.0);
  double sum = 0.0;
  int count = 0;
  for (int flight = 0; flight < 10; ++flight) {
    ShuttleState truth = at(Vec3(7, 0, 2), Vec3(-12 + g(rng), g(rng), 5 + g(rng)));
    EkfBelief b;
    b.covariance = Mat6::Identity();
    b.covariance.topLeftCorner<3, 3>() *= 0.01 * 0.01;
    b.covariance.bottomRightCorner<3, 3>() *= 0.5 * 0.5;
    b.mean << truth.position, truth.velocity;
    for (int i = 0; i < 3; ++i) {
      b.mean[i] += 0.01 * g(rng);
      b.mean[i + 3] += 0.5 * g(rng);
    }
    for (int k = 0; k < 100; ++k) {
      truth = step(truth, p, 0.005);
      b = ekfPredict(b, p, n, 0.005);
      const Vec3 z = truth.position + sigma * Vec3(g(rng), g(rng), g(rng));
      const UpdateResult u = ekfUpdate(b, z, n);
      b = u.belief;
      sum += u.nis;
      ++count;
    }
  }
  const double mean = sum / count;
  CHECK(mean > 3.0 * 0.85);
  CHECK(mean < 3.0 * 1.15);
}

TEST_CASE("predictTrajectory") {
  const ShuttleParams p = dragParams();
  const EkfBelief b = beliefAt(Vec3(5, 0, 2), Vec3(-10, 0, 4), 0.01);
  const Trajectory pred = predictTrajectory(b, p, 0.005, 0.5, 1.0);
  const Trajectory sim = simulate(b.state(), p, 0.005, 0.5, 1.0);
  REQUIRE(pred.size() == sim.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    CHECK(std::abs(pred[i].t - sim[i].t) < 1e-12);
    CHECK((pred[i].state.position - sim[i].state.position).norm() < 1e-12);
  }

  const Trajectory still = predictTrajectory(beliefAt(Vec3(0, 0, 1), Vec3::Zero(), 0), p, 0.005, 0.5);
  double apex = -1.0;
  std::size_t apexIndex = 0;
  for (std::size_t i = 0; i < still.size(); ++i) {
    if (still[i].state.position.z() > apex) {
      apex = still[i].state.position.z();
      apexIndex = i;
    }
  }
  CHECK(apexIndex == 0);
  CHECK(predictTrajectory(b, p, 0.005, 0.003).size() == 1);
  CHECK_THROWS_AS(predictTrajectory(b, p, 0.005, 0.0), Error);
}

TEST_CASE("selectHitPoint") {
  const ShuttleParams p = dragParams();
  const Trajectory traj = predictTrajectory(beliefAt(Vec3(0.4, 0, 2.0), Vec3(0, 0, 0), 0), p, 0.005, 1.0);
  HitCriteria c;
  const auto hit = selectHitPoint(traj, c);
  REQUIRE(hit);
  std::size_t expected = traj.size();
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double z = traj[i].state.position.z();
    if (z >= 1.0 && z <= 1.3) {
      expected = i;
      break;
    }
  }
  REQUIRE(expected < traj.size());
  CHECK(hit->time == traj[expected].t);
  CHECK(hit->position == traj[expected].state.position);

  c.preference = HitPreference::Apex;
  const auto apex = selectHitPoint(traj, c);
  REQUIRE(apex);
  CHECK(apex->time == hit->time);

  const Trajectory high = predictTrajectory(beliefAt(Vec3(0.4, 0, 3.0), Vec3(0, 0, 1), 0), p, 0.005, 0.3);
  CHECK_FALSE(selectHitPoint(high, HitCriteria()));

  // Easy volume: 2.0 m lateral, 0.4 m depth around the nominal strike point.
  Trajectory pts(4);
  pts[0].state.position = Vec3(0.4, 0.99, 1.1);
  pts[1].state.position = Vec3(0.4, 1.01, 1.1);
  pts[2].state.position = Vec3(0.61, 0.0, 1.1);
  pts[3].state.position = Vec3(0.59, -0.99, 1.1);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    pts[i].t = static_cast<double>(i);
  }
  CHECK(selectHitPoint({pts[0]}, HitCriteria()));
  CHECK_FALSE(selectHitPoint({pts[1]}, HitCriteria()));
  CHECK_FALSE(selectHitPoint({pts[2]}, HitCriteria()));
  CHECK(selectHitPoint({pts[3]}, HitCriteria()));
}
