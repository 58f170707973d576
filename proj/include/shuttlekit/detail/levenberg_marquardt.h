#pragma once

// Included from retarget.h.

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>

namespace shuttlekit {

namespace detail {

inline constexpr double kJacobianStep = 1e-6;
inline constexpr double kMaxDamping = 1e16;
inline constexpr double kCostFloor = 1e-30;

template <typename State>
MatX numericJacobian(const LeastSquaresProblem<State>& problem, const State& x, Eigen::Index rows) {
  MatX jac(rows, problem.dimension);
  VecX delta = VecX::Zero(problem.dimension);
  for (Eigen::Index i = 0; i < problem.dimension; ++i) {
    delta[i] = kJacobianStep;
    const VecX plus = problem.residuals(problem.retract(x, delta));
    delta[i] = -kJacobianStep;
    const VecX minus = problem.residuals(problem.retract(x, delta));
    delta[i] = 0.0;
    jac.col(i) = (plus - minus) / (2.0 * kJacobianStep);
  }
  return jac;
}

} // namespace detail

template <typename State>
LeastSquaresResult<State> levenbergMarquardt(
    const LeastSquaresProblem<State>& problem,
    State init,
    const SolverOptions& options) {
  LeastSquaresResult<State> out;
  out.state = std::move(init);
  VecX r = problem.residuals(out.state);
  out.cost = r.squaredNorm();
  if (problem.dimension == 0 || r.size() == 0) {
    return out;
  }

  double damping = options.initialDamping;
  while (out.iterations < options.maxIterations && out.cost > detail::kCostFloor) {
    ++out.iterations;
    const MatX jac = detail::numericJacobian(problem, out.state, r.size());
    const MatX normal = jac.transpose() * jac;
    const VecX grad = jac.transpose() * r;
    const double diagFloor = 1e-9 * (1.0 + normal.diagonal().maxCoeff());
    const VecX scaling = normal.diagonal().cwiseMax(diagFloor);

    bool accepted = false;
    bool converged = false;
    while (damping < detail::kMaxDamping) {
      MatX lhs = normal;
      lhs.diagonal() += damping * scaling;
      const VecX stepVec = -lhs.ldlt().solve(grad);
      if (!stepVec.allFinite()) {
        damping *= 10.0;
        continue;
      }
      State candidate = problem.retract(out.state, stepVec);
      const VecX rNew = problem.residuals(candidate);
      const double costNew = rNew.squaredNorm();
      if (std::isfinite(costNew) && costNew < out.cost) {
        const double relative = (out.cost - costNew) / out.cost;
        out.state = std::move(candidate);
        r = rNew;
        out.cost = costNew;
        out.acceptedCosts.push_back(costNew);
        damping = std::max(damping / 10.0, 1e-12);
        accepted = true;
        converged = relative < options.relativeTolerance;
        break;
      }
      damping *= 10.0;
    }
    if (!accepted || converged) {
      break;
    }
  }
  return out;
}

} // namespace shuttlekit
