#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace eucal {

struct LmOptions {
  int max_iterations = 200;
  double relative_decrease = 1e-12;  // stall threshold on accepted steps
  int stall_steps = 3;               // consecutive stalled steps to stop
  double initial_damping = 1e-3;
  double damping_increase = 10.0;
  double damping_decrease = 1.0 / 3.0;
  double max_damping = 1e16;
  double zero_cost = 0.0;            // stop once the cost is at or below this
};

template <typename State>
struct LmOutcome {
  State state;
  double cost = 0.0;                  // 0.5 * |r|^2 at state
  std::vector<double> accepted_costs;  // non-increasing by construction
  int iterations = 0;
  double damping = 0.0;
  bool converged = false;
};

/// Damped Gauss-Newton with Marquardt diagonal scaling. The problem type
/// supplies
///
///   Eigen::VectorXd residuals(const State&) const;
///   Eigen::MatrixXd jacobian(const State&) const;   // d r / d step
///   State apply(const State&, const Eigen::VectorXd& step) const;
///   bool valid(const State&) const;
///
/// Only steps that strictly lower the cost are accepted, so the cost
/// sequence is monotone. Each trial step counts as one iteration.
template <typename Problem, typename State>
LmOutcome<State> levenberg_marquardt(const Problem& problem, State start,
                                     const LmOptions& opt = {}) {
  LmOutcome<State> out;
  out.state = std::move(start);
  Eigen::VectorXd r = problem.residuals(out.state);
  out.cost = 0.5 * r.squaredNorm();
  out.accepted_costs.push_back(out.cost);
  double mu = opt.initial_damping;
  int stalled = 0;

  Eigen::MatrixXd J, H;
  Eigen::VectorXd g, d;
  bool rebuild = true;
  while (true) {
    if (!std::isfinite(out.cost)) break;
    if (out.cost <= opt.zero_cost) {
      out.converged = true;
      break;
    }
    if (out.iterations >= opt.max_iterations) break;
    if (rebuild) {
      J = problem.jacobian(out.state);
      H = J.transpose() * J;
      g = J.transpose() * r;
      d = H.diagonal().cwiseMax(1e-12 * std::max(H.diagonal().maxCoeff(), 1e-300));
      rebuild = false;
      if (g.cwiseAbs().maxCoeff() == 0.0) {
        out.converged = true;
        break;
      }
    }
    ++out.iterations;
    Eigen::MatrixXd A = H;
    A.diagonal() += mu * d;
    const Eigen::VectorXd step = A.ldlt().solve(-g);
    bool accepted = false;
    if (step.allFinite()) {
      State trial = problem.apply(out.state, step);
      if (problem.valid(trial)) {
        Eigen::VectorXd rt = problem.residuals(trial);
        const double cost = 0.5 * rt.squaredNorm();
        if (std::isfinite(cost) && cost < out.cost) {
          const double rel = (out.cost - cost) / out.cost;
          stalled = rel < opt.relative_decrease ? stalled + 1 : 0;
          out.state = std::move(trial);
          out.cost = cost;
          out.accepted_costs.push_back(cost);
          r = std::move(rt);
          mu = std::max(mu * opt.damping_decrease, 1e-15);
          rebuild = true;
          accepted = true;
        }
      }
    }
    if (accepted) {
      if (stalled >= opt.stall_steps) {
        out.converged = true;
        break;
      }
    } else {
      mu *= opt.damping_increase;
      // No descent left at any damping: a stationary point.
      if (mu > opt.max_damping) {
        out.converged = true;
        break;
      }
    }
  }
  out.damping = mu;
  return out;
}

}  // namespace eucal
