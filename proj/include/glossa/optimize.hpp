#pragma once

// Limited-memory BFGS with a backtracking (Armijo) line search. Every
// accepted step strictly decreases the objective.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <vector>

namespace glossa {

struct LbfgsOptions {
  int max_iters = 200;
  int memory = 10;
  double rel_tol = 1e-6;   // relative objective change
  double grad_tol = 1e-5;  // max-norm of the gradient
  double armijo = 1e-4;
  double shrink = 0.5;
  int max_backtracks = 50;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Objective value after each iteration, starting with the initial point.
  std::vector<double> history;
};

/// `fg(x, grad)` returns f(x) and writes its gradient. Minimizes f.
inline LbfgsResult minimize_lbfgs(
    const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>& fg,
    Eigen::VectorXd x, const LbfgsOptions& opts = {}) {
  LbfgsResult r;
  const auto n = x.size();
  Eigen::VectorXd g(n), q(n), d(n), x_new(n), g_new(n);
  double f = fg(x, g);
  r.history.push_back(f);
  // Correction pairs live in m + 1 reusable slots; order lists the live ones,
  // oldest first, and the spare slot receives the next candidate pair.
  const auto m = static_cast<std::size_t>(std::max(1, opts.memory));
  std::vector<Eigen::VectorXd> s_slot(m + 1), y_slot(m + 1);
  std::vector<double> rho(m + 1), alpha(m + 1);
  std::vector<std::size_t> order;

  for (int iter = 0; iter < opts.max_iters; ++iter) {
    if (n == 0 || g.lpNorm<Eigen::Infinity>() < opts.grad_tol) {
      r.converged = true;
      break;
    }
    // Two-loop recursion.
    q = g;
    for (std::size_t k = order.size(); k-- > 0;) {
      const auto i = order[k];
      alpha[i] = rho[i] * s_slot[i].dot(q);
      q -= alpha[i] * y_slot[i];
    }
    if (!order.empty()) q *= 1.0 / (rho[order.back()] * y_slot[order.back()].squaredNorm());
    for (const auto i : order) {
      const double beta = rho[i] * y_slot[i].dot(q);
      q += (alpha[i] - beta) * s_slot[i];
    }
    d = -q;
    double slope = g.dot(d);
    if (!(slope < 0.0)) {
      order.clear();
      d = -g;
      slope = -g.squaredNorm();
    }
    double step = order.empty() ? std::min(1.0, 1.0 / std::max(1e-12, g.lpNorm<Eigen::Infinity>())) : 1.0;

    double f_new = f;
    bool accepted = false;
    for (int b = 0; b < opts.max_backtracks; ++b) {
      x_new = x + step * d;
      f_new = fg(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= f + opts.armijo * step * slope && f_new < f) {
        accepted = true;
        break;
      }
      step *= opts.shrink;
    }
    if (!accepted) {
      r.converged = true;  // no further decrease achievable at machine precision
      break;
    }
    std::size_t slot = 0;
    while (std::find(order.begin(), order.end(), slot) != order.end()) ++slot;
    Eigen::VectorXd& s = s_slot[slot];
    Eigen::VectorXd& y = y_slot[slot];
    s = x_new - x;
    y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12) {
      rho[slot] = 1.0 / sy;
      if (order.size() == m) order.erase(order.begin());
      order.push_back(slot);
    }
    const double rel = std::abs(f - f_new) / std::max({std::abs(f), std::abs(f_new), 1.0});
    x.swap(x_new);
    g.swap(g_new);
    f = f_new;
    r.history.push_back(f);
    r.iterations = iter + 1;
    if (rel < opts.rel_tol) {
      r.converged = true;
      break;
    }
  }
  r.x = std::move(x);
  r.value = f;
  return r;
}

}  // namespace glossa
