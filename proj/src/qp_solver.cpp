#include "hss/qp_solver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hss {

const char* to_string(QPStatus status) {
  switch (status) {
    case QPStatus::kOptimal: return "optimal";
    case QPStatus::kSlackActive: return "slack_active";
    case QPStatus::kInfeasibleClamped: return "infeasible_clamped";
  }
  return "unknown";
}

void validate(const ShieldQP& problem) {
  const std::size_t d = problem.dimension();
  if (d == 0 || d > kMaxQPDimension) {
    throw std::invalid_argument("ShieldQP: dimension must be 1 or 2");
  }
  if (problem.upper.size() != d) throw std::invalid_argument("ShieldQP: box size mismatch");
  if (!(problem.slack_penalty > 0.0) || !std::isfinite(problem.slack_penalty)) {
    throw std::invalid_argument("ShieldQP: slack_penalty must be positive and finite");
  }
  for (std::size_t k = 0; k < d; ++k) {
    if (!std::isfinite(problem.lower[k]) || !std::isfinite(problem.upper[k])) {
      throw std::invalid_argument("ShieldQP: box bounds must be finite");
    }
  }
  for (const auto& row : problem.rows) {
    if (row.coeffs.size() != d) throw std::invalid_argument("ShieldQP: ragged constraint row");
    if (!std::isfinite(row.rhs)) throw std::invalid_argument("ShieldQP: non-finite rhs");
    for (double c : row.coeffs) {
      if (!std::isfinite(c)) throw std::invalid_argument("ShieldQP: non-finite coefficient");
    }
  }
}

double required_slack(const ShieldQP& problem, const std::vector<double>& u) {
  double eps = 0.0;
  for (const auto& row : problem.rows) {
    double lhs = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) lhs += row.coeffs[k] * u[k];
    eps = std::max(eps, lhs - row.rhs);
  }
  return eps;
}

double objective(const ShieldQP& problem, const std::vector<double>& u) {
  double sq = 0.0;
  for (double v : u) sq += v * v;
  return sq + problem.slack_penalty * required_slack(problem, u);
}

namespace {

// Inequalities G z <= h over z = (u, eps).
struct Inequalities {
  Eigen::MatrixXd G;
  Eigen::VectorXd h;
};

Inequalities assemble(const ShieldQP& problem) {
  const auto d = static_cast<Eigen::Index>(problem.dimension());
  const auto k = static_cast<Eigen::Index>(problem.rows.size());
  const Eigen::Index n = d + 1;
  const Eigen::Index m = k + 2 * d + 1;
  Inequalities in{Eigen::MatrixXd::Zero(m, n), Eigen::VectorXd::Zero(m)};
  Eigen::Index r = 0;
  for (const auto& row : problem.rows) {
    for (Eigen::Index j = 0; j < d; ++j) in.G(r, j) = row.coeffs[static_cast<std::size_t>(j)];
    in.G(r, d) = -1.0;
    in.h(r) = row.rhs;
    ++r;
  }
  for (Eigen::Index j = 0; j < d; ++j) {
    in.G(r, j) = -1.0;
    in.h(r) = -problem.lower[static_cast<std::size_t>(j)];
    ++r;
    in.G(r, j) = 1.0;
    in.h(r) = problem.upper[static_cast<std::size_t>(j)];
    ++r;
  }
  in.G(r, d) = -1.0;
  in.h(r) = 0.0;
  return in;
}

// Visits every subset of {0..m-1} with at most max_size elements, in
// lexicographic order.
template <typename Fn>
void for_each_subset(int m, int max_size, Fn&& fn) {
  std::vector<int> idx;
  fn(idx);
  for (int size = 1; size <= std::min(m, max_size); ++size) {
    idx.resize(static_cast<std::size_t>(size));
    for (int i = 0; i < size; ++i) idx[static_cast<std::size_t>(i)] = i;
    while (true) {
      fn(idx);
      int i = size - 1;
      while (i >= 0 && idx[static_cast<std::size_t>(i)] == m - size + i) --i;
      if (i < 0) break;
      ++idx[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < size; ++j) {
        idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
      }
    }
  }
}

QPSolution finish(const ShieldQP& problem, std::vector<double> u, QPStatus fallback) {
  for (std::size_t k = 0; k < u.size(); ++k) {
    u[k] = std::clamp(u[k], problem.lower[k], problem.upper[k]);
  }
  QPSolution sol;
  sol.slack = required_slack(problem, u);
  sol.u = std::move(u);
  if (fallback == QPStatus::kInfeasibleClamped) {
    sol.status = fallback;
  } else {
    sol.status = sol.slack > kSlackActiveTol ? QPStatus::kSlackActive : QPStatus::kOptimal;
  }
  return sol;
}

QPSolution solve_empty_box(const ShieldQP& problem) {
  // Pick the box corner that needs the least slack; ties go to the first corner.
  const std::size_t d = problem.dimension();
  std::vector<double> best_u;
  double best_eps = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << d); ++mask) {
    std::vector<double> u(d);
    for (std::size_t k = 0; k < d; ++k) {
      u[k] = (mask >> k) & 1u ? problem.upper[k] : problem.lower[k];
    }
    const double eps = required_slack(problem, u);
    if (eps < best_eps) {
      best_eps = eps;
      best_u = u;
    }
  }
  QPSolution sol;
  sol.u = std::move(best_u);
  sol.slack = best_eps;
  sol.status = QPStatus::kInfeasibleClamped;
  return sol;
}

}  // namespace

QPSolution solve_shield_qp(const ShieldQP& problem) {
  validate(problem);
  const std::size_t d = problem.dimension();

  for (std::size_t k = 0; k < d; ++k) {
    if (problem.lower[k] > problem.upper[k]) return solve_empty_box(problem);
  }

  // The unconstrained minimiser u = 0, eps = 0 is optimal whenever it is feasible.
  bool zero_feasible = true;
  for (std::size_t k = 0; k < d; ++k) {
    zero_feasible = zero_feasible && problem.lower[k] <= 0.0 && 0.0 <= problem.upper[k];
  }
  for (const auto& row : problem.rows) zero_feasible = zero_feasible && row.rhs >= 0.0;
  if (zero_feasible) {
    QPSolution sol;
    sol.u.assign(d, 0.0);
    return sol;
  }

  const Inequalities in = assemble(problem);
  const Eigen::Index n = static_cast<Eigen::Index>(d) + 1;
  const auto m = static_cast<int>(in.G.rows());

  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j + 1 < n; ++j) P(j, j) = 2.0;
  Eigen::VectorXd q = Eigen::VectorXd::Zero(n);
  q(n - 1) = problem.slack_penalty;

  const double primal_tol = 1e-9;
  const double dual_tol = 1e-9;

  bool found = false;
  double best_obj = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_z;

  for_each_subset(m, static_cast<int>(n), [&](const std::vector<int>& active) {
    const auto s = static_cast<Eigen::Index>(active.size());
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + s, n + s);
    Eigen::VectorXd rhs(n + s);
    kkt.topLeftCorner(n, n) = P;
    rhs.head(n) = -q;
    for (Eigen::Index a = 0; a < s; ++a) {
      const auto r = active[static_cast<std::size_t>(a)];
      kkt.block(n + a, 0, 1, n) = in.G.row(r);
      kkt.block(0, n + a, n, 1) = in.G.row(r).transpose();
      rhs(n + a) = in.h(r);
    }
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible()) return;
    const Eigen::VectorXd sol = lu.solve(rhs);
    const Eigen::VectorXd z = sol.head(n);
    for (Eigen::Index a = 0; a < s; ++a) {
      if (sol(n + a) < -dual_tol) return;
    }
    const Eigen::VectorXd slack = in.h - in.G * z;
    for (Eigen::Index r = 0; r < in.G.rows(); ++r) {
      if (slack(r) < -primal_tol * (1.0 + std::abs(in.h(r)))) return;
    }
    const double obj = 0.5 * z.dot(P * z) + q.dot(z);
    if (!found || obj < best_obj) {
      found = true;
      best_obj = obj;
      best_z = z;
    }
  });

  if (!found) {
    // Unreachable for validated problems; the slack keeps the QP feasible.
    throw std::logic_error("solve_shield_qp: no KKT point found");
  }
  std::vector<double> u(d);
  for (std::size_t k = 0; k < d; ++k) u[k] = best_z(static_cast<Eigen::Index>(k));
  return finish(problem, std::move(u), QPStatus::kOptimal);
}

}  // namespace hss
