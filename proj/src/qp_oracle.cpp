#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "hss/qp_solver.hpp"

namespace hss {

namespace {

// Grid points lo, lo + res, ..., always ending exactly at hi.
std::vector<double> axis(double lo, double hi, double res) {
  std::vector<double> pts;
  if (hi < lo) return pts;
  const auto steps = static_cast<std::size_t>(std::floor((hi - lo) / res));
  pts.reserve(steps + 2);
  for (std::size_t i = 0; i <= steps; ++i) pts.push_back(lo + static_cast<double>(i) * res);
  if (pts.back() < hi) pts.push_back(hi);
  return pts;
}

double penalised(const ShieldQP& p, double u0, double u1) {
  double worst = 0.0;
  for (const auto& row : p.rows) {
    double lhs = row.coeffs[0] * u0;
    if (row.coeffs.size() > 1) lhs += row.coeffs[1] * u1;
    worst = std::max(worst, lhs - row.rhs);
  }
  return u0 * u0 + u1 * u1 + p.slack_penalty * worst;
}

}  // namespace

QPSolution grid_oracle(const ShieldQP& problem, double resolution) {
  if (!(resolution > 0.0)) throw std::invalid_argument("grid_oracle: resolution must be positive");
  if (problem.dimension() > kMaxQPDimension || problem.dimension() == 0) {
    throw std::invalid_argument("grid_oracle: dimension must be 1 or 2");
  }
  const bool two_d = problem.dimension() == 2;
  const auto xs = axis(problem.lower[0], problem.upper[0], resolution);
  const auto ys = two_d ? axis(problem.lower[1], problem.upper[1], resolution)
                        : std::vector<double>{0.0};
  if (xs.empty() || ys.empty()) throw std::invalid_argument("grid_oracle: empty box");

  double best = std::numeric_limits<double>::infinity();
  double bx = 0.0;
  double by = 0.0;
  for (double y : ys) {
    for (double x : xs) {
      const double f = penalised(problem, x, y);
      if (f < best) {
        best = f;
        bx = x;
        by = y;
      }
    }
  }

  QPSolution sol;
  sol.u = two_d ? std::vector<double>{bx, by} : std::vector<double>{bx};
  double worst = 0.0;
  for (const auto& row : problem.rows) {
    double lhs = row.coeffs[0] * bx;
    if (two_d) lhs += row.coeffs[1] * by;
    worst = std::max(worst, lhs - row.rhs);
  }
  sol.slack = worst;
  sol.status = worst > kSlackActiveTol ? QPStatus::kSlackActive : QPStatus::kOptimal;
  return sol;
}

}  // namespace hss
