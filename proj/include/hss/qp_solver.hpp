#pragma once

#include <cstddef>
#include <vector>

namespace hss {

/// One linear inequality coeffs . u <= rhs on the correction variable.
struct AffineConstraint {
  std::vector<double> coeffs;
  double rhs = 0.0;
};

/// minimise |u|^2 + slack_penalty * eps
///   s.t.  rows[i].coeffs . u <= rows[i].rhs + eps,  eps >= 0,  lower <= u <= upper
///
/// A single shared slack relaxes every row. Dimension is lower.size() (1 or 2).
struct ShieldQP {
  std::vector<AffineConstraint> rows;
  std::vector<double> lower;
  std::vector<double> upper;
  double slack_penalty = 1e4;

  std::size_t dimension() const { return lower.size(); }
};

enum class QPStatus { kOptimal, kSlackActive, kInfeasibleClamped };

const char* to_string(QPStatus status);

struct QPSolution {
  std::vector<double> u;
  double slack = 0.0;
  QPStatus status = QPStatus::kOptimal;
};

inline constexpr std::size_t kMaxQPDimension = 2;
inline constexpr double kSlackActiveTol = 1e-9;

/// Throws std::invalid_argument for malformed problems (dimension outside
/// [1, 2], ragged rows, non-positive penalty, non-finite data).
void validate(const ShieldQP& problem);

/// Smallest slack any box point needs: max(0, max_i(A_i u - b_i)).
double required_slack(const ShieldQP& problem, const std::vector<double>& u);

/// Objective |u|^2 + K * required_slack(u).
double objective(const ShieldQP& problem, const std::vector<double>& u);

/// Exact solve by enumerating active sets of the slack-augmented problem.
QPSolution solve_shield_qp(const ShieldQP& problem);

/// Brute-force minimiser over a regular grid of the box (test oracle).
/// Throws std::invalid_argument for dimension > 2 or resolution <= 0.
QPSolution grid_oracle(const ShieldQP& problem, double resolution);

}  // namespace hss
