#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

namespace streamsim {

/// Row-sparse transition kernel: rows[i] lists (j, P(i -> j)).
using SparseKernel = std::vector<std::vector<std::pair<int, double>>>;

struct StationaryResult {
  std::vector<double> distribution;
  double residual = 0.0;  // max_i |(pi P)_i - pi_i|
};

namespace detail {

inline double stationary_residual(const SparseKernel& rows,
                                  const std::vector<double>& pi) {
  std::vector<double> next(pi.size(), 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (const auto& [j, p] : rows[i]) next[j] += pi[i] * p;
  }
  double r = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i) {
    r = std::max(r, std::abs(next[i] - pi[i]));
  }
  return r;
}

inline StationaryResult stationary_direct(const SparseKernel& rows) {
  const int n = static_cast<int>(rows.size());
  // pi P = pi with sum(pi) = 1: solve (P^T - I) pi = 0 with the last equation
  // replaced by the normalization row.
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (const auto& [j, p] : rows[i]) a(j, i) += p;
    a(i, i) -= 1.0;
  }
  a.row(n - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(n - 1) = 1.0;
  Eigen::VectorXd pi = a.partialPivLu().solve(b);
  StationaryResult out;
  out.distribution.assign(pi.data(), pi.data() + n);
  for (double& x : out.distribution) {
    if (x < 0.0 && x > -1e-12) x = 0.0;  // clip solver dust
  }
  out.residual = stationary_residual(rows, out.distribution);
  return out;
}

inline StationaryResult stationary_power(const SparseKernel& rows,
                                         double tolerance,
                                         std::int64_t max_iterations) {
  const std::size_t n = rows.size();
  StationaryResult out;
  out.distribution.assign(n, 1.0 / static_cast<double>(n));
  std::vector<double> next(n);
  for (std::int64_t it = 0; it < max_iterations; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (const auto& [j, p] : rows[i]) next[j] += out.distribution[i] * p;
    }
    // Lazy update: averaging with the current iterate removes periodicity.
    double diff = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double v = 0.5 * (out.distribution[i] + next[i]);
      diff = std::max(diff, std::abs(v - out.distribution[i]));
      out.distribution[i] = v;
    }
    if (diff < 0.5 * tolerance) {
      out.residual = stationary_residual(rows, out.distribution);
      if (out.residual < tolerance) return out;
    }
  }
  out.residual = stationary_residual(rows, out.distribution);
  return out;
}

}  // namespace detail

/// Stationary distribution of a finite unichain kernel: direct linear solve
/// up to 2000 states, lazy power iteration beyond. Throws when the residual
/// cannot be pushed below `tolerance`.
inline StationaryResult stationary_distribution(const SparseKernel& rows,
                                                double tolerance = 1e-12) {
  if (rows.empty()) throw std::invalid_argument("stationary: empty kernel");
  StationaryResult out;
  if (rows.size() <= 2000) {
    out = detail::stationary_direct(rows);
    if (out.residual < tolerance) return out;
    // Near-singular direct solve; fall through to iteration.
  }
  out = detail::stationary_power(rows, tolerance, 2'000'000);
  if (out.residual >= tolerance) {
    throw std::runtime_error(
        "stationary distribution did not converge; residual " +
        std::to_string(out.residual));
  }
  return out;
}

}  // namespace streamsim
