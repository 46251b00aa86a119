#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace streamsim {

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

/// min objective . x  subject to  coeffs . x (op) rhs per row,  x >= 0,
/// with op one of '=' and '>' (greater-or-equal).
struct LinearProgram {
  int num_vars = 0;
  std::vector<double> objective;
  struct Row {
    std::vector<double> coeffs;
    double rhs = 0.0;
    char op = '=';
  };
  std::vector<Row> rows;
};

struct LpSolution {
  LpStatus status = LpStatus::kInfeasible;
  double objective = 0.0;
  std::vector<double> x;
};

/// Dense two-phase primal simplex. Dantzig pricing with a permanent switch to
/// Bland's rule once the iteration count suggests cycling; adequate for the
/// desk-scale occupation-measure programs this project builds.
class SimplexSolver {
 public:
  explicit SimplexSolver(const LinearProgram& lp) : lp_(lp) {
    if (static_cast<int>(lp.objective.size()) != lp.num_vars) {
      throw std::invalid_argument("lp: objective size mismatch");
    }
    for (const auto& row : lp.rows) {
      if (static_cast<int>(row.coeffs.size()) != lp.num_vars) {
        throw std::invalid_argument("lp: row size mismatch");
      }
      if (row.op != '=' && row.op != '>') {
        throw std::invalid_argument("lp: row op must be '=' or '>'");
      }
    }
  }

  LpSolution solve(std::int64_t max_iterations = 500'000) {
    build_tableau();
    // Phase 1: minimize the artificial sum.
    set_costs(/*phase1=*/true);
    LpStatus st = iterate(max_iterations);
    if (st != LpStatus::kOptimal) return {st, 0.0, {}};
    if (current_objective() > 1e-7) return {LpStatus::kInfeasible, 0.0, {}};
    purge_artificials();
    // Phase 2: the real objective.
    set_costs(/*phase1=*/false);
    st = iterate(max_iterations);
    if (st != LpStatus::kOptimal) return {st, 0.0, {}};

    LpSolution out;
    out.status = LpStatus::kOptimal;
    out.x.assign(lp_.num_vars, 0.0);
    for (int i = 0; i < m_; ++i) {
      if (basis_[i] < lp_.num_vars) out.x[basis_[i]] = rhs(i);
    }
    out.objective = 0.0;
    for (int j = 0; j < lp_.num_vars; ++j) {
      out.objective += lp_.objective[j] * out.x[j];
    }
    return out;
  }

 private:
  double& at(int i, int j) { return tab_[static_cast<std::size_t>(i) * stride_ + j]; }
  double rhs(int i) const {
    return tab_[static_cast<std::size_t>(i) * stride_ + (stride_ - 1)];
  }

  void build_tableau() {
    m_ = static_cast<int>(lp_.rows.size());
    int n_surplus = 0;
    for (const auto& row : lp_.rows) n_surplus += row.op == '>' ? 1 : 0;
    n_structural_ = lp_.num_vars + n_surplus;
    art_begin_ = n_structural_;
    n_ = n_structural_ + m_;  // one artificial per row
    stride_ = n_ + 1;
    tab_.assign(static_cast<std::size_t>(m_ + 1) * stride_, 0.0);
    basis_.resize(m_);

    int surplus = lp_.num_vars;
    for (int i = 0; i < m_; ++i) {
      const auto& row = lp_.rows[i];
      double sign = row.rhs < 0.0 ? -1.0 : 1.0;  // keep rhs nonnegative
      for (int j = 0; j < lp_.num_vars; ++j) at(i, j) = sign * row.coeffs[j];
      if (row.op == '>') {
        at(i, surplus++) = sign * -1.0;
      }
      at(i, art_begin_ + i) = 1.0;
      at(i, n_) = sign * row.rhs;
      basis_[i] = art_begin_ + i;
    }
  }

  // Load the cost row (priced out against the current basis).
  void set_costs(bool phase1) {
    phase1_ = phase1;
    for (int j = 0; j <= n_; ++j) at(m_, j) = 0.0;
    auto cost = [&](int j) {
      if (phase1) return j >= art_begin_ ? 1.0 : 0.0;
      return j < lp_.num_vars ? lp_.objective[j] : 0.0;
    };
    for (int j = 0; j < n_; ++j) at(m_, j) = cost(j);
    for (int i = 0; i < m_; ++i) {
      double cb = cost(basis_[i]);
      if (cb == 0.0) continue;
      for (int j = 0; j <= n_; ++j) at(m_, j) -= cb * at(i, j);
    }
  }

  double current_objective() { return -at(m_, n_); }

  LpStatus iterate(std::int64_t max_iterations) {
    const double tol = 1e-10;
    const std::int64_t bland_after = 200 + 20LL * m_;
    for (std::int64_t iter = 0; iter < max_iterations; ++iter) {
      const bool bland = iter > bland_after;
      int entering = -1;
      double best = -tol;
      for (int j = 0; j < n_; ++j) {
        if (!phase1_ && j >= art_begin_) continue;  // artificials stay out
        double rc = at(m_, j);
        if (rc < best) {
          best = rc;
          entering = j;
          if (bland) break;  // first improving column
        }
        if (bland && entering >= 0) break;
      }
      if (entering < 0) return LpStatus::kOptimal;

      int leaving = -1;
      double best_ratio = 0.0;
      for (int i = 0; i < m_; ++i) {
        double a = at(i, entering);
        if (a <= 1e-11) continue;
        double ratio = rhs(i) / a;
        if (leaving < 0 || ratio < best_ratio - 1e-12 ||
            (ratio < best_ratio + 1e-12 && basis_[i] < basis_[leaving])) {
          leaving = i;
          best_ratio = ratio;
        }
      }
      if (leaving < 0) return LpStatus::kUnbounded;
      pivot(leaving, entering);
    }
    return LpStatus::kIterationLimit;
  }

  void pivot(int row, int col) {
    double piv = at(row, col);
    for (int j = 0; j <= n_; ++j) at(row, j) /= piv;
    at(row, col) = 1.0;
    for (int i = 0; i <= m_; ++i) {
      if (i == row) continue;
      double factor = at(i, col);
      if (factor == 0.0) continue;
      for (int j = 0; j <= n_; ++j) at(i, j) -= factor * at(row, j);
      at(i, col) = 0.0;
    }
    basis_[row] = col;
  }

  // After phase 1, pivot zero-valued basic artificials onto structural
  // columns where possible. A row with no structural support is a redundant
  // constraint; it is zeroed outright so later ratio tests cannot pick up
  // its numerical dust.
  void purge_artificials() {
    for (int i = 0; i < m_; ++i) {
      if (basis_[i] < art_begin_) continue;
      int col = -1;
      for (int j = 0; j < n_structural_; ++j) {
        if (std::abs(at(i, j)) > 1e-7) {
          col = j;
          break;
        }
      }
      if (col >= 0) {
        pivot(i, col);
      } else {
        for (int j = 0; j <= n_; ++j) at(i, j) = 0.0;
      }
    }
  }

  const LinearProgram& lp_;
  std::vector<double> tab_;
  std::vector<int> basis_;
  int m_ = 0;
  int n_ = 0;
  int n_structural_ = 0;
  int art_begin_ = 0;
  int stride_ = 0;
  bool phase1_ = false;
};

inline LpSolution solve_lp(const LinearProgram& lp,
                           std::int64_t max_iterations = 500'000) {
  return SimplexSolver(lp).solve(max_iterations);
}

}  // namespace streamsim
