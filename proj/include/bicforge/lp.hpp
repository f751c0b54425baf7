#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "bicforge/errors.hpp"
#include "bicforge/rational.hpp"

namespace bicforge {

// Exact-rational linear programming: maximize c.x subject to sparse rows of
// a.x {<=,>=,=} b and x >= 0. Two-phase dense tableau; Dantzig pricing with a
// Bland fallback after a stall, so runs are deterministic and finite.
namespace lp {

enum class Rel { le, ge, eq };

struct Row {
  std::vector<std::pair<std::size_t, Rat>> coeffs;
  Rel rel = Rel::le;
  Rat rhs;
};

struct Problem {
  std::size_t num_vars = 0;
  std::vector<Rat> objective;
  std::vector<Row> rows;
};

struct Solution {
  bool feasible = false;
  bool bounded = true;
  Rat objective;
  std::vector<Rat> values;  // structural variables only (a basic solution)
};

namespace detail {

class Tableau {
 public:
  explicit Tableau(const Problem& problem) : n_(problem.num_vars) {
    const std::size_t m = problem.rows.size();
    std::size_t slacks = 0, artificials = 0;
    for (const Row& row : problem.rows) {
      Rel rel = row.rel;
      bool flip = row.rhs < 0;
      if (flip) rel = rel == Rel::le ? Rel::ge : (rel == Rel::ge ? Rel::le : Rel::eq);
      if (rel != Rel::eq) ++slacks;
      if (rel != Rel::le) ++artificials;
    }
    cols_ = n_ + slacks + artificials;
    art_begin_ = n_ + slacks;
    a_.assign(m, std::vector<Rat>(cols_, Rat(0)));
    b_.assign(m, Rat(0));
    basis_.assign(m, 0);
    in_basis_.assign(cols_, 0);

    std::size_t slack_at = n_, art_at = art_begin_;
    for (std::size_t r = 0; r < m; ++r) {
      const Row& row = problem.rows[r];
      Rat sign = row.rhs < 0 ? Rat(-1) : Rat(1);
      Rel rel = row.rel;
      if (row.rhs < 0) rel = rel == Rel::le ? Rel::ge : (rel == Rel::ge ? Rel::le : Rel::eq);
      for (const auto& [j, v] : row.coeffs) a_[r][j] += sign * v;
      b_[r] = sign * row.rhs;
      if (rel == Rel::le) {
        a_[r][slack_at] = 1;
        set_basis(r, slack_at++);
      } else if (rel == Rel::ge) {
        a_[r][slack_at++] = -1;
        a_[r][art_at] = 1;
        set_basis(r, art_at++);
      } else {
        a_[r][art_at] = 1;
        set_basis(r, art_at++);
      }
    }
  }

  bool needs_phase1() const { return art_begin_ < cols_; }

  bool phase1() {
    std::vector<Rat> cost(cols_, Rat(0));
    for (std::size_t j = art_begin_; j < cols_; ++j) cost[j] = Rat(-1);
    run(cost, cols_);
    for (std::size_t r = 0; r < a_.size(); ++r)
      if (basis_[r] >= art_begin_ && b_[r] != 0) return false;
    for (std::size_t r = 0; r < a_.size(); ++r) {
      if (basis_[r] < art_begin_) continue;
      for (std::size_t j = 0; j < art_begin_; ++j)
        if (!in_basis_[j] && a_[r][j] != 0) {
          pivot(r, j);
          break;
        }
    }
    return true;
  }

  bool phase2(const std::vector<Rat>& objective) {
    std::vector<Rat> cost(cols_, Rat(0));
    for (std::size_t j = 0; j < n_ && j < objective.size(); ++j) cost[j] = objective[j];
    return run(cost, art_begin_);
  }

  std::vector<Rat> solution() const {
    std::vector<Rat> x(n_, Rat(0));
    for (std::size_t r = 0; r < a_.size(); ++r)
      if (basis_[r] < n_) x[basis_[r]] = b_[r];
    return x;
  }

 private:
  void set_basis(std::size_t row, std::size_t col) {
    basis_[row] = col;
    in_basis_[col] = 1;
  }

  // Returns false on unboundedness. Dantzig pricing; after `stall_limit`
  // degenerate pivots in a row, switch to Bland until progress resumes.
  bool run(const std::vector<Rat>& cost, std::size_t usable_cols) {
    const std::size_t m = a_.size();
    std::vector<Rat> y(m);
    int stalled = 0;
    const int stall_limit = 2 * static_cast<int>(m) + 10;
    for (;;) {
      for (std::size_t r = 0; r < m; ++r) y[r] = cost[basis_[r]];
      bool bland = stalled > stall_limit;
      std::size_t enter = cols_;
      Rat best_rc(0);
      for (std::size_t j = 0; j < usable_cols; ++j) {
        if (in_basis_[j]) continue;
        Rat rc = cost[j];
        for (std::size_t r = 0; r < m; ++r)
          if (a_[r][j] != 0) rc -= y[r] * a_[r][j];
        if (rc > 0) {
          if (bland) {
            enter = j;
            break;
          }
          if (enter == cols_ || rc > best_rc) {
            enter = j;
            best_rc = rc;
          }
        }
      }
      if (enter == cols_) return true;

      std::size_t leave = m;
      Rat best_ratio(0);
      for (std::size_t r = 0; r < m; ++r) {
        if (a_[r][enter] <= 0) continue;
        Rat ratio = b_[r] / a_[r][enter];
        if (leave == m || ratio < best_ratio ||
            (ratio == best_ratio && basis_[r] < basis_[leave])) {
          best_ratio = ratio;
          leave = r;
        }
      }
      if (leave == m) return false;
      stalled = best_ratio == 0 ? stalled + 1 : 0;
      pivot(leave, enter);
    }
  }

  void pivot(std::size_t row, std::size_t col) {
    Rat inv = 1 / a_[row][col];
    if (inv != 1) {
      for (Rat& v : a_[row])
        if (v != 0) v *= inv;
      b_[row] *= inv;
    }
    for (std::size_t r = 0; r < a_.size(); ++r) {
      if (r == row || a_[r][col] == 0) continue;
      Rat factor = a_[r][col];
      for (std::size_t j = 0; j < cols_; ++j)
        if (a_[row][j] != 0) a_[r][j] -= factor * a_[row][j];
      b_[r] -= factor * b_[row];
    }
    in_basis_[basis_[row]] = 0;
    set_basis(row, col);
  }

  std::size_t n_, cols_, art_begin_;
  std::vector<std::vector<Rat>> a_;
  std::vector<Rat> b_;
  std::vector<std::size_t> basis_;
  std::vector<char> in_basis_;
};

}  // namespace detail

inline Solution solve(const Problem& problem) {
  detail::Tableau tableau(problem);
  Solution solution;
  if (tableau.needs_phase1() && !tableau.phase1()) return solution;
  solution.feasible = true;
  if (!tableau.phase2(problem.objective)) {
    solution.bounded = false;
    return solution;
  }
  solution.values = tableau.solution();
  solution.objective = Rat(0);
  for (std::size_t j = 0; j < problem.num_vars && j < problem.objective.size(); ++j)
    solution.objective += problem.objective[j] * solution.values[j];
  return solution;
}

}  // namespace lp
}  // namespace bicforge
