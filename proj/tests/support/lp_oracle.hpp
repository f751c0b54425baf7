#pragma once

// Test-side LP oracle, independent of the library's solvers: a plain dense
// two-phase tableau simplex over exact rationals with Bland's rule. Used to
// cross-check objectives and to enumerate optimal vertices of small LPs.

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "bicforge/rational.hpp"

namespace oracle {

using bicforge::Rat;

enum class Rel { le, ge, eq };

struct OracleLp {
  // maximize c.x subject to rows, x >= 0
  std::vector<Rat> objective;
  std::vector<std::vector<Rat>> rows;
  std::vector<Rel> rels;
  std::vector<Rat> rhs;
};

struct OracleResult {
  bool feasible = false;
  bool bounded = true;
  Rat objective;
  std::vector<Rat> values;
};

namespace detail {

class Tableau {
 public:
  // Builds the phase-1 tableau with slack/surplus/artificial columns.
  explicit Tableau(const OracleLp& lp) : num_vars_(lp.objective.size()) {
    const std::size_t m = lp.rows.size();
    // Flip rows with negative rhs so b >= 0 throughout.
    std::vector<std::vector<Rat>> rows = lp.rows;
    std::vector<Rel> rels = lp.rels;
    std::vector<Rat> rhs = lp.rhs;
    for (std::size_t r = 0; r < m; ++r) {
      if (rhs[r] < 0) {
        for (Rat& v : rows[r]) v = -v;
        rhs[r] = -rhs[r];
        if (rels[r] == Rel::le) rels[r] = Rel::ge;
        else if (rels[r] == Rel::ge) rels[r] = Rel::le;
      }
    }
    std::size_t slack_count = 0;
    for (Rel rel : rels)
      if (rel != Rel::eq) ++slack_count;
    std::size_t art_count = 0;
    for (Rel rel : rels)
      if (rel != Rel::le) ++art_count;
    cols_ = num_vars_ + slack_count + art_count;
    a_.assign(m, std::vector<Rat>(cols_, Rat(0)));
    b_ = rhs;
    basis_.assign(m, 0);
    art_begin_ = num_vars_ + slack_count;

    std::size_t slack_at = num_vars_, art_at = art_begin_;
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t j = 0; j < num_vars_; ++j) a_[r][j] = rows[r][j];
      if (rels[r] == Rel::le) {
        a_[r][slack_at] = 1;
        basis_[r] = slack_at++;
      } else if (rels[r] == Rel::ge) {
        a_[r][slack_at] = -1;
        ++slack_at;
        a_[r][art_at] = 1;
        basis_[r] = art_at++;
      } else {
        a_[r][art_at] = 1;
        basis_[r] = art_at++;
      }
    }
  }

  bool phase1() {
    std::vector<Rat> cost(cols_, Rat(0));
    for (std::size_t j = art_begin_; j < cols_; ++j) cost[j] = -1;
    run(cost);
    Rat v(0);
    for (std::size_t r = 0; r < a_.size(); ++r)
      if (basis_[r] >= art_begin_) v += b_[r];
    if (v != 0) return false;
    // Pivot any residual artificials out of the basis.
    for (std::size_t r = 0; r < a_.size(); ++r) {
      if (basis_[r] < art_begin_) continue;
      for (std::size_t j = 0; j < art_begin_; ++j)
        if (a_[r][j] != 0) {
          pivot(r, j);
          break;
        }
      // An all-zero row is a redundant constraint; the artificial stays at 0.
    }
    return true;
  }

  bool phase2(const std::vector<Rat>& objective) {
    std::vector<Rat> cost(cols_, Rat(0));
    for (std::size_t j = 0; j < num_vars_; ++j) cost[j] = objective[j];
    return run(cost, /*forbid_artificials=*/true);
  }

  std::vector<Rat> solution() const {
    std::vector<Rat> x(num_vars_, Rat(0));
    for (std::size_t r = 0; r < a_.size(); ++r)
      if (basis_[r] < num_vars_) x[basis_[r]] = b_[r];
    return x;
  }

 private:
  // Bland's rule simplex; returns false on unboundedness.
  bool run(const std::vector<Rat>& cost, bool forbid_artificials = false) {
    const std::size_t m = a_.size();
    for (;;) {
      // Reduced costs via the current basis rows.
      std::vector<Rat> y(m);
      for (std::size_t r = 0; r < m; ++r) y[r] = cost[basis_[r]];
      std::size_t enter = cols_;
      for (std::size_t j = 0; j < cols_; ++j) {
        if (forbid_artificials && j >= art_begin_) break;
        bool in_basis = false;
        for (std::size_t r = 0; r < m; ++r)
          if (basis_[r] == j) in_basis = true;
        if (in_basis) continue;
        Rat rc = cost[j];
        for (std::size_t r = 0; r < m; ++r) rc -= y[r] * a_[r][j];
        if (rc > 0) {
          enter = j;
          break;  // Bland: lowest improving index
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
      pivot(leave, enter);
    }
  }

  void pivot(std::size_t row, std::size_t col) {
    Rat inv = 1 / a_[row][col];
    for (Rat& v : a_[row]) v *= inv;
    b_[row] *= inv;
    for (std::size_t r = 0; r < a_.size(); ++r) {
      if (r == row || a_[r][col] == 0) continue;
      Rat factor = a_[r][col];
      for (std::size_t j = 0; j < cols_; ++j) a_[r][j] -= factor * a_[row][j];
      b_[r] -= factor * b_[row];
    }
    basis_[row] = col;
  }

  std::size_t num_vars_, cols_, art_begin_;
  std::vector<std::vector<Rat>> a_;
  std::vector<Rat> b_;
  std::vector<std::size_t> basis_;
};

}  // namespace detail

inline OracleResult solve(const OracleLp& lp) {
  detail::Tableau tab(lp);
  OracleResult result;
  if (!tab.phase1()) return result;
  result.feasible = true;
  if (!tab.phase2(lp.objective)) {
    result.bounded = false;
    return result;
  }
  result.values = tab.solution();
  result.objective = Rat(0);
  for (std::size_t j = 0; j < lp.objective.size(); ++j)
    result.objective += lp.objective[j] * result.values[j];
  return result;
}

// Optimal value of a transportation LP (max sum x.w, row sums <= demand,
// column sums <= supply, x >= 0), in exact rationals.
inline Rat transportation_optimum(const std::vector<Rat>& demands, const std::vector<Rat>& supplies,
                                  const std::vector<std::vector<Rat>>& values) {
  const std::size_t L = demands.size(), M = supplies.size();
  OracleLp lp;
  lp.objective.resize(L * M);
  for (std::size_t s = 0; s < L; ++s)
    for (std::size_t t = 0; t < M; ++t) lp.objective[s * M + t] = values[s][t];
  for (std::size_t s = 0; s < L; ++s) {
    std::vector<Rat> row(L * M, Rat(0));
    for (std::size_t t = 0; t < M; ++t) row[s * M + t] = 1;
    lp.rows.push_back(row);
    lp.rels.push_back(Rel::le);
    lp.rhs.push_back(demands[s]);
  }
  for (std::size_t t = 0; t < M; ++t) {
    std::vector<Rat> row(L * M, Rat(0));
    for (std::size_t s = 0; s < L; ++s) row[s * M + t] = 1;
    lp.rows.push_back(row);
    lp.rels.push_back(Rel::le);
    lp.rhs.push_back(supplies[t]);
  }
  OracleResult res = solve(lp);
  if (!res.feasible || !res.bounded) throw std::logic_error("oracle transportation LP failed");
  return res.objective;
}

}  // namespace oracle
