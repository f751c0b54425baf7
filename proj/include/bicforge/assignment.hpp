#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "bicforge/errors.hpp"
#include "bicforge/matrix.hpp"
#include "bicforge/rational.hpp"

namespace bicforge {

// Fractional assignment (transportation) instance: ell buyers with demands
// alpha, m divisible products with supplies beta, non-negative values w.
template <typename T>
struct AssignmentProblem {
  std::vector<T> demands;   // alpha, one per buyer
  std::vector<T> supplies;  // beta, one per product
  Matrix<T> values;         // w, buyers x products

  std::size_t buyers() const { return demands.size(); }
  std::size_t products() const { return supplies.size(); }

  void validate() const {
    if (demands.empty() || supplies.empty()) throw InvalidArgument("empty assignment problem");
    if (values.rows() != demands.size() || values.cols() != supplies.size())
      throw InvalidArgument("assignment dimension mismatch");
    for (const T& a : demands)
      if (a < T(0)) throw InvalidArgument("negative demand");
    for (const T& b : supplies)
      if (b < T(0)) throw InvalidArgument("negative supply");
    for (std::size_t s = 0; s < values.rows(); ++s)
      for (std::size_t t = 0; t < values.cols(); ++t)
        if (values(s, t) < T(0)) throw InvalidArgument("negative value");
  }
};

// Certified primal/dual pair: allocation x, buyer utilities u, product
// prices p. solve_welfare_lp returns these with complementary slackness.
template <typename T>
struct AssignmentSolution {
  Matrix<T> allocation;
  std::vector<T> buyer_utilities;
  std::vector<T> prices;
  T objective = T(0);
};

template <typename T>
struct EnvyFreeReport {
  bool ok = true;
  T worst_violation = T(0);
};

template <typename T>
struct CertificateReport {
  bool primal_ok = true;
  bool dual_ok = true;
  bool cs_ok = true;
  bool market_clearing = true;
  bool strong_duality_ok = true;
  T worst_violation = T(0);

  bool all_ok() const { return primal_ok && dual_ok && cs_ok && strong_duality_ok; }
};

// Envy-freeness: every positively assigned buyer holds a utility-maximizing,
// non-negative-utility product at the quoted prices.
template <typename T>
EnvyFreeReport<T> check_envy_free(const AssignmentProblem<T>& problem,
                                  const AssignmentSolution<T>& solution) {
  const T tol = ScalarTraits<T>::tolerance();
  EnvyFreeReport<T> report;
  auto note = [&](const T& breach) {
    if (breach > report.worst_violation) report.worst_violation = breach;
    if (breach > tol) report.ok = false;
  };
  for (std::size_t s = 0; s < problem.buyers(); ++s) {
    T best = problem.values(s, 0) - solution.prices[0];
    for (std::size_t k = 1; k < problem.products(); ++k)
      best = std::max(best, T(problem.values(s, k) - solution.prices[k]));
    for (std::size_t t = 0; t < problem.products(); ++t) {
      if (solution.allocation(s, t) <= tol) continue;
      T utility = problem.values(s, t) - solution.prices[t];
      note(T(best - utility));
      note(T(-utility));
    }
  }
  return report;
}

// Verifies primal feasibility, dual feasibility, complementary slackness and
// market clearing of a claimed primal/dual pair.
template <typename T>
CertificateReport<T> check_certificate(const AssignmentProblem<T>& problem,
                                       const AssignmentSolution<T>& solution) {
  const T tol = ScalarTraits<T>::tolerance();
  CertificateReport<T> report;
  auto breach = [&](bool& flag, const T& amount) {
    if (amount > report.worst_violation) report.worst_violation = amount;
    if (amount > tol) flag = false;
  };

  const std::size_t L = problem.buyers(), M = problem.products();
  for (std::size_t s = 0; s < L; ++s) {
    T row = solution.allocation.row_sum(s);
    breach(report.primal_ok, T(row - problem.demands[s]));
    if (abs_value(T(row - problem.demands[s])) > tol) report.market_clearing = false;
  }
  for (std::size_t t = 0; t < M; ++t) {
    T col = solution.allocation.col_sum(t);
    breach(report.primal_ok, T(col - problem.supplies[t]));
    if (abs_value(T(col - problem.supplies[t])) > tol) report.market_clearing = false;
  }
  for (std::size_t s = 0; s < L; ++s)
    for (std::size_t t = 0; t < M; ++t) breach(report.primal_ok, T(-solution.allocation(s, t)));

  for (std::size_t s = 0; s < L; ++s) breach(report.dual_ok, T(-solution.buyer_utilities[s]));
  for (std::size_t t = 0; t < M; ++t) breach(report.dual_ok, T(-solution.prices[t]));
  for (std::size_t s = 0; s < L; ++s)
    for (std::size_t t = 0; t < M; ++t)
      breach(report.dual_ok,
             T(problem.values(s, t) - solution.buyer_utilities[s] - solution.prices[t]));

  // Complementary slackness.
  for (std::size_t s = 0; s < L; ++s)
    for (std::size_t t = 0; t < M; ++t)
      if (solution.allocation(s, t) > tol)
        breach(report.cs_ok, abs_value(T(solution.buyer_utilities[s] + solution.prices[t] -
                                         problem.values(s, t))));
  for (std::size_t s = 0; s < L; ++s)
    if (solution.buyer_utilities[s] > tol)
      breach(report.cs_ok, abs_value(T(solution.allocation.row_sum(s) - problem.demands[s])));
  for (std::size_t t = 0; t < M; ++t)
    if (solution.prices[t] > tol)
      breach(report.cs_ok, abs_value(T(solution.allocation.col_sum(t) - problem.supplies[t])));

  T primal_value = T(0);
  for (std::size_t s = 0; s < L; ++s)
    for (std::size_t t = 0; t < M; ++t) primal_value += solution.allocation(s, t) * problem.values(s, t);
  T dual_value = T(0);
  for (std::size_t s = 0; s < L; ++s) dual_value += problem.demands[s] * solution.buyer_utilities[s];
  for (std::size_t t = 0; t < M; ++t) dual_value += problem.supplies[t] * solution.prices[t];
  breach(report.strong_duality_ok, abs_value(T(primal_value - dual_value)));
  return report;
}

namespace detail {

// Transportation simplex on the balanced equality form, maximization
// objective, Bland's rule on entering and leaving cells.
template <typename T>
class TransportSimplex {
 public:
  TransportSimplex(std::vector<T> demands, std::vector<T> supplies, Matrix<T> values)
      : a_(std::move(demands)), b_(std::move(supplies)), w_(std::move(values)),
        L_(a_.size()), M_(b_.size()),
        x_(L_, M_, T(0)), basic_(L_, M_, 0), mu_(L_), nu_(M_) {}

  void solve() {
    northwest_init();
    for (;;) {
      compute_potentials();
      std::size_t es = 0, et = 0;
      if (!find_entering(es, et)) break;
      pivot(es, et);
    }
    compute_potentials();
  }

  const Matrix<T>& allocation() const { return x_; }
  const std::vector<T>& row_potentials() const { return mu_; }
  const std::vector<T>& col_potentials() const { return nu_; }

 private:
  void northwest_init() {
    std::vector<T> ra = a_, rb = b_;
    std::size_t s = 0, t = 0;
    for (;;) {
      T q = std::min(ra[s], rb[t]);
      x_(s, t) = q;
      basic_(s, t) = 1;
      ra[s] -= q;
      rb[t] -= q;
      if (s + 1 == L_ && t + 1 == M_) break;
      if (t + 1 == M_) ++s;
      else if (s + 1 == L_) ++t;
      else if (ra[s] == T(0)) ++s;
      else ++t;
    }
  }

  // Basis cells form a spanning tree over buyer and product nodes; solve
  // mu[s] + nu[t] = w[s][t] on that tree.
  void compute_potentials() {
    std::vector<char> row_done(L_, 0), col_done(M_, 0);
    std::vector<std::size_t> stack;
    mu_[0] = T(0);
    row_done[0] = 1;
    stack.push_back(0);  // encoded: rows [0, L), cols [L, L+M)
    while (!stack.empty()) {
      std::size_t node = stack.back();
      stack.pop_back();
      if (node < L_) {
        for (std::size_t t = 0; t < M_; ++t)
          if (basic_(node, t) && !col_done[t]) {
            nu_[t] = w_(node, t) - mu_[node];
            col_done[t] = 1;
            stack.push_back(L_ + t);
          }
      } else {
        std::size_t t = node - L_;
        for (std::size_t s = 0; s < L_; ++s)
          if (basic_(s, t) && !row_done[s]) {
            mu_[s] = w_(s, t) - nu_[t];
            row_done[s] = 1;
            stack.push_back(s);
          }
      }
    }
  }

  bool find_entering(std::size_t& es, std::size_t& et) const {
    const T eps = entering_threshold();
    for (std::size_t s = 0; s < L_; ++s)
      for (std::size_t t = 0; t < M_; ++t) {
        if (basic_(s, t)) continue;
        if (w_(s, t) - mu_[s] - nu_[t] > eps) {
          es = s;
          et = t;
          return true;  // Bland: first improving cell in lexicographic order
        }
      }
    return false;
  }

  static T entering_threshold() {
    if constexpr (ScalarTraits<T>::exact) return T(0);
    else return T(1e-12);
  }

  // Unique alternating cycle through the entering cell: path in the basis
  // tree from the entering row node to the entering column node.
  void pivot(std::size_t es, std::size_t et) {
    const std::size_t nodes = L_ + M_;
    std::vector<int> parent(nodes, -1);
    std::vector<char> seen(nodes, 0);
    std::vector<std::size_t> queue;
    queue.push_back(es);
    seen[es] = 1;
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
      std::size_t node = queue[qi];
      if (node == L_ + et) break;
      if (node < L_) {
        for (std::size_t t = 0; t < M_; ++t)
          if (basic_(node, t) && !seen[L_ + t]) {
            seen[L_ + t] = 1;
            parent[L_ + t] = static_cast<int>(node);
            queue.push_back(L_ + t);
          }
      } else {
        std::size_t t = node - L_;
        for (std::size_t s = 0; s < L_; ++s)
          if (basic_(s, t) && !seen[s]) {
            seen[s] = 1;
            parent[s] = static_cast<int>(L_ + t);
            queue.push_back(s);
          }
      }
    }

    // Walk back from the column node to the row node, collecting the cycle
    // cells. The entering cell takes +theta; signs alternate along the path.
    std::vector<std::pair<std::size_t, std::size_t>> plus{{es, et}}, minus;
    std::size_t node = L_ + et;
    bool next_minus = true;
    while (node != es) {
      std::size_t up = static_cast<std::size_t>(parent[node]);
      std::size_t cell_s = node < L_ ? node : up;
      std::size_t cell_t = (node < L_ ? up : node) - L_;
      if (next_minus) minus.emplace_back(cell_s, cell_t);
      else plus.emplace_back(cell_s, cell_t);
      next_minus = !next_minus;
      node = up;
    }

    T theta = x_(minus[0].first, minus[0].second);
    std::pair<std::size_t, std::size_t> leaving = minus[0];
    for (const auto& cell : minus) {
      const T& v = x_(cell.first, cell.second);
      if (v < theta || (v == theta && cell < leaving)) {
        theta = v;
        leaving = cell;
      }
    }
    for (const auto& cell : plus) x_(cell.first, cell.second) += theta;
    for (const auto& cell : minus) x_(cell.first, cell.second) -= theta;
    basic_(es, et) = 1;
    basic_(leaving.first, leaving.second) = 0;
    x_(leaving.first, leaving.second) = T(0);
  }

  std::vector<T> a_, b_;
  Matrix<T> w_;
  std::size_t L_, M_;
  Matrix<T> x_;
  Matrix<std::uint8_t> basic_;
  std::vector<T> mu_, nu_;
};

template <typename T>
AssignmentSolution<T> solve_welfare_lp_impl(const AssignmentProblem<T>& problem) {
  const std::size_t L = problem.buyers(), M = problem.products();
  T total_a = T(0), total_b = T(0);
  for (const T& a : problem.demands) total_a += a;
  for (const T& b : problem.supplies) total_b += b;

  // Balance with a zero-value slack product or slack buyer.
  bool slack_col = total_a > total_b;
  bool slack_row = total_b > total_a;
  std::size_t Lb = L + (slack_row ? 1 : 0), Mb = M + (slack_col ? 1 : 0);
  std::vector<T> a(problem.demands), b(problem.supplies);
  if (slack_col) b.push_back(T(total_a - total_b));
  if (slack_row) a.push_back(T(total_b - total_a));
  Matrix<T> w(Lb, Mb, T(0));
  for (std::size_t s = 0; s < L; ++s)
    for (std::size_t t = 0; t < M; ++t) w(s, t) = problem.values(s, t);

  TransportSimplex<T> simplex(std::move(a), std::move(b), std::move(w));
  simplex.solve();
  const auto& mu = simplex.row_potentials();
  const auto& nu = simplex.col_potentials();

  // Shift potentials into a non-negative (u, p) pair for the <=-form dual:
  // u = mu + shift, p = nu - shift. With a slack product the slack's
  // potential is the right shift (rows feeding it land on u = 0); with a
  // slack buyer it is -mu[slack]; balanced problems shift by -min(mu).
  T shift;
  if (slack_col) {
    shift = nu[M];
  } else if (slack_row) {
    shift = T(-mu[L]);
  } else {
    T min_mu = mu[0];
    for (std::size_t s = 1; s < L; ++s) min_mu = std::min(min_mu, mu[s]);
    shift = T(-min_mu);
  }

  AssignmentSolution<T> solution;
  solution.allocation = Matrix<T>(L, M, T(0));
  for (std::size_t s = 0; s < L; ++s)
    for (std::size_t t = 0; t < M; ++t) solution.allocation(s, t) = simplex.allocation()(s, t);
  solution.buyer_utilities.resize(L);
  solution.prices.resize(M);
  for (std::size_t s = 0; s < L; ++s) solution.buyer_utilities[s] = mu[s] + shift;
  for (std::size_t t = 0; t < M; ++t) solution.prices[t] = nu[t] - shift;

  if constexpr (!ScalarTraits<T>::exact) {
    // Floating round-off can leave the duals a hair below zero.
    for (T& u : solution.buyer_utilities)
      if (u < 0 && u > -1e-7) u = 0;
    for (T& p : solution.prices)
      if (p < 0 && p > -1e-7) p = 0;
  }

  solution.objective = T(0);
  for (std::size_t s = 0; s < L; ++s)
    for (std::size_t t = 0; t < M; ++t)
      solution.objective += solution.allocation(s, t) * problem.values(s, t);
  return solution;
}

}  // namespace detail

template <typename T>
AssignmentSolution<T> solve_welfare_lp(const AssignmentProblem<T>& problem);

// Exact path: the certificate is exact by construction.
template <>
inline AssignmentSolution<Rat> solve_welfare_lp<Rat>(const AssignmentProblem<Rat>& problem) {
  problem.validate();
  AssignmentSolution<Rat> solution = detail::solve_welfare_lp_impl(problem);
  auto report = check_certificate(problem, solution);
  if (!report.all_ok()) throw NumericFailure("exact transportation certificate failed");
  return solution;
}

// Floating path with mandatory exact-rational retry before reporting failure.
template <>
inline AssignmentSolution<double> solve_welfare_lp<double>(const AssignmentProblem<double>& problem) {
  problem.validate();
  AssignmentSolution<double> solution = detail::solve_welfare_lp_impl(problem);
  if (check_certificate(problem, solution).all_ok()) return solution;

  AssignmentProblem<Rat> exact;
  exact.demands.reserve(problem.buyers());
  exact.supplies.reserve(problem.products());
  for (double a : problem.demands) exact.demands.push_back(rat_from_double(a));
  for (double b : problem.supplies) exact.supplies.push_back(rat_from_double(b));
  exact.values = map_matrix<double, Rat>(problem.values, [](double v) { return rat_from_double(v); });
  AssignmentSolution<Rat> exact_solution = solve_welfare_lp<Rat>(exact);

  solution.allocation =
      map_matrix<Rat, double>(exact_solution.allocation, [](const Rat& v) { return v.get_d(); });
  solution.buyer_utilities.clear();
  solution.prices.clear();
  for (const Rat& u : exact_solution.buyer_utilities) solution.buyer_utilities.push_back(u.get_d());
  for (const Rat& p : exact_solution.prices) solution.prices.push_back(p.get_d());
  solution.objective = exact_solution.objective.get_d();
  if (!check_certificate(problem, solution).all_ok())
    throw NumericFailure("transportation certificate failed after exact retry");
  return solution;
}

}  // namespace bicforge
