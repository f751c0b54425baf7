#pragma once

#include <string>
#include <utility>
#include <vector>

#include "bicforge/assignment.hpp"
#include "bicforge/interim.hpp"
#include "bicforge/lp.hpp"
#include "bicforge/model.hpp"
#include "bicforge/reduction_sw.hpp"

namespace bicforge {

enum class LadderObjective { revenue, surplus };

// Diagnostics of one reserve-ladder run: the geometric reserve levels and
// the projected revenue / residual surplus achieved per level.
template <typename T>
struct LadderInfo {
  T u_max = T(0);
  int levels = 0;        // ceil(log2(1/delta)) + 1
  int chosen_level = 0;  // 1-based; 0 when the ladder is empty or degenerate
  std::vector<T> reserve;
  std::vector<T> level_revenue;
  std::vector<T> level_surplus;
};

template <typename T>
struct LadderResult {
  AssignmentSolution<T> solution;
  LadderInfo<T> info;
};

namespace detail {

// ceil(log2(1/delta)) + 1 geometric halvings. The extra level is needed:
// with exactly ceil(log2(1/delta)) levels the summed level revenues can drop
// below half the assignment welfare (the tail of the geometric series is
// bounded by delta * u_max, not delta * u_max / 2), and random induced
// problems do hit that corner. One more halving restores the factor.
inline int ladder_levels(const Rat& delta) {
  if (delta <= 0 || delta > 1) throw InvalidArgument("granularity must lie in (0, 1]");
  Rat inv = 1 / delta;
  int k = 0;
  Rat pow(1);
  while (pow < inv) {
    pow *= 2;
    ++k;
  }
  return k + 1;
}

template <typename T>
AssignmentSolution<T> zero_solution(const AssignmentProblem<T>& problem) {
  AssignmentSolution<T> solution;
  solution.allocation = Matrix<T>(problem.buyers(), problem.products(), T(0));
  solution.buyer_utilities.assign(problem.buyers(), T(0));
  solution.prices.assign(problem.products(), T(0));
  solution.objective = T(0);
  return solution;
}

// Picks, within the dual-optimal face of the variant problem, the price
// vector that extremizes sum_t weight[t] * p[t]. Any point of that face is
// envy-free for the variant optimum, so this only sharpens the projected
// objective; any dual-optimal price vector is equally valid here.
inline std::vector<Rat> refine_prices(const AssignmentProblem<Rat>& variant,
                                      const AssignmentSolution<Rat>& solution,
                                      const std::vector<Rat>& weights, bool maximize) {
  const std::size_t L = variant.buyers(), M = variant.products();
  std::vector<int> var_of_price(M, -1);
  std::size_t num_vars = L;
  for (std::size_t t = 0; t < M; ++t)
    if (variant.supplies[t] > 0) var_of_price[t] = static_cast<int>(num_vars++);

  lp::Problem p;
  p.num_vars = num_vars;
  p.objective.assign(num_vars, Rat(0));
  for (std::size_t t = 0; t < M; ++t)
    if (var_of_price[t] >= 0)
      p.objective[var_of_price[t]] = maximize ? weights[t] : -weights[t];

  for (std::size_t s = 0; s < L; ++s)
    for (std::size_t t = 0; t < M; ++t) {
      lp::Row row;
      row.rel = lp::Rel::ge;
      row.coeffs.push_back({s, Rat(1)});
      Rat rhs = variant.values(s, t);
      if (var_of_price[t] >= 0) row.coeffs.push_back({static_cast<std::size_t>(var_of_price[t]), Rat(1)});
      else rhs -= solution.prices[t];  // zero-supply product keeps its price
      row.rhs = rhs;
      p.rows.push_back(std::move(row));
    }

  lp::Row duality;
  duality.rel = lp::Rel::eq;
  duality.rhs = solution.objective;
  for (std::size_t s = 0; s < L; ++s)
    if (variant.demands[s] != 0) duality.coeffs.push_back({s, variant.demands[s]});
  for (std::size_t t = 0; t < M; ++t)
    if (var_of_price[t] >= 0) duality.coeffs.push_back({static_cast<std::size_t>(var_of_price[t]), variant.supplies[t]});
  p.rows.push_back(std::move(duality));

  lp::Solution refined = lp::solve(p);
  if (!refined.feasible || !refined.bounded) return solution.prices;  // keep solver duals
  std::vector<Rat> prices(M);
  for (std::size_t t = 0; t < M; ++t)
    prices[t] = var_of_price[t] >= 0 ? refined.values[var_of_price[t]] : solution.prices[t];
  return prices;
}

// Fills unserved demand onto slack products the buyer currently likes best,
// in index order, until no buyer with leftover demand has positive utility
// available on a product with leftover supply. Fill cells are utility
// maximizers, so envy-freeness is preserved; revenue never drops and
// residual surplus only grows. Needed because a projected solution can
// strand a buyer with positive envy toward an unsold product, which would
// break truthful tightness in the meta-reduction.
inline void complete_market(const AssignmentProblem<Rat>& problem, AssignmentSolution<Rat>& sol) {
  const std::size_t L = problem.buyers(), M = problem.products();
  std::vector<Rat> row_slack(L), col_slack(M);
  for (std::size_t s = 0; s < L; ++s) row_slack[s] = problem.demands[s] - sol.allocation.row_sum(s);
  for (std::size_t t = 0; t < M; ++t) col_slack[t] = problem.supplies[t] - sol.allocation.col_sum(t);
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t s = 0; s < L; ++s) {
      if (row_slack[s] <= 0) continue;
      Rat best(0);
      for (std::size_t t = 0; t < M; ++t)
        best = std::max(best, Rat(problem.values(s, t) - sol.prices[t]));
      if (best <= 0) continue;
      for (std::size_t t = 0; t < M && row_slack[s] > 0; ++t) {
        if (col_slack[t] <= 0) continue;
        if (problem.values(s, t) - sol.prices[t] != best) continue;
        Rat fill = std::min(row_slack[s], col_slack[t]);
        sol.allocation(s, t) += fill;
        row_slack[s] -= fill;
        col_slack[t] -= fill;
        sol.objective += fill * problem.values(s, t);
        changed = true;
      }
    }
  }
}

template <typename T>
AssignmentProblem<Rat> to_exact(const AssignmentProblem<T>& problem) {
  AssignmentProblem<Rat> exact;
  for (const T& a : problem.demands) exact.demands.push_back(rat_from_double(to_double(a)));
  for (const T& b : problem.supplies) exact.supplies.push_back(rat_from_double(to_double(b)));
  exact.values = map_matrix<T, Rat>(problem.values,
                                    [](const T& v) { return rat_from_double(to_double(v)); });
  return exact;
}

template <>
inline AssignmentProblem<Rat> to_exact<Rat>(const AssignmentProblem<Rat>& problem) {
  return problem;
}

// Shared ladder driver over exact arithmetic. For C_R each product gets a
// dummy buyer with demand 1 + delta and value u_k for that product alone;
// for C_RS each buyer gets a dummy product with supply 1 + delta it values
// at u_k. Projections onto the original index set stay envy-free.
inline LadderResult<Rat> run_ladder(const AssignmentProblem<Rat>& problem, const Rat& delta,
                                    LadderObjective objective) {
  problem.validate();
  const std::size_t L = problem.buyers(), M = problem.products();
  LadderResult<Rat> result;
  result.info.levels = ladder_levels(delta);

  AssignmentSolution<Rat> base = solve_welfare_lp(problem);
  Rat u_max(0);
  for (std::size_t s = 0; s < L; ++s)
    for (std::size_t t = 0; t < M; ++t)
      if (base.allocation(s, t) > 0) u_max = std::max(u_max, problem.values(s, t));
  result.info.u_max = u_max;
  if (u_max == 0 || result.info.levels == 0) {
    result.solution = zero_solution(problem);
    return result;
  }

  Rat best_score(-1);
  Rat reserve = u_max;
  for (int level = 1; level <= result.info.levels; ++level) {
    reserve /= 2;

    AssignmentProblem<Rat> variant;
    if (objective == LadderObjective::revenue) {
      variant.demands = problem.demands;
      for (std::size_t t = 0; t < M; ++t) variant.demands.push_back(1 + delta);
      variant.supplies = problem.supplies;
      variant.values = Matrix<Rat>(L + M, M, Rat(0));
      for (std::size_t s = 0; s < L; ++s)
        for (std::size_t t = 0; t < M; ++t) variant.values(s, t) = problem.values(s, t);
      for (std::size_t t = 0; t < M; ++t) variant.values(L + t, t) = reserve;
    } else {
      variant.demands = problem.demands;
      variant.supplies = problem.supplies;
      for (std::size_t s = 0; s < L; ++s) variant.supplies.push_back(1 + delta);
      variant.values = Matrix<Rat>(L, M + L, Rat(0));
      for (std::size_t s = 0; s < L; ++s)
        for (std::size_t t = 0; t < M; ++t) variant.values(s, t) = problem.values(s, t);
      for (std::size_t s = 0; s < L; ++s) variant.values(s, M + s) = reserve;
    }

    AssignmentSolution<Rat> solved = solve_welfare_lp(variant);

    // Projected sales per original product drive the price refinement.
    std::vector<Rat> weights(variant.products(), Rat(0));
    for (std::size_t t = 0; t < M; ++t)
      for (std::size_t s = 0; s < L; ++s) weights[t] += solved.allocation(s, t);
    std::vector<Rat> prices = refine_prices(variant, solved, weights,
                                            objective == LadderObjective::revenue);

    AssignmentSolution<Rat> projected;
    projected.allocation = Matrix<Rat>(L, M, Rat(0));
    for (std::size_t s = 0; s < L; ++s)
      for (std::size_t t = 0; t < M; ++t) projected.allocation(s, t) = solved.allocation(s, t);
    projected.prices.assign(prices.begin(), prices.begin() + M);
    projected.buyer_utilities.assign(L, Rat(0));
    for (std::size_t s = 0; s < L; ++s) {
      Rat best(0);
      for (std::size_t t = 0; t < M; ++t)
        best = std::max(best, Rat(problem.values(s, t) - projected.prices[t]));
      projected.buyer_utilities[s] = best;
    }
    projected.objective = Rat(0);
    for (std::size_t s = 0; s < L; ++s)
      for (std::size_t t = 0; t < M; ++t)
        projected.objective += projected.allocation(s, t) * problem.values(s, t);
    complete_market(problem, projected);

    Rat revenue(0), surplus(0);
    for (std::size_t s = 0; s < L; ++s)
      for (std::size_t t = 0; t < M; ++t) {
        revenue += projected.allocation(s, t) * projected.prices[t];
        surplus += projected.allocation(s, t) * (problem.values(s, t) - projected.prices[t]);
      }

    result.info.reserve.push_back(reserve);
    result.info.level_revenue.push_back(revenue);
    result.info.level_surplus.push_back(surplus);
    const Rat& score = objective == LadderObjective::revenue ? revenue : surplus;
    if (score > best_score) {
      best_score = score;
      result.solution = projected;
      result.info.chosen_level = level;
    }
  }
  return result;
}

template <typename T>
LadderResult<T> run_ladder_as(const AssignmentProblem<T>& problem, const Rat& delta,
                              LadderObjective objective) {
  LadderResult<Rat> exact = run_ladder(to_exact(problem), delta, objective);
  if constexpr (ScalarTraits<T>::exact) {
    return exact;
  } else {
    LadderResult<double> out;
    out.solution.allocation =
        map_matrix<Rat, double>(exact.solution.allocation, [](const Rat& v) { return v.get_d(); });
    for (const Rat& u : exact.solution.buyer_utilities)
      out.solution.buyer_utilities.push_back(u.get_d());
    for (const Rat& p : exact.solution.prices) out.solution.prices.push_back(p.get_d());
    out.solution.objective = exact.solution.objective.get_d();
    out.info.u_max = exact.info.u_max.get_d();
    out.info.levels = exact.info.levels;
    out.info.chosen_level = exact.info.chosen_level;
    for (const Rat& r : exact.info.reserve) out.info.reserve.push_back(r.get_d());
    for (const Rat& r : exact.info.level_revenue) out.info.level_revenue.push_back(r.get_d());
    for (const Rat& r : exact.info.level_surplus) out.info.level_surplus.push_back(r.get_d());
    return out;
  }
}

}  // namespace detail

// Strong envy-freeness: any buyer with leftover demand has no positive
// utility available at the quoted prices. Welfare-LP solutions satisfy this
// through complementary slackness, and it is exactly what makes truthful
// reporting tight in the meta-reduction. Dummy-product ladder projections
// can violate it when the coveted products are sold out.
template <typename T>
bool tight_or_indifferent(const AssignmentProblem<T>& problem,
                          const AssignmentSolution<T>& solution) {
  const T tol = ScalarTraits<T>::tolerance();
  for (std::size_t s = 0; s < problem.buyers(); ++s) {
    T slack = problem.demands[s] - solution.allocation.row_sum(s);
    if (slack <= tol) continue;
    for (std::size_t t = 0; t < problem.products(); ++t) {
      if (problem.supplies[t] <= tol) continue;  // never available, never drawn
      if (problem.values(s, t) - solution.prices[t] > tol) return false;
    }
  }
  return true;
}

// Assignment algorithm C_R: reserve ladder tuned for revenue.
template <typename T>
AssignmentSolution<T> reserve_ladder_revenue(const AssignmentProblem<T>& problem,
                                             const Rat& delta) {
  return detail::run_ladder_as(problem, delta, LadderObjective::revenue).solution;
}

// Assignment algorithm C_RS: reserve ladder tuned for residual surplus.
template <typename T>
AssignmentSolution<T> reserve_ladder_surplus(const AssignmentProblem<T>& problem,
                                             const Rat& delta) {
  return detail::run_ladder_as(problem, delta, LadderObjective::surplus).solution;
}

// Precomputed data of the downward-closed meta-reduction: per agent a
// possibly non-market-clearing envy-free solution plus the leftover virtual
// supplies y_i that route unserved reports.
template <typename T>
struct MetaTables {
  InterimMode mode = InterimMode::exact;
  double epsilon = 0.0;
  LadderObjective objective = LadderObjective::revenue;
  std::vector<Matrix<T>> interim_values;
  std::vector<Matrix<T>> allocations;
  std::vector<std::vector<T>> prices;
  std::vector<std::vector<T>> leftover;  // y_i^t = f_i(t) - sum_s x_i(s,t)
  std::vector<T> leftover_total;         // y_i
  std::vector<LadderInfo<T>> ladder;

  int agents() const { return static_cast<int>(interim_values.size()); }
};

template <typename T>
MetaTables<T> meta_precompute_from_table(const MechanismInstance& instance,
                                         const InterimTable<T>& table,
                                         LadderObjective objective) {
  if (!instance.is_downward_closed())
    throw NotDownwardClosed("meta-reduction needs a downward-closed instance with a null service");
  Rat delta = granularity(instance);
  MetaTables<T> tables;
  tables.mode = table.mode;
  tables.epsilon = table.epsilon;
  tables.objective = objective;
  const int ell = instance.support_size();
  for (int i = 0; i < instance.agent_count(); ++i) {
    AssignmentProblem<T> problem = induced_problem(table, instance, i);
    LadderResult<T> ladder = detail::run_ladder_as(problem, delta, objective);
    tables.interim_values.push_back(problem.values);
    tables.allocations.push_back(ladder.solution.allocation);
    tables.prices.push_back(ladder.solution.prices);
    tables.ladder.push_back(ladder.info);
    std::vector<T> leftover(ell);
    T total = ScalarTraits<T>::zero();
    for (int t = 0; t < ell; ++t) {
      T y = problem.supplies[t] - ladder.solution.allocation.col_sum(t);
      if constexpr (!ScalarTraits<T>::exact) {
        if (y < 0 && y > -1e-9) y = 0;
      }
      leftover[t] = y;
      total += y;
    }
    tables.leftover.push_back(std::move(leftover));
    tables.leftover_total.push_back(total);
  }
  return tables;
}

inline MetaTables<Rat> meta_precompute_exact(const MechanismInstance& instance,
                                             const AllocationAlgorithm& algorithm,
                                             LadderObjective objective) {
  return meta_precompute_from_table(instance, exact_interim(instance, algorithm), objective);
}

inline MetaTables<double> meta_precompute_estimated(const MechanismInstance& instance,
                                                    const AllocationAlgorithm& algorithm,
                                                    LadderObjective objective, InterimMode mode,
                                                    double epsilon, double c, RngStream rng) {
  if (mode == InterimMode::relative)
    return meta_precompute_from_table(
        instance, estimate_interim_relative(instance, algorithm, epsilon, c, rng), objective);
  if (mode == InterimMode::absolute)
    return meta_precompute_from_table(
        instance, estimate_interim_absolute(instance, algorithm, epsilon, rng), objective);
  throw InvalidArgument("meta_precompute_estimated expects an estimation mode");
}

struct MetaDraw {
  int manipulated = 0;
  bool served = false;
};

// Exact decoupling distribution of the meta-reduction for one report:
// (t, served) with probability x_i(s,t)/f_i(s), and (t, unserved) with the
// residual probability split as y_i^t / y_i.
template <typename T>
std::vector<std::pair<MetaDraw, T>> meta_decouple_distribution(const MetaTables<T>& tables,
                                                               const MechanismInstance& instance,
                                                               int agent, int report) {
  const Rat& f = instance.prior(agent, report);
  if (f == 0) throw ZeroProbabilityType("report has zero prior probability");
  T mass = ScalarTraits<T>::from_rat(f);
  const Matrix<T>& x = tables.allocations[agent];
  const int ell = instance.support_size();
  std::vector<std::pair<MetaDraw, T>> dist;
  T served_total = ScalarTraits<T>::zero();
  for (int t = 0; t < ell; ++t) {
    T p = x(static_cast<std::size_t>(report), static_cast<std::size_t>(t)) / mass;
    served_total += p;
    if (p > ScalarTraits<T>::tolerance()) dist.push_back({{t, true}, p});
  }
  T residual = T(1) - served_total;
  if constexpr (!ScalarTraits<T>::exact) {
    if (residual < 0) residual = 0;
  }
  if (residual > ScalarTraits<T>::tolerance()) {
    const T& total = tables.leftover_total[agent];
    if (total <= ScalarTraits<T>::tolerance())
      throw ZeroProbabilityType("unserved branch has no leftover supply to draw from");
    for (int t = 0; t < ell; ++t) {
      T y = tables.leftover[agent][t];
      if (y > ScalarTraits<T>::tolerance()) dist.push_back({{t, false}, residual * y / total});
    }
  }
  return dist;
}

template <typename T>
MetaDraw meta_decouple(const MetaTables<T>& tables, const MechanismInstance& instance, int agent,
                       int report, RngStream& rng) {
  auto dist = meta_decouple_distribution(tables, instance, agent, report);
  std::vector<double> weights(dist.size());
  for (std::size_t k = 0; k < dist.size(); ++k) weights[k] = to_double(dist[k].second);
  return dist[rng.categorical(weights)].first;
}

template <typename T>
T reduction_price_meta(const MetaTables<T>& tables, int agent, int report, int manipulated,
                       const Rat& realized_value) {
  const T& what = tables.interim_values[agent](report, manipulated);
  if (what <= ScalarTraits<T>::tolerance()) return T(0);
  T price = tables.prices[agent][manipulated];
  return price * ScalarTraits<T>::from_rat(realized_value) / what;
}

// One run of the meta-mechanism: unserved agents fall back to the null
// service (feasible by downward closure) and are charged zero.
template <typename T>
Outcome<T> run_meta_mechanism(const MetaTables<T>& tables, const MechanismInstance& instance,
                              const AllocationAlgorithm& algorithm,
                              const ValuationProfile& reported, RngStream& rng) {
  const int n = instance.agent_count();
  ValuationProfile manipulated;
  manipulated.types.resize(n);
  std::vector<bool> served(n);
  Outcome<T> outcome;
  outcome.trace.resize(n);
  for (int i = 0; i < n; ++i) {
    MetaDraw draw = meta_decouple(tables, instance, i, reported.types[i], rng);
    manipulated.types[i] = draw.manipulated;
    served[i] = draw.served;
    outcome.trace[i] = {reported.types[i], draw.manipulated};
  }
  Allocation tentative = algorithm.sample(manipulated, rng);
  outcome.allocation.assign(n, 0);
  outcome.prices.assign(n, T(0));
  for (int i = 0; i < n; ++i) {
    if (!served[i]) continue;
    outcome.allocation[i] = tentative[i];
    Rat value = instance.value(i, reported.types[i], tentative[i]);
    outcome.prices[i] = reduction_price_meta(tables, i, reported.types[i], manipulated.types[i],
                                             value);
  }
  return outcome;
}

// Table-level prediction of the meta-mechanism's expected revenue and
// residual surplus: the sums over the manipulated assignment problems.
template <typename T>
std::pair<T, T> meta_table_objectives(const MetaTables<T>& tables) {
  T revenue = ScalarTraits<T>::zero(), surplus = ScalarTraits<T>::zero();
  for (int i = 0; i < tables.agents(); ++i) {
    const Matrix<T>& x = tables.allocations[i];
    for (std::size_t s = 0; s < x.rows(); ++s)
      for (std::size_t t = 0; t < x.cols(); ++t) {
        revenue += x(s, t) * tables.prices[i][t];
        surplus += x(s, t) * (tables.interim_values[i](s, t) - tables.prices[i][t]);
      }
  }
  return {revenue, surplus};
}

// The complementary lower-bound instance: a single agent and one item, value
// 2^k with probability 2^-k for k = 1..K, and value 0 with the remaining
// probability 2^-K. Granularity 2^-K, optimal social welfare K.
inline MechanismInstance make_lower_bound_instance(int levels) {
  if (levels < 1) throw InvalidArgument("levels must be >= 1");
  std::vector<std::vector<Valuation>> supports(1);
  std::vector<Rat> prior;
  Rat two_pow(1);
  for (int k = 1; k <= levels; ++k) {
    two_pow *= 2;
    supports[0].push_back(Valuation::explicit_list({Rat(0), two_pow}));
    prior.push_back(1 / two_pow);
  }
  supports[0].push_back(Valuation::explicit_list({Rat(0), Rat(0)}));
  prior.push_back(1 / two_pow);
  return build_instance({2}, Feasibility::unrestricted(), supports, {prior}, /*has_null=*/true);
}

}  // namespace bicforge
