#pragma once

#include <utility>
#include <vector>

#include "bicforge/assignment.hpp"
#include "bicforge/interim.hpp"
#include "bicforge/model.hpp"

namespace bicforge {

// Realized mechanism outcome: one service per agent, charged prices, and the
// per-agent (reported type, manipulated type) trace.
template <typename T>
struct Outcome {
  Allocation allocation;
  std::vector<T> prices;
  std::vector<std::pair<int, int>> trace;
};

// Precomputed data of the welfare reduction: per agent the envy-free
// solution (x_i, p_i) of its induced assignment problem under the estimated
// interim values.
template <typename T>
struct ReductionTables {
  InterimMode mode = InterimMode::exact;
  double epsilon = 0.0;
  std::vector<Matrix<T>> interim_values;  // what_i, ell x ell
  std::vector<Matrix<T>> allocations;     // x_i, ell x ell, market-clearing
  std::vector<std::vector<T>> prices;     // p_i, ell

  int agents() const { return static_cast<int>(interim_values.size()); }
};

// Step 1 (pre-computation): solve every agent's induced assignment problem
// for a welfare-maximizing market-clearing allocation and envy-free prices.
template <typename T>
ReductionTables<T> precompute_from_table(const MechanismInstance& instance,
                                         const InterimTable<T>& table) {
  ReductionTables<T> tables;
  tables.mode = table.mode;
  tables.epsilon = table.epsilon;
  for (int i = 0; i < instance.agent_count(); ++i) {
    AssignmentProblem<T> problem = induced_problem(table, instance, i);
    AssignmentSolution<T> solution = solve_welfare_lp(problem);
    tables.interim_values.push_back(problem.values);
    tables.allocations.push_back(solution.allocation);
    tables.prices.push_back(solution.prices);
  }
  return tables;
}

inline ReductionTables<Rat> precompute_exact(const MechanismInstance& instance,
                                             const AllocationAlgorithm& algorithm) {
  return precompute_from_table(instance, exact_interim(instance, algorithm));
}

inline ReductionTables<double> precompute_estimated(const MechanismInstance& instance,
                                                    const AllocationAlgorithm& algorithm,
                                                    InterimMode mode, double epsilon, double c,
                                                    RngStream rng) {
  if (mode == InterimMode::relative)
    return precompute_from_table(instance, estimate_interim_relative(instance, algorithm, epsilon, c, rng));
  if (mode == InterimMode::absolute)
    return precompute_from_table(instance, estimate_interim_absolute(instance, algorithm, epsilon, rng));
  throw InvalidArgument("precompute_estimated expects an estimation mode");
}

// Exact decoupling distribution of one report: P(t | report s) = x_i(s,t)/f_i(s).
template <typename T>
std::vector<T> decouple_distribution(const ReductionTables<T>& tables,
                                     const MechanismInstance& instance, int agent, int report) {
  const Rat& f = instance.prior(agent, report);
  if (f == 0) throw ZeroProbabilityType("report has zero prior probability");
  T mass = ScalarTraits<T>::from_rat(f);
  const Matrix<T>& x = tables.allocations[agent];
  std::vector<T> dist(x.cols());
  for (std::size_t t = 0; t < x.cols(); ++t) dist[t] = x(static_cast<std::size_t>(report), t) / mass;
  return dist;
}

// Step 2 (decoupling): sample the manipulated type.
template <typename T>
int decouple(const ReductionTables<T>& tables, const MechanismInstance& instance, int agent,
             int report, RngStream& rng) {
  std::vector<T> dist = decouple_distribution(tables, instance, agent, report);
  std::vector<double> weights(dist.size());
  for (std::size_t t = 0; t < dist.size(); ++t) weights[t] = to_double(dist[t]);
  return static_cast<int>(rng.categorical(weights));
}

// Step 3b price: p_i^t * v_i^s(S_i) / what_i^{st}; zero estimated value means
// a zero charge. Never exceeds the realized value while (x_i, p_i) is
// envy-free, which gives per-realization IR.
template <typename T>
T reduction_price(const ReductionTables<T>& tables, int agent, int report, int manipulated,
                  const Rat& realized_value) {
  const T& what = tables.interim_values[agent](report, manipulated);
  if (what <= ScalarTraits<T>::tolerance()) return T(0);
  T price = tables.prices[agent][manipulated];
  return price * ScalarTraits<T>::from_rat(realized_value) / what;
}

// One full mechanism run on a reported profile.
template <typename T>
Outcome<T> run_mechanism(const ReductionTables<T>& tables, const MechanismInstance& instance,
                         const AllocationAlgorithm& algorithm,
                         const ValuationProfile& reported, RngStream& rng) {
  const int n = instance.agent_count();
  ValuationProfile manipulated;
  manipulated.types.resize(n);
  Outcome<T> outcome;
  outcome.trace.resize(n);
  for (int i = 0; i < n; ++i) {
    int t = decouple(tables, instance, i, reported.types[i], rng);
    manipulated.types[i] = t;
    outcome.trace[i] = {reported.types[i], t};
  }
  outcome.allocation = algorithm.sample(manipulated, rng);
  outcome.prices.resize(n);
  for (int i = 0; i < n; ++i) {
    Rat value = instance.value(i, reported.types[i], outcome.allocation[i]);
    outcome.prices[i] =
        reduction_price(tables, i, reported.types[i], manipulated.types[i], value);
  }
  return outcome;
}

// Social welfare of running the algorithm directly under the prior,
// read off exact interim tables: sum_i sum_s f_i(s) w_i(s,s).
template <typename T>
T algorithm_welfare(const ReductionTables<T>& tables, const MechanismInstance& instance) {
  T total = ScalarTraits<T>::zero();
  for (int i = 0; i < instance.agent_count(); ++i)
    for (int s = 0; s < instance.support_size(); ++s)
      total += ScalarTraits<T>::from_rat(instance.prior(i, s)) *
               tables.interim_values[i](s, s);
  return total;
}

// Welfare of the reduction as predicted by the tables:
// sum_i sum_{s,t} x_i(s,t) w_i(s,t).
template <typename T>
T table_welfare(const ReductionTables<T>& tables) {
  T total = ScalarTraits<T>::zero();
  for (int i = 0; i < tables.agents(); ++i)
    for (std::size_t s = 0; s < tables.allocations[i].rows(); ++s)
      for (std::size_t t = 0; t < tables.allocations[i].cols(); ++t)
        total += tables.allocations[i](s, t) * tables.interim_values[i](s, t);
  return total;
}

}  // namespace bicforge
