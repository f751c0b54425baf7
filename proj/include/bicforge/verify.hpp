#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "bicforge/assignment.hpp"
#include "bicforge/mechanism.hpp"
#include "bicforge/model.hpp"

namespace bicforge {

// Exact brute-force verification: interim utilities, BIC and IR
// certification, performance measurement, optimal benchmarks.

// Visits every truthful type profile with positive prior mass.
template <typename Fn>
void for_each_support_profile(const MechanismInstance& instance, Fn fn) {
  const int n = instance.agent_count();
  const int ell = instance.support_size();
  std::vector<int> idx(n, 0);
  for (;;) {
    Rat weight(1);
    bool skip = false;
    for (int i = 0; i < n; ++i) {
      const Rat& f = instance.prior(i, idx[i]);
      if (f == 0) {
        skip = true;
        break;
      }
      weight *= f;
    }
    if (!skip) {
      ValuationProfile profile;
      profile.types = idx;
      fn(profile, weight);
    }
    int i = 0;
    for (; i < n; ++i) {
      if (++idx[i] < ell) break;
      idx[i] = 0;
    }
    if (i == n) break;
  }
}

// Interim utility matrices U_i(s -> t): expected utility of true type s
// reporting t while everyone else reports truthfully. Entries where either
// type has zero prior mass are left at zero; such reports are rejected by
// the reductions and such true types never occur.
template <typename T>
struct UtilityTables {
  std::vector<Matrix<T>> utilities;
};

template <typename T>
UtilityTables<T> interim_utilities(const MechanismInstance& instance, const Mechanism<T>& mechanism) {
  if (!mechanism.supports_exact())
    throw EnumerationTooLarge("mechanism does not expose exact outcome distributions");
  if (detail::opponent_profile_count(instance) > kEnumerationGuard)
    throw EnumerationTooLarge("opponent profile space exceeds guard");

  const int n = instance.agent_count();
  const int ell = instance.support_size();
  UtilityTables<T> tables;
  tables.utilities.assign(n, Matrix<T>(ell, ell, ScalarTraits<T>::zero()));

  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < ell; ++t) {
      if (instance.prior(i, t) == 0) continue;
      ValuationProfile base;
      base.types.assign(n, 0);
      base.types[i] = t;
      detail::for_each_opponent_profile(
          instance, i, base, [&](const ValuationProfile& reported, const Rat& weight) {
            T w = ScalarTraits<T>::from_rat(weight);
            for (const MechanismAtom<T>& atom : mechanism.enumerate(reported)) {
              for (int s = 0; s < ell; ++s) {
                if (instance.prior(i, s) == 0) continue;
                T value = ScalarTraits<T>::from_rat(instance.value(i, s, atom.allocation[i]));
                tables.utilities[i](s, t) += w * atom.probability * (value - atom.prices[i]);
              }
            }
          });
    }
  }
  return tables;
}

template <typename T>
struct IncentiveReport {
  std::vector<Matrix<T>> regret;  // r_i(s,t) = U_i(s->t) - U_i(s->s), diagonal 0
  T max_regret = T(0);
  bool bic_ok = true;
  double epsilon = 0.0;
};

// max_regret <= epsilon + 1e-9 passes.
template <typename T>
IncentiveReport<T> check_bic(const MechanismInstance& instance, const UtilityTables<T>& tables,
                             double epsilon) {
  IncentiveReport<T> report;
  report.epsilon = epsilon;
  const int n = instance.agent_count();
  const int ell = instance.support_size();
  report.regret.assign(n, Matrix<T>(ell, ell, ScalarTraits<T>::zero()));
  for (int i = 0; i < n; ++i)
    for (int s = 0; s < ell; ++s) {
      if (instance.prior(i, s) == 0) continue;
      for (int t = 0; t < ell; ++t) {
        if (s == t || instance.prior(i, t) == 0) continue;
        T regret = tables.utilities[i](s, t) - tables.utilities[i](s, s);
        report.regret[i](s, t) = regret;
        if (regret > report.max_regret) report.max_regret = regret;
      }
    }
  if (to_double(report.max_regret) > epsilon + 1e-9) report.bic_ok = false;
  return report;
}

template <typename T>
struct IrReport {
  bool ok = true;
  T worst_violation = T(0);
};

// Sweeps every (truthful profile, mechanism randomness) realization and
// flags any negative utility.
template <typename T>
IrReport<T> check_ir(const MechanismInstance& instance, const Mechanism<T>& mechanism) {
  if (!mechanism.supports_exact())
    throw EnumerationTooLarge("mechanism does not expose exact outcome distributions");
  const int n = instance.agent_count();
  IrReport<T> report;
  const T tol = ScalarTraits<T>::tolerance();
  for_each_support_profile(instance, [&](const ValuationProfile& profile, const Rat&) {
    for (const MechanismAtom<T>& atom : mechanism.enumerate(profile)) {
      if (atom.probability <= ScalarTraits<T>::tolerance()) continue;
      for (int i = 0; i < n; ++i) {
        T value = ScalarTraits<T>::from_rat(instance.value(i, profile.types[i], atom.allocation[i]));
        T utility = value - atom.prices[i];
        if (utility < -report.worst_violation) report.worst_violation = T(-utility);
        if (utility < -tol) report.ok = false;
      }
    }
  });
  return report;
}

template <typename T>
struct Performance {
  T social_welfare = T(0);
  T revenue = T(0);
  T residual_surplus = T(0);
};

// Exact expected social welfare, revenue and residual surplus under
// truthful reporting. SW = R + RS holds by construction of the sweep.
template <typename T>
Performance<T> performance(const MechanismInstance& instance, const Mechanism<T>& mechanism) {
  if (!mechanism.supports_exact())
    throw EnumerationTooLarge("mechanism does not expose exact outcome distributions");
  Performance<T> perf;
  const int n = instance.agent_count();
  for_each_support_profile(instance, [&](const ValuationProfile& profile, const Rat& weight) {
    T w = ScalarTraits<T>::from_rat(weight);
    for (const MechanismAtom<T>& atom : mechanism.enumerate(profile)) {
      for (int i = 0; i < n; ++i) {
        T value = ScalarTraits<T>::from_rat(instance.value(i, profile.types[i], atom.allocation[i]));
        perf.social_welfare += w * atom.probability * value;
        perf.revenue += w * atom.probability * atom.prices[i];
        perf.residual_surplus += w * atom.probability * (value - atom.prices[i]);
      }
    }
  });
  return perf;
}

// Monte Carlo fallback with reported standard errors.
template <typename T>
Performance<double> performance_monte_carlo(const MechanismInstance& instance,
                                            const Mechanism<T>& mechanism, int samples,
                                            RngStream rng, Performance<double>* standard_errors) {
  double sw = 0, sw2 = 0, rev = 0, rev2 = 0;
  for (int k = 0; k < samples; ++k) {
    RngStream local = rng.derive(static_cast<std::uint64_t>(k));
    ValuationProfile profile = sample_profile(instance, local);
    Outcome<T> outcome = mechanism.sample(profile, local);
    double run_sw = 0, run_rev = 0;
    for (int i = 0; i < instance.agent_count(); ++i) {
      run_sw += instance.valuation(i, profile.types[i]).value_d(outcome.allocation[i]);
      run_rev += to_double(outcome.prices[i]);
    }
    sw += run_sw;
    sw2 += run_sw * run_sw;
    rev += run_rev;
    rev2 += run_rev * run_rev;
  }
  double n = static_cast<double>(samples);
  Performance<double> perf;
  perf.social_welfare = sw / n;
  perf.revenue = rev / n;
  perf.residual_surplus = perf.social_welfare - perf.revenue;
  if (standard_errors) {
    double var_sw = std::max(0.0, (sw2 / n - perf.social_welfare * perf.social_welfare) / n);
    double var_rev = std::max(0.0, (rev2 / n - perf.revenue * perf.revenue) / n);
    standard_errors->social_welfare = std::sqrt(var_sw);
    standard_errors->revenue = std::sqrt(var_rev);
    standard_errors->residual_surplus = std::sqrt(var_sw) + std::sqrt(var_rev);
  }
  return perf;
}

// OPT: expected welfare of the pointwise-optimal feasible allocation.
inline Rat optimal_welfare(const MechanismInstance& instance) {
  Rat total(0);
  if (instance.is_combinatorial()) {
    // Partition instances: subset DP over item masks per profile.
    const int n = instance.agent_count();
    const int m = instance.item_count();
    const int full = (1 << m) - 1;
    std::size_t work = 1;
    for (int i = 0; i < n; ++i) work *= static_cast<std::size_t>(instance.support_size());
    std::size_t pow3 = 1;
    for (int j = 0; j < m; ++j) pow3 *= 3;
    if (work * pow3 * static_cast<std::size_t>(n) > kEnumerationGuard)
      throw EnumerationTooLarge("optimal welfare enumeration exceeds guard");

    for_each_support_profile(instance, [&](const ValuationProfile& profile, const Rat& weight) {
      std::vector<std::vector<Rat>> best(n + 1, std::vector<Rat>(full + 1, Rat(0)));
      for (int i = 1; i <= n; ++i) {
        const Valuation& v = instance.valuation(i - 1, profile.types[i - 1]);
        for (int mask = 0; mask <= full; ++mask) {
          // Iterate T over submasks of mask: agent i takes T.
          Rat b = best[i - 1][mask];  // T = empty
          for (int sub = mask; sub; sub = (sub - 1) & mask) {
            Rat cand = best[i - 1][mask ^ sub] + v.value(sub);
            if (cand > b) b = cand;
          }
          best[i][mask] = b;
        }
      }
      total += weight * best[n][full];
    });
    return total;
  }

  auto allocations = instance.feasible_allocations(kEnumerationGuard);
  std::size_t profiles = 1;
  for (int i = 0; i < instance.agent_count(); ++i)
    profiles *= static_cast<std::size_t>(instance.support_size());
  if (profiles * allocations.size() > kEnumerationGuard)
    throw EnumerationTooLarge("optimal welfare enumeration exceeds guard");
  for_each_support_profile(instance, [&](const ValuationProfile& profile, const Rat& weight) {
    Rat best(0);
    bool first = true;
    for (const Allocation& alloc : allocations) {
      Rat value(0);
      for (int i = 0; i < instance.agent_count(); ++i)
        value += instance.value(i, profile.types[i], alloc[i]);
      if (first || value > best) {
        best = value;
        first = false;
      }
    }
    total += weight * best;
  });
  return total;
}

struct MyersonAgentReport {
  std::vector<Rat> serve_probability;  // y_i^t
  bool monotone = true;                // over positive-prior types
  bool identity_optimal = true;
  bool consistent = true;              // monotone <=> identity optimal
};

struct MyersonReport {
  std::vector<MyersonAgentReport> agents;
  bool consistent = true;
};

// Single-parameter consistency: with values v_i^s * y_i^t, the identity
// allocation is optimal for the induced problem iff the serve probabilities
// are non-increasing (rearrangement inequality), matching the classic
// single-parameter monotonicity characterization.
inline MyersonReport myerson_monotone_check(const MechanismInstance& instance,
                                            const AllocationAlgorithm& algorithm) {
  const int n = instance.agent_count();
  const int ell = instance.support_size();
  for (int i = 0; i < n; ++i) {
    if (instance.service_count(i) != 2 || !instance.has_null_service())
      throw NotSingleParameter("agents need exactly the null service and one real service");
    for (int t = 0; t + 1 < ell; ++t)
      if (!(instance.value(i, t, 1) > instance.value(i, t + 1, 1)))
        throw NotSingleParameter("values must be strictly decreasing in the type index");
  }
  if (!algorithm.supports_exact())
    throw EnumerationTooLarge("algorithm has no explicit randomness domain");

  MyersonReport report;
  report.agents.resize(n);
  for (int i = 0; i < n; ++i) {
    MyersonAgentReport& agent = report.agents[i];
    agent.serve_probability.assign(ell, Rat(0));
    for (int t = 0; t < ell; ++t) {
      ValuationProfile base;
      base.types.assign(n, 0);
      base.types[i] = t;
      detail::for_each_opponent_profile(instance, i, base,
                                        [&](const ValuationProfile& profile, const Rat& weight) {
                                          for (const OutcomeAtom& atom : algorithm.enumerate(profile))
                                            if (atom.allocation[i] == 1)
                                              agent.serve_probability[t] += weight * atom.probability;
                                        });
    }

    int prev = -1;
    for (int t = 0; t < ell; ++t) {
      if (instance.prior(i, t) == 0) continue;
      if (prev >= 0 && agent.serve_probability[prev] < agent.serve_probability[t])
        agent.monotone = false;
      prev = t;
    }

    AssignmentProblem<Rat> induced;
    induced.demands.resize(ell);
    induced.supplies.resize(ell);
    for (int t = 0; t < ell; ++t) {
      induced.demands[t] = instance.prior(i, t);
      induced.supplies[t] = instance.prior(i, t);
    }
    induced.values = Matrix<Rat>(ell, ell);
    for (int s = 0; s < ell; ++s)
      for (int t = 0; t < ell; ++t)
        induced.values(s, t) = instance.value(i, s, 1) * agent.serve_probability[t];
    AssignmentSolution<Rat> solution = solve_welfare_lp(induced);
    Rat identity(0);
    for (int s = 0; s < ell; ++s)
      identity += instance.prior(i, s) * induced.values(s, s);
    agent.identity_optimal = solution.objective == identity;
    agent.consistent = agent.identity_optimal == agent.monotone;
    if (!agent.consistent) report.consistent = false;
  }
  return report;
}

}  // namespace bicforge
