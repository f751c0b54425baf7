#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "bicforge/assignment.hpp"
#include "bicforge/errors.hpp"
#include "bicforge/matrix.hpp"
#include "bicforge/model.hpp"
#include "bicforge/rational.hpp"
#include "bicforge/rng.hpp"

namespace bicforge {

inline constexpr std::size_t kEnumerationGuard = 10'000'000;

// One point of an allocation algorithm's outcome distribution.
struct OutcomeAtom {
  Allocation allocation;
  Rat probability;
};

// Black-box allocation algorithm: maps a type profile (plus randomness) to a
// feasible allocation. Algorithms with a finite declared randomness domain
// expose their full outcome distribution through enumerate(), which is what
// the exact interim computation and the verifier integrate over.
class AllocationAlgorithm {
 public:
  virtual ~AllocationAlgorithm() = default;

  virtual std::string id() const = 0;
  virtual bool deterministic() const = 0;
  // True when enumerate() is available (deterministic algorithms, or an
  // explicit finite randomness domain).
  virtual bool supports_exact() const { return deterministic(); }

  virtual std::vector<OutcomeAtom> enumerate(const ValuationProfile& profile) const {
    if (!deterministic())
      throw EnumerationTooLarge("algorithm has no explicit randomness domain");
    return {{run_deterministic(profile), Rat(1)}};
  }

  virtual Allocation sample(const ValuationProfile& profile, RngStream& rng) const {
    if (deterministic()) return run_deterministic(profile);
    auto atoms = enumerate(profile);
    std::vector<double> weights(atoms.size());
    for (std::size_t k = 0; k < atoms.size(); ++k) weights[k] = atoms[k].probability.get_d();
    return atoms[rng.categorical(weights)].allocation;
  }

 protected:
  virtual Allocation run_deterministic(const ValuationProfile&) const {
    throw InvalidArgument("algorithm is not deterministic");
  }
};

enum class InterimMode { exact, relative, absolute };

inline const char* interim_mode_name(InterimMode m) {
  switch (m) {
    case InterimMode::exact: return "exact";
    case InterimMode::relative: return "relative";
    case InterimMode::absolute: return "absolute";
  }
  return "?";
}

// Per-agent matrices of interim values w_i(s, t): the expected value of true
// type s for the service received when reporting t, over opponents' types
// and algorithm randomness.
template <typename T>
struct InterimTable {
  InterimMode mode = InterimMode::exact;
  double epsilon = 0.0;
  std::vector<Matrix<T>> values;            // per agent, ell x ell
  std::vector<Matrix<std::int64_t>> samples;  // per-entry sample counts (estimated modes)
};

namespace detail {

// Visits all opponent type profiles of agent i with their prior weights.
// fn(profile, weight) receives a profile whose slot i is left as set by the
// caller via `base`.
template <typename Fn>
void for_each_opponent_profile(const MechanismInstance& instance, int agent,
                               ValuationProfile base, Fn fn) {
  const int n = instance.agent_count();
  std::vector<int> others;
  for (int j = 0; j < n; ++j)
    if (j != agent) others.push_back(j);
  std::vector<int> idx(others.size(), 0);
  for (;;) {
    Rat weight(1);
    bool skip = false;
    for (std::size_t k = 0; k < others.size(); ++k) {
      const Rat& f = instance.prior(others[k], idx[k]);
      if (f == 0) {
        skip = true;
        break;
      }
      weight *= f;
      base.types[others[k]] = idx[k];
    }
    if (!skip) fn(base, weight);
    std::size_t k = 0;
    for (; k < others.size(); ++k) {
      if (++idx[k] < instance.support_size()) break;
      idx[k] = 0;
    }
    if (k == others.size()) break;
  }
}

inline std::size_t opponent_profile_count(const MechanismInstance& instance) {
  std::size_t count = 1;
  for (int j = 1; j < instance.agent_count(); ++j) {
    count *= static_cast<std::size_t>(instance.support_size());
    if (count > kEnumerationGuard) return count;
  }
  return count;
}

inline unsigned worker_count() {
  if (const char* env = std::getenv("BICFORGE_THREADS")) {
    long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// Static partition of [0, count) across workers; fn(index) must write only
// to its own slots so results are independent of the worker count.
template <typename Fn>
void parallel_for(std::size_t count, Fn fn) {
  unsigned workers = std::min<std::size_t>(worker_count(), count);
  if (workers <= 1) {
    for (std::size_t k = 0; k < count; ++k) fn(k);
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t k = w; k < count; k += workers) fn(k);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace detail

// Exact interim values by full enumeration over opponents' types and the
// algorithm's declared randomness.
inline InterimTable<Rat> exact_interim(const MechanismInstance& instance,
                                       const AllocationAlgorithm& algorithm) {
  if (!algorithm.supports_exact())
    throw EnumerationTooLarge("exact interim requires a finite randomness domain");
  if (detail::opponent_profile_count(instance) > kEnumerationGuard)
    throw EnumerationTooLarge("opponent profile space exceeds guard");

  const int n = instance.agent_count();
  const int ell = instance.support_size();
  InterimTable<Rat> table;
  table.mode = InterimMode::exact;
  table.values.assign(n, Matrix<Rat>(ell, ell, Rat(0)));

  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < ell; ++t) {
      ValuationProfile base;
      base.types.assign(n, 0);
      base.types[i] = t;
      detail::for_each_opponent_profile(instance, i, base, [&](const ValuationProfile& profile,
                                                               const Rat& weight) {
        for (const OutcomeAtom& atom : algorithm.enumerate(profile)) {
          if (atom.probability == 0) continue;
          Rat scaled = weight * atom.probability;
          for (int s = 0; s < ell; ++s)
            table.values[i](s, t) += scaled * instance.value(i, s, atom.allocation[i]);
        }
      });
    }
  }
  return table;
}

// N = ceil(4 c^2 ln(n ell^2 / eps) / eps^2), natural log.
inline std::int64_t relative_sample_count(int agents, int ell, double epsilon, double c) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidEpsilon("epsilon must be in (0,1)");
  double arg = static_cast<double>(agents) * ell * ell / epsilon;
  return static_cast<std::int64_t>(std::ceil(4.0 * c * c * std::log(arg) / (epsilon * epsilon)));
}

// N' = ceil(4 ln(n ell^2 / eps) / eps^2).
inline std::int64_t absolute_sample_count(int agents, int ell, double epsilon) {
  return relative_sample_count(agents, ell, epsilon, 1.0);
}

namespace detail {

// Shared Monte Carlo core: every (i, s, t) entry is the mean of `count`
// independent evaluations, each on its own derived rng stream, so the result
// is a function of (instance, algorithm, eps, seed) alone.
inline InterimTable<double> estimate_interim(const MechanismInstance& instance,
                                             const AllocationAlgorithm& algorithm,
                                             InterimMode mode, double epsilon,
                                             std::int64_t count, RngStream master) {
  const int n = instance.agent_count();
  const int ell = instance.support_size();
  InterimTable<double> table;
  table.mode = mode;
  table.epsilon = epsilon;
  table.values.assign(n, Matrix<double>(ell, ell, 0.0));
  table.samples.assign(n, Matrix<std::int64_t>(ell, ell, count));

  struct Entry {
    int i, s, t;
  };
  std::vector<Entry> entries;
  entries.reserve(static_cast<std::size_t>(n) * ell * ell);
  for (int i = 0; i < n; ++i)
    for (int s = 0; s < ell; ++s)
      for (int t = 0; t < ell; ++t) entries.push_back({i, s, t});

  detail::parallel_for(entries.size(), [&](std::size_t e) {
    const auto [i, s, t] = entries[e];
    double acc = 0.0;
    ValuationProfile profile;
    profile.types.assign(n, 0);
    for (std::int64_t k = 0; k < count; ++k) {
      RngStream rng = master.derive(static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(s),
                                    static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(k));
      for (int j = 0; j < n; ++j)
        profile.types[j] = j == i ? t : sample_type(instance.priors(j), rng);
      Allocation alloc = algorithm.sample(profile, rng);
      acc += instance.valuation(i, s).value_d(alloc[i]);
    }
    table.values[i](s, t) = acc / static_cast<double>(count);
  });
  return table;
}

}  // namespace detail

// Relative-error estimator: needs a caller-supplied bound c on the
// std/mean ratio of the sampled values.
inline InterimTable<double> estimate_interim_relative(const MechanismInstance& instance,
                                                      const AllocationAlgorithm& algorithm,
                                                      double epsilon, double c, RngStream rng) {
  std::int64_t count = relative_sample_count(instance.agent_count(), instance.support_size(),
                                             epsilon, c);
  return detail::estimate_interim(instance, algorithm, InterimMode::relative, epsilon, count, rng);
}

// Absolute-error estimator: band +- eps * v_max with probability >= 1 - eps.
inline InterimTable<double> estimate_interim_absolute(const MechanismInstance& instance,
                                                      const AllocationAlgorithm& algorithm,
                                                      double epsilon, RngStream rng) {
  std::int64_t count = absolute_sample_count(instance.agent_count(), instance.support_size(),
                                             epsilon);
  return detail::estimate_interim(instance, algorithm, InterimMode::absolute, epsilon, count, rng);
}

// The induced assignment problem of one agent: virtual buyers and products
// are the agent's types with the prior masses on both sides.
template <typename T>
AssignmentProblem<T> induced_problem(const InterimTable<T>& table,
                                     const MechanismInstance& instance, int agent) {
  const int ell = instance.support_size();
  AssignmentProblem<T> problem;
  problem.demands.resize(ell);
  problem.supplies.resize(ell);
  for (int t = 0; t < ell; ++t) {
    T mass = ScalarTraits<T>::from_rat(instance.prior(agent, t));
    problem.demands[t] = mass;
    problem.supplies[t] = mass;
  }
  problem.values = table.values[agent];
  return problem;
}

}  // namespace bicforge
