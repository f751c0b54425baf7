#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bicforge/errors.hpp"
#include "bicforge/matrix.hpp"
#include "bicforge/rational.hpp"
#include "bicforge/rng.hpp"

namespace bicforge {

// One service index per agent. For combinatorial-auction instances the
// service index is a bitmask over the items; index 0 is the empty set.
using Allocation = std::vector<int>;

// Per-agent support indices of one realized type profile.
struct ValuationProfile {
  std::vector<int> types;
  bool operator==(const ValuationProfile& o) const { return types == o.types; }
};

enum class ValuationKind { explicit_list, additive, unit_demand, budget_additive, xos };

inline const char* valuation_kind_name(ValuationKind k) {
  switch (k) {
    case ValuationKind::explicit_list: return "explicit";
    case ValuationKind::additive: return "additive";
    case ValuationKind::unit_demand: return "unit-demand";
    case ValuationKind::budget_additive: return "budget-additive";
    case ValuationKind::xos: return "xos";
  }
  return "?";
}

// A valuation over services. Explicit valuations list a value per service
// index; set-based valuations evaluate bitmask subsets of `item_count` items
// on demand. Set-based valuations are monotone and normalized by
// construction (non-negative weights, v(empty) = 0).
class Valuation {
 public:
  static Valuation explicit_list(std::vector<Rat> values) {
    Valuation v;
    v.kind_ = ValuationKind::explicit_list;
    v.values_ = std::move(values);
    return v;
  }
  static Valuation additive(std::vector<Rat> weights) {
    return set_based(ValuationKind::additive, std::move(weights), {}, Rat(0));
  }
  static Valuation unit_demand(std::vector<Rat> weights) {
    return set_based(ValuationKind::unit_demand, std::move(weights), {}, Rat(0));
  }
  static Valuation budget_additive(std::vector<Rat> weights, Rat budget) {
    return set_based(ValuationKind::budget_additive, std::move(weights), {}, std::move(budget));
  }
  static Valuation xos(std::vector<std::vector<Rat>> clauses) {
    if (clauses.empty()) throw InvalidArgument("xos valuation needs at least one clause");
    std::vector<Rat> first = clauses.front();
    return set_based(ValuationKind::xos, std::move(first), std::move(clauses), Rat(0));
  }

  ValuationKind kind() const { return kind_; }
  bool is_set_based() const { return kind_ != ValuationKind::explicit_list; }
  int item_count() const { return item_count_; }
  std::size_t explicit_size() const { return values_.size(); }
  const std::vector<Rat>& weights() const { return weights_; }
  const std::vector<std::vector<Rat>>& clauses() const { return clauses_; }
  const Rat& budget() const { return budget_; }

  Rat value(int service) const {
    switch (kind_) {
      case ValuationKind::explicit_list:
        return values_.at(static_cast<std::size_t>(service));
      case ValuationKind::additive:
        return additive_sum(weights_, service);
      case ValuationKind::unit_demand: {
        Rat best(0);
        for_items(service, [&](int j) { best = std::max(best, weights_[j]); });
        return best;
      }
      case ValuationKind::budget_additive:
        return std::min(budget_, additive_sum(weights_, service));
      case ValuationKind::xos: {
        Rat best(0);
        for (const auto& clause : clauses_) best = std::max(best, additive_sum(clause, service));
        return best;
      }
    }
    return Rat(0);
  }

  double value_d(int service) const { return value(service).get_d(); }

  // Largest value over the given service range. Set-based valuations are
  // monotone, so the full item set attains the maximum.
  Rat max_value(int service_count) const {
    if (is_set_based()) return value((1 << item_count_) - 1);
    Rat best(0);
    for (int s = 0; s < service_count; ++s) best = std::max(best, values_[s]);
    return best;
  }

  // Supporting additive vector for subset `mask`: an item-weight vector whose
  // sum over the mask equals value(mask). XOS picks the lowest-index
  // maximizing clause; additive and unit-demand convert directly.
  std::vector<Rat> supporting_weights(int mask) const {
    switch (kind_) {
      case ValuationKind::additive:
        return weights_;
      case ValuationKind::unit_demand: {
        std::vector<Rat> out(weights_.size(), Rat(0));
        int best_item = -1;
        Rat best(0);
        for_items(mask, [&](int j) {
          if (best_item < 0 || weights_[j] > best) {
            best_item = j;
            best = weights_[j];
          }
        });
        if (best_item >= 0) out[best_item] = best;
        return out;
      }
      case ValuationKind::xos: {
        std::size_t best_clause = 0;
        Rat best = additive_sum(clauses_[0], mask);
        for (std::size_t c = 1; c < clauses_.size(); ++c) {
          Rat v = additive_sum(clauses_[c], mask);
          if (v > best) {
            best = v;
            best_clause = c;
          }
        }
        return clauses_[best_clause];
      }
      default:
        throw NotXOS(std::string("no supporting vector for ") + valuation_kind_name(kind_));
    }
  }

  template <typename Fn>
  static void for_items(int mask, Fn fn) {
    for (int j = 0; mask >> j; ++j)
      if (mask & (1 << j)) fn(j);
  }

 private:
  static Valuation set_based(ValuationKind kind, std::vector<Rat> weights,
                             std::vector<std::vector<Rat>> clauses, Rat budget) {
    Valuation v;
    v.kind_ = kind;
    v.weights_ = std::move(weights);
    v.clauses_ = std::move(clauses);
    v.budget_ = std::move(budget);
    v.item_count_ = static_cast<int>(v.weights_.size());
    for (const auto& clause : v.clauses_)
      if (static_cast<int>(clause.size()) != v.item_count_)
        throw InvalidArgument("xos clauses must share the item count");
    auto check_nonneg = [](const std::vector<Rat>& ws) {
      for (const Rat& w : ws)
        if (w < 0) throw InvalidArgument("negative item weight");
    };
    check_nonneg(v.weights_);
    for (const auto& clause : v.clauses_) check_nonneg(clause);
    if (v.budget_ < 0) throw InvalidArgument("negative budget");
    return v;
  }

  static Rat additive_sum(const std::vector<Rat>& weights, int mask) {
    Rat s(0);
    for_items(mask, [&](int j) { s += weights[j]; });
    return s;
  }

  ValuationKind kind_ = ValuationKind::explicit_list;
  std::vector<Rat> values_;
  std::vector<Rat> weights_;
  std::vector<std::vector<Rat>> clauses_;
  Rat budget_;
  int item_count_ = 0;
};

inline std::vector<Rat> xos_supporting(const Valuation& valuation, int subset_mask) {
  return valuation.supporting_weights(subset_mask);
}

enum class FeasibilityKind { unrestricted, partition, explicit_list };

// Feasibility predicate over joint allocations. Built-ins: "matroid-free"
// (unrestricted), "partition" (disjoint item subsets), "explicit" (a list).
class Feasibility {
 public:
  static Feasibility unrestricted() { return Feasibility(FeasibilityKind::unrestricted); }
  static Feasibility partition() { return Feasibility(FeasibilityKind::partition); }
  static Feasibility explicit_list(std::vector<Allocation> allowed) {
    Feasibility f(FeasibilityKind::explicit_list);
    f.allowed_ = std::move(allowed);
    std::sort(f.allowed_.begin(), f.allowed_.end());
    f.allowed_.erase(std::unique(f.allowed_.begin(), f.allowed_.end()), f.allowed_.end());
    return f;
  }

  FeasibilityKind kind() const { return kind_; }
  const std::vector<Allocation>& allowed() const { return allowed_; }

  bool feasible(const Allocation& alloc) const {
    switch (kind_) {
      case FeasibilityKind::unrestricted:
        return true;
      case FeasibilityKind::partition: {
        int used = 0;
        for (int mask : alloc) {
          if (used & mask) return false;
          used |= mask;
        }
        return true;
      }
      case FeasibilityKind::explicit_list:
        return std::binary_search(allowed_.begin(), allowed_.end(), alloc);
    }
    return false;
  }

  const char* name() const {
    switch (kind_) {
      case FeasibilityKind::unrestricted: return "matroid-free";
      case FeasibilityKind::partition: return "partition";
      case FeasibilityKind::explicit_list: return "explicit";
    }
    return "?";
  }

 private:
  explicit Feasibility(FeasibilityKind kind) : kind_(kind) {}
  FeasibilityKind kind_;
  std::vector<Allocation> allowed_;
};

// A multi-parameter mechanism-design instance: per-agent service sets,
// a feasibility predicate, finite valuation supports of common size ell,
// and product prior distributions. Immutable after construction.
class MechanismInstance {
 public:
  MechanismInstance(std::vector<int> service_counts, int item_count, bool has_null,
                    Feasibility feasibility, std::vector<std::vector<Valuation>> supports,
                    std::vector<std::vector<Rat>> priors)
      : service_counts_(std::move(service_counts)),
        item_count_(item_count),
        has_null_(has_null),
        feasibility_(std::move(feasibility)),
        supports_(std::move(supports)),
        priors_(std::move(priors)) {
    validate();
  }

  int agent_count() const { return static_cast<int>(service_counts_.size()); }
  int support_size() const { return support_size_; }
  int item_count() const { return item_count_; }
  bool is_combinatorial() const { return item_count_ > 0; }
  bool has_null_service() const { return has_null_; }
  int service_count(int agent) const { return service_counts_[agent]; }
  const Feasibility& feasibility() const { return feasibility_; }
  const Valuation& valuation(int agent, int type) const { return supports_[agent][type]; }
  const Rat& prior(int agent, int type) const { return priors_[agent][type]; }
  const std::vector<Rat>& priors(int agent) const { return priors_[agent]; }

  Rat value(int agent, int type, int service) const {
    return supports_[agent][type].value(service);
  }

  bool feasible(const Allocation& alloc) const { return feasibility_.feasible(alloc); }

  // Enumerates the feasible joint allocations, up to `guard` candidates.
  std::vector<Allocation> feasible_allocations(std::size_t guard) const {
    if (feasibility_.kind() == FeasibilityKind::explicit_list) return feasibility_.allowed();
    std::size_t total = 1;
    for (int c : service_counts_) {
      if (total > guard / static_cast<std::size_t>(c) + 1) total = guard + 1;
      else total *= static_cast<std::size_t>(c);
      if (total > guard)
        throw EnumerationTooLarge("joint allocation space exceeds guard");
    }
    std::vector<Allocation> out;
    Allocation alloc(agent_count(), 0);
    enumerate_rec(0, alloc, out);
    return out;
  }

  bool is_downward_closed() const {
    if (!has_null_) return false;
    switch (feasibility_.kind()) {
      case FeasibilityKind::unrestricted:
      case FeasibilityKind::partition:
        return true;
      case FeasibilityKind::explicit_list: {
        for (const Allocation& alloc : feasibility_.allowed()) {
          for (int i = 0; i < agent_count(); ++i) {
            if (alloc[i] == 0) continue;
            Allocation reduced = alloc;
            reduced[i] = 0;
            if (!feasibility_.feasible(reduced)) return false;
          }
        }
        return true;
      }
    }
    return false;
  }

 private:
  void validate() {
    const int n = agent_count();
    if (n == 0) throw InvalidArgument("instance needs at least one agent");
    if (static_cast<int>(supports_.size()) != n || static_cast<int>(priors_.size()) != n)
      throw InvalidArgument("supports/priors size mismatch");
    for (int i = 0; i < n; ++i) {
      if (service_counts_[i] < 1) throw InvalidArgument("empty service set");
      if (supports_[i].empty()) throw EmptySupport("agent has empty valuation support");
      if (supports_[i].size() != priors_[i].size())
        throw InvalidArgument("support/prior length mismatch");
    }
    // Pad ragged supports with zero-probability duplicates so ell is uniform.
    std::size_t ell = 0;
    for (int i = 0; i < n; ++i) ell = std::max(ell, supports_[i].size());
    for (int i = 0; i < n; ++i) {
      while (supports_[i].size() < ell) {
        supports_[i].push_back(supports_[i].back());
        priors_[i].push_back(Rat(0));
      }
    }
    support_size_ = static_cast<int>(ell);

    for (int i = 0; i < n; ++i) {
      Rat sum(0);
      for (const Rat& f : priors_[i]) {
        if (f < 0) throw ProbabilitySumMismatch("negative prior probability");
        sum += f;
      }
      if (abs_value(Rat(sum - 1)).get_d() > 1e-12)
        throw ProbabilitySumMismatch("prior sums to " + std::to_string(sum.get_d()));
      // Normalize exactly so downstream market-clearing identities are exact.
      if (sum != 1)
        for (Rat& f : priors_[i]) f /= sum;
    }

    for (int i = 0; i < n; ++i) {
      for (std::size_t t = 0; t < supports_[i].size(); ++t) {
        const Valuation& v = supports_[i][t];
        if (v.is_set_based()) {
          if (item_count_ <= 0 || v.item_count() != item_count_)
            throw InvalidArgument("set-based valuation item count mismatch");
        } else {
          if (v.explicit_size() != static_cast<std::size_t>(service_counts_[i]))
            throw InvalidArgument("explicit valuation length mismatch");
          for (int s = 0; s < service_counts_[i]; ++s)
            if (v.value(s) < 0) throw InvalidArgument("negative valuation");
        }
        if (has_null_ && v.value(0) != 0)
          throw InvalidArgument("null service must have zero value");
      }
    }

    if (feasibility_.kind() == FeasibilityKind::explicit_list) {
      if (feasibility_.allowed().empty())
        throw InfeasibleInstance("explicit feasibility list is empty");
      for (const Allocation& alloc : feasibility_.allowed()) {
        if (static_cast<int>(alloc.size()) != n)
          throw InvalidArgument("explicit allocation arity mismatch");
        for (int i = 0; i < n; ++i)
          if (alloc[i] < 0 || alloc[i] >= service_counts_[i])
            throw InvalidArgument("explicit allocation index out of range");
      }
    } else {
      // A canonical candidate must exist: all-null (downward-closed style)
      // or the all-zero index tuple.
      Allocation zero(n, 0);
      if (!feasibility_.feasible(zero)) {
        bool found = false;
        try {
          found = !feasible_allocations(1 << 20).empty();
        } catch (const EnumerationTooLarge&) {
          found = true;  // too big to scan; trust the built-in predicate
        }
        if (!found) throw InfeasibleInstance("no feasible allocation");
      }
    }
  }

  void enumerate_rec(int agent, Allocation& alloc, std::vector<Allocation>& out) const {
    if (agent == agent_count()) {
      if (feasibility_.feasible(alloc)) out.push_back(alloc);
      return;
    }
    for (int s = 0; s < service_counts_[agent]; ++s) {
      alloc[agent] = s;
      enumerate_rec(agent + 1, alloc, out);
    }
    alloc[agent] = 0;
  }

  std::vector<int> service_counts_;
  int item_count_ = 0;
  bool has_null_ = false;
  Feasibility feasibility_;
  std::vector<std::vector<Valuation>> supports_;
  std::vector<std::vector<Rat>> priors_;
  int support_size_ = 0;
};

inline MechanismInstance build_instance(std::vector<int> service_counts, Feasibility feasibility,
                                        std::vector<std::vector<Valuation>> supports,
                                        std::vector<std::vector<Rat>> priors,
                                        bool has_null = false) {
  return MechanismInstance(std::move(service_counts), 0, has_null, std::move(feasibility),
                           std::move(supports), std::move(priors));
}

// Combinatorial-auction instance: services are the 2^m item subsets, the
// empty set is the null service, feasibility is disjointness.
inline MechanismInstance build_ca_instance(int agents, int items,
                                           std::vector<std::vector<Valuation>> supports,
                                           std::vector<std::vector<Rat>> priors) {
  if (items < 1 || items > 20) throw TooManyItems("item count must be in [1, 20]");
  std::vector<int> counts(agents, 1 << items);
  return MechanismInstance(std::move(counts), items, true, Feasibility::partition(),
                           std::move(supports), std::move(priors));
}

inline Rat v_max(const MechanismInstance& instance) {
  Rat best(0);
  for (int i = 0; i < instance.agent_count(); ++i)
    for (int t = 0; t < instance.support_size(); ++t)
      best = std::max(best, instance.valuation(i, t).max_value(instance.service_count(i)));
  return best;
}

// Minimal positive prior probability across agents and types.
inline Rat granularity(const MechanismInstance& instance) {
  Rat best(0);
  bool found = false;
  for (int i = 0; i < instance.agent_count(); ++i)
    for (int t = 0; t < instance.support_size(); ++t) {
      const Rat& f = instance.prior(i, t);
      if (f > 0 && (!found || f < best)) {
        best = f;
        found = true;
      }
    }
  if (!found) throw InvalidArgument("no positive prior mass");
  return best;
}

inline int sample_type(const std::vector<Rat>& prior, RngStream& rng) {
  std::vector<double> weights(prior.size());
  for (std::size_t t = 0; t < prior.size(); ++t) weights[t] = prior[t].get_d();
  return static_cast<int>(rng.categorical(weights));
}

inline ValuationProfile sample_profile(const MechanismInstance& instance, RngStream& rng) {
  ValuationProfile profile;
  profile.types.resize(instance.agent_count());
  for (int i = 0; i < instance.agent_count(); ++i)
    profile.types[i] = sample_type(instance.priors(i), rng);
  return profile;
}

// ---- Valuation-class generators and sampled oracles ----

inline std::vector<Rat> random_weights(int items, RngStream& rng, int max_num = 64, int den = 16) {
  std::vector<Rat> w(items);
  for (int j = 0; j < items; ++j) w[j] = rat(static_cast<long>(rng.uniform_below(max_num + 1)), den);
  return w;
}

inline Valuation random_valuation(ValuationKind kind, int items, RngStream& rng) {
  switch (kind) {
    case ValuationKind::additive:
      return Valuation::additive(random_weights(items, rng));
    case ValuationKind::unit_demand:
      return Valuation::unit_demand(random_weights(items, rng));
    case ValuationKind::budget_additive: {
      auto w = random_weights(items, rng);
      Rat total(0);
      for (const Rat& x : w) total += x;
      Rat budget = total * rat(static_cast<long>(1 + rng.uniform_below(8)), 8);
      return Valuation::budget_additive(std::move(w), budget);
    }
    case ValuationKind::xos: {
      std::size_t clauses = 2 + rng.uniform_below(3);
      std::vector<std::vector<Rat>> cs;
      for (std::size_t c = 0; c < clauses; ++c) cs.push_back(random_weights(items, rng));
      return Valuation::xos(std::move(cs));
    }
    default:
      throw InvalidArgument("random_valuation: explicit kind not supported");
  }
}

// Sampled monotonicity oracle: v(S) <= v(T) for S subset of T over random pairs.
inline bool check_monotone(const Valuation& v, int items, int pairs, RngStream& rng) {
  int full = (1 << items) - 1;
  if (v.value(0) != 0) return false;
  for (int k = 0; k < pairs; ++k) {
    int t = static_cast<int>(rng.uniform_below(full + 1));
    int s = t & static_cast<int>(rng.uniform_below(full + 1));
    if (v.value(s) > v.value(t)) return false;
  }
  return true;
}

// Sampled subadditivity oracle over disjoint pairs: v(S u T) <= v(S) + v(T).
inline bool check_subadditive(const Valuation& v, int items, int pairs, RngStream& rng) {
  int full = (1 << items) - 1;
  for (int k = 0; k < pairs; ++k) {
    int s = static_cast<int>(rng.uniform_below(full + 1));
    int t = static_cast<int>(rng.uniform_below(full + 1)) & ~s;
    if (v.value(s | t) > v.value(s) + v.value(t)) return false;
  }
  return true;
}

}  // namespace bicforge
