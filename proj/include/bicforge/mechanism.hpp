#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "bicforge/algorithms.hpp"
#include "bicforge/reduction_rr.hpp"
#include "bicforge/reduction_sw.hpp"

namespace bicforge {

// One point of a mechanism's outcome distribution on a fixed reported
// profile: allocation, charged prices, probability over the mechanism's
// internal randomness (decoupling draws and algorithm coins).
template <typename T>
struct MechanismAtom {
  Allocation allocation;
  std::vector<T> prices;
  T probability;
};

// Direct-revelation mechanism under verification. Exact mechanisms expose
// their full outcome distribution per reported profile, which is what the
// brute-force verifier integrates.
template <typename T>
class Mechanism {
 public:
  virtual ~Mechanism() = default;
  virtual const MechanismInstance& instance() const = 0;
  virtual bool supports_exact() const = 0;
  virtual std::vector<MechanismAtom<T>> enumerate(const ValuationProfile& reported) const = 0;
  virtual Outcome<T> sample(const ValuationProfile& reported, RngStream& rng) const = 0;
};

namespace detail {

// Shared cache of the allocation algorithm's atom lists per manipulated
// profile; reused across the ell^n reported profiles the verifier visits,
// and shareable across mechanisms built over the same (instance, algorithm).
class AtomCache {
 public:
  AtomCache(const MechanismInstance& instance, const AllocationAlgorithm& algorithm)
      : instance_(&instance) {
    std::size_t count = LotteryAlgorithm::profile_count(instance);
    if (count > kEnumerationGuard) throw EnumerationTooLarge("profile space exceeds guard");
    atoms_.resize(count);
    ValuationProfile profile;
    profile.types.assign(instance.agent_count(), 0);
    fill(algorithm, profile, 0);
  }

  const std::vector<OutcomeAtom>& atoms(const ValuationProfile& profile) const {
    return atoms_[LotteryAlgorithm::profile_index(*instance_, profile)];
  }

 private:
  void fill(const AllocationAlgorithm& algorithm, ValuationProfile& profile, int agent) {
    if (agent == instance_->agent_count()) {
      atoms_[LotteryAlgorithm::profile_index(*instance_, profile)] = algorithm.enumerate(profile);
      return;
    }
    for (int t = 0; t < instance_->support_size(); ++t) {
      profile.types[agent] = t;
      fill(algorithm, profile, agent + 1);
    }
  }

  const MechanismInstance* instance_;
  std::vector<std::vector<OutcomeAtom>> atoms_;
};

}  // namespace detail

// The welfare-reduction mechanism M_A built from precomputed tables.
template <typename T>
class SwMechanism : public Mechanism<T> {
 public:
  SwMechanism(const MechanismInstance& instance, std::shared_ptr<const AllocationAlgorithm> algorithm,
              ReductionTables<T> tables, std::shared_ptr<detail::AtomCache> cache = nullptr)
      : instance_(&instance), algorithm_(std::move(algorithm)), tables_(std::move(tables)),
        cache_(std::move(cache)) {}

  const MechanismInstance& instance() const override { return *instance_; }
  const ReductionTables<T>& tables() const { return tables_; }
  bool supports_exact() const override { return algorithm_->supports_exact(); }

  std::vector<MechanismAtom<T>> enumerate(const ValuationProfile& reported) const override {
    ensure_cache();
    const int n = instance_->agent_count();
    std::vector<std::vector<T>> decouple(n);
    for (int i = 0; i < n; ++i)
      decouple[i] = decouple_distribution(tables_, *instance_, i, reported.types[i]);

    std::vector<MechanismAtom<T>> out;
    ValuationProfile manipulated;
    manipulated.types.assign(n, 0);
    enumerate_rec(reported, manipulated, 0, T(1), decouple, out);
    return out;
  }

  Outcome<T> sample(const ValuationProfile& reported, RngStream& rng) const override {
    return run_mechanism(tables_, *instance_, *algorithm_, reported, rng);
  }

 private:
  void ensure_cache() const {
    if (!cache_) cache_ = std::make_shared<detail::AtomCache>(*instance_, *algorithm_);
  }

  void enumerate_rec(const ValuationProfile& reported, ValuationProfile& manipulated, int agent,
                     T prob, const std::vector<std::vector<T>>& decouple,
                     std::vector<MechanismAtom<T>>& out) const {
    const int n = instance_->agent_count();
    if (agent == n) {
      for (const OutcomeAtom& atom : cache_->atoms(manipulated)) {
        if (atom.probability == 0) continue;
        MechanismAtom<T> mech;
        mech.allocation = atom.allocation;
        mech.probability = prob * ScalarTraits<T>::from_rat(atom.probability);
        mech.prices.resize(n);
        for (int i = 0; i < n; ++i) {
          Rat value = instance_->value(i, reported.types[i], atom.allocation[i]);
          mech.prices[i] =
              reduction_price(tables_, i, reported.types[i], manipulated.types[i], value);
        }
        out.push_back(std::move(mech));
      }
      return;
    }
    for (int t = 0; t < instance_->support_size(); ++t) {
      const T& p = decouple[agent][t];
      if (p <= ScalarTraits<T>::tolerance()) continue;
      manipulated.types[agent] = t;
      enumerate_rec(reported, manipulated, agent + 1, T(prob * p), decouple, out);
    }
  }

  const MechanismInstance* instance_;
  std::shared_ptr<const AllocationAlgorithm> algorithm_;
  ReductionTables<T> tables_;
  mutable std::shared_ptr<detail::AtomCache> cache_;
};

// The downward-closed meta-reduction mechanism M^C_A.
template <typename T>
class MetaMechanism : public Mechanism<T> {
 public:
  MetaMechanism(const MechanismInstance& instance, std::shared_ptr<const AllocationAlgorithm> algorithm,
                MetaTables<T> tables, std::shared_ptr<detail::AtomCache> cache = nullptr)
      : instance_(&instance), algorithm_(std::move(algorithm)), tables_(std::move(tables)),
        cache_(std::move(cache)) {}

  const MechanismInstance& instance() const override { return *instance_; }
  const MetaTables<T>& tables() const { return tables_; }
  bool supports_exact() const override { return algorithm_->supports_exact(); }

  std::vector<MechanismAtom<T>> enumerate(const ValuationProfile& reported) const override {
    if (!cache_) cache_ = std::make_shared<detail::AtomCache>(*instance_, *algorithm_);
    const int n = instance_->agent_count();
    std::vector<std::vector<std::pair<MetaDraw, T>>> draws(n);
    for (int i = 0; i < n; ++i)
      draws[i] = meta_decouple_distribution(tables_, *instance_, i, reported.types[i]);

    std::vector<MechanismAtom<T>> out;
    ValuationProfile manipulated;
    manipulated.types.assign(n, 0);
    std::vector<bool> served(n, false);
    enumerate_rec(reported, manipulated, served, 0, T(1), draws, out);
    return out;
  }

  Outcome<T> sample(const ValuationProfile& reported, RngStream& rng) const override {
    return run_meta_mechanism(tables_, *instance_, *algorithm_, reported, rng);
  }

 private:
  void enumerate_rec(const ValuationProfile& reported, ValuationProfile& manipulated,
                     std::vector<bool>& served, int agent, T prob,
                     const std::vector<std::vector<std::pair<MetaDraw, T>>>& draws,
                     std::vector<MechanismAtom<T>>& out) const {
    const int n = instance_->agent_count();
    if (agent == n) {
      for (const OutcomeAtom& atom : cache_->atoms(manipulated)) {
        if (atom.probability == 0) continue;
        MechanismAtom<T> mech;
        mech.probability = prob * ScalarTraits<T>::from_rat(atom.probability);
        mech.allocation.assign(n, 0);
        mech.prices.assign(n, T(0));
        for (int i = 0; i < n; ++i) {
          if (!served[i]) continue;
          mech.allocation[i] = atom.allocation[i];
          Rat value = instance_->value(i, reported.types[i], atom.allocation[i]);
          mech.prices[i] = reduction_price_meta(tables_, i, reported.types[i],
                                                manipulated.types[i], value);
        }
        out.push_back(std::move(mech));
      }
      return;
    }
    for (const auto& [draw, p] : draws[agent]) {
      if (p <= ScalarTraits<T>::tolerance()) continue;
      manipulated.types[agent] = draw.manipulated;
      served[agent] = draw.served;
      enumerate_rec(reported, manipulated, served, agent + 1, T(prob * p), draws, out);
    }
  }

  const MechanismInstance* instance_;
  std::shared_ptr<const AllocationAlgorithm> algorithm_;
  MetaTables<T> tables_;
  mutable std::shared_ptr<detail::AtomCache> cache_;
};

// Fixed posted price per agent on top of a deterministic allocation rule;
// handy as a known-good (or known-bad) verification subject.
template <typename T>
class PostedPriceMechanism : public Mechanism<T> {
 public:
  PostedPriceMechanism(const MechanismInstance& instance,
                       std::shared_ptr<const AllocationAlgorithm> algorithm, std::vector<T> prices,
                       bool charge_null = false)
      : instance_(&instance), algorithm_(std::move(algorithm)), prices_(std::move(prices)),
        charge_null_(charge_null) {}

  const MechanismInstance& instance() const override { return *instance_; }
  bool supports_exact() const override { return algorithm_->supports_exact(); }

  std::vector<MechanismAtom<T>> enumerate(const ValuationProfile& reported) const override {
    std::vector<MechanismAtom<T>> out;
    for (const OutcomeAtom& atom : algorithm_->enumerate(reported)) {
      MechanismAtom<T> mech;
      mech.allocation = atom.allocation;
      mech.probability = ScalarTraits<T>::from_rat(atom.probability);
      mech.prices.resize(instance_->agent_count());
      for (int i = 0; i < instance_->agent_count(); ++i)
        mech.prices[i] = (charge_null_ || atom.allocation[i] != 0) ? prices_[i] : T(0);
      out.push_back(std::move(mech));
    }
    return out;
  }

  Outcome<T> sample(const ValuationProfile& reported, RngStream& rng) const override {
    Allocation alloc = algorithm_->sample(reported, rng);
    Outcome<T> outcome;
    outcome.allocation = alloc;
    outcome.prices.resize(instance_->agent_count());
    for (int i = 0; i < instance_->agent_count(); ++i)
      outcome.prices[i] = (charge_null_ || alloc[i] != 0) ? prices_[i] : T(0);
    return outcome;
  }

 private:
  const MechanismInstance* instance_;
  std::shared_ptr<const AllocationAlgorithm> algorithm_;
  std::vector<T> prices_;
  bool charge_null_;
};

}  // namespace bicforge
