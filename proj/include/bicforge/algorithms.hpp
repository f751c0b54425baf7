#pragma once

#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "bicforge/interim.hpp"
#include "bicforge/model.hpp"

namespace bicforge {

// Always returns one fixed feasible allocation.
class ConstantAlgorithm : public AllocationAlgorithm {
 public:
  ConstantAlgorithm(const MechanismInstance& instance, Allocation allocation)
      : allocation_(std::move(allocation)) {
    if (!instance.feasible(allocation_)) throw InvalidArgument("constant allocation infeasible");
  }
  explicit ConstantAlgorithm(const MechanismInstance& instance)
      : ConstantAlgorithm(instance, default_allocation(instance)) {}

  std::string id() const override { return "constant"; }
  bool deterministic() const override { return true; }

 protected:
  Allocation run_deterministic(const ValuationProfile&) const override { return allocation_; }

 private:
  static Allocation default_allocation(const MechanismInstance& instance) {
    Allocation zero(instance.agent_count(), 0);
    if (instance.feasible(zero)) return zero;
    return instance.feasible_allocations(1 << 20).front();
  }
  Allocation allocation_;
};

// Agents pick greedily in index order: each takes its most valuable service
// whose partial allocation still extends to a feasible one (remaining agents
// tentatively at service 0). Ties go to the lowest service index.
class SerialDictatorAlgorithm : public AllocationAlgorithm {
 public:
  explicit SerialDictatorAlgorithm(const MechanismInstance& instance) : instance_(&instance) {}

  std::string id() const override { return "serial-dictator"; }
  bool deterministic() const override { return true; }

 protected:
  Allocation run_deterministic(const ValuationProfile& profile) const override {
    const auto& inst = *instance_;
    Allocation alloc(inst.agent_count(), 0);
    for (int i = 0; i < inst.agent_count(); ++i) {
      int best = -1;
      Rat best_value(0);
      for (int s = 0; s < inst.service_count(i); ++s) {
        alloc[i] = s;
        if (!extendable(alloc, i + 1)) continue;
        Rat v = inst.value(i, profile.types[i], s);
        if (best < 0 || v > best_value) {
          best = s;
          best_value = v;
        }
      }
      alloc[i] = best < 0 ? 0 : best;
    }
    return alloc;
  }

 private:
  bool extendable(Allocation& alloc, int from) const {
    const auto& inst = *instance_;
    switch (inst.feasibility().kind()) {
      case FeasibilityKind::unrestricted:
        return true;
      case FeasibilityKind::partition: {
        // Remaining agents can always take the empty set.
        int used = 0;
        for (int j = 0; j < from; ++j) {
          if (used & alloc[j]) return false;
          used |= alloc[j];
        }
        return true;
      }
      case FeasibilityKind::explicit_list: {
        for (const Allocation& cand : inst.feasibility().allowed()) {
          bool match = true;
          for (int j = 0; j < from; ++j)
            if (cand[j] != alloc[j]) {
              match = false;
              break;
            }
          if (match) return true;
        }
        return false;
      }
    }
    return false;
  }

  const MechanismInstance* instance_;
};

// Exhaustive welfare maximizer over the feasible set; ties break toward the
// lexicographically smallest allocation.
class OptimalBruteForceAlgorithm : public AllocationAlgorithm {
 public:
  explicit OptimalBruteForceAlgorithm(const MechanismInstance& instance,
                                      std::size_t guard = 1 << 20)
      : instance_(&instance), allocations_(instance.feasible_allocations(guard)) {}

  std::string id() const override { return "optimal-bruteforce"; }
  bool deterministic() const override { return true; }

 protected:
  Allocation run_deterministic(const ValuationProfile& profile) const override {
    const auto& inst = *instance_;
    const Allocation* best = nullptr;
    Rat best_value(0);
    for (const Allocation& alloc : allocations_) {
      Rat value(0);
      for (int i = 0; i < inst.agent_count(); ++i)
        value += inst.value(i, profile.types[i], alloc[i]);
      if (!best || value > best_value) {
        best = &alloc;
        best_value = value;
      }
    }
    return *best;
  }

 private:
  const MechanismInstance* instance_;
  std::vector<Allocation> allocations_;
};

// Finite-randomness algorithm given by an explicit atom table per type
// profile. This is the registered-randomness form the exact verifier
// integrates over; it also serves as the stock random test algorithm.
class LotteryAlgorithm : public AllocationAlgorithm {
 public:
  LotteryAlgorithm(const MechanismInstance& instance,
                   std::vector<std::vector<OutcomeAtom>> table, std::string id = "lottery")
      : instance_(&instance), table_(std::move(table)), id_(std::move(id)) {
    std::size_t expect = profile_count(instance);
    if (table_.size() != expect) throw InvalidArgument("lottery table size mismatch");
    for (const auto& atoms : table_) {
      Rat total(0);
      for (const auto& atom : atoms) {
        if (atom.probability < 0) throw InvalidArgument("negative atom probability");
        if (!instance.feasible(atom.allocation)) throw InvalidArgument("infeasible lottery atom");
        total += atom.probability;
      }
      if (total != 1) throw InvalidArgument("lottery atoms must sum to 1");
    }
  }

  static std::size_t profile_count(const MechanismInstance& instance) {
    std::size_t count = 1;
    for (int i = 0; i < instance.agent_count(); ++i)
      count *= static_cast<std::size_t>(instance.support_size());
    return count;
  }

  static std::size_t profile_index(const MechanismInstance& instance,
                                   const ValuationProfile& profile) {
    std::size_t index = 0;
    for (int i = 0; i < instance.agent_count(); ++i)
      index = index * static_cast<std::size_t>(instance.support_size()) +
              static_cast<std::size_t>(profile.types[i]);
    return index;
  }

  // Random lottery over the given feasible allocations, `atoms` per profile.
  static std::shared_ptr<LotteryAlgorithm> random(const MechanismInstance& instance,
                                                  const std::vector<Allocation>& feasible,
                                                  int atoms, RngStream& rng) {
    std::vector<std::vector<OutcomeAtom>> table(profile_count(instance));
    for (auto& entry : table) {
      long total = 0;
      std::vector<long> raw(atoms);
      for (int k = 0; k < atoms; ++k) {
        raw[k] = 1 + static_cast<long>(rng.uniform_below(6));
        total += raw[k];
      }
      for (int k = 0; k < atoms; ++k) {
        const Allocation& alloc = feasible[rng.uniform_below(feasible.size())];
        entry.push_back({alloc, rat(raw[k], total)});
      }
    }
    return std::make_shared<LotteryAlgorithm>(instance, std::move(table));
  }

  std::string id() const override { return id_; }
  bool deterministic() const override { return false; }
  bool supports_exact() const override { return true; }

  std::vector<OutcomeAtom> enumerate(const ValuationProfile& profile) const override {
    return table_[profile_index(*instance_, profile)];
  }

  Allocation sample(const ValuationProfile& profile, RngStream& rng) const override {
    const auto& atoms = table_[profile_index(*instance_, profile)];
    std::vector<double> weights(atoms.size());
    for (std::size_t k = 0; k < atoms.size(); ++k) weights[k] = atoms[k].probability.get_d();
    return atoms[rng.categorical(weights)].allocation;
  }

 private:
  const MechanismInstance* instance_;
  std::vector<std::vector<OutcomeAtom>> table_;
  std::string id_;
};

}  // namespace bicforge
