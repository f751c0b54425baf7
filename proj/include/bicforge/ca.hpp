#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "bicforge/interim.hpp"
#include "bicforge/lp.hpp"
#include "bicforge/model.hpp"

namespace bicforge {

// Fractional solution of the Bayesian configuration LP: x[(i, t, S)] is the
// probability that agent i with type t receives item subset S.
struct CAFractionalSolution {
  int agents = 0;
  int items = 0;
  int support_size = 0;
  std::map<std::tuple<int, int, int>, Rat> entries;       // (agent, type, mask) -> probability
  std::map<std::tuple<int, int, int>, Rat> entry_values;  // f_i(t) * v_i^t(S) per unit
  Rat objective;

  std::size_t nonzeros() const { return entries.size(); }

  // Row (i, t) as a list of (mask, probability).
  std::vector<std::pair<int, Rat>> row(int agent, int type) const {
    std::vector<std::pair<int, Rat>> out;
    auto it = entries.lower_bound({agent, type, 0});
    for (; it != entries.end(); ++it) {
      const auto& [i, t, mask] = it->first;
      if (i != agent || t != type) break;
      out.push_back({mask, it->second});
    }
    return out;
  }
};

inline constexpr std::size_t kCaColumnGuard = 60'000;

// Solves the configuration LP exactly by enumerating all 2^m - 1 nonempty
// subsets per (agent, type) column block. The simplex returns a vertex, so
// the nonzero count is bounded by the constraint count m + n*ell <= n*m*ell.
inline CAFractionalSolution solve_ca_lp(const MechanismInstance& instance) {
  if (!instance.is_combinatorial()) throw InvalidArgument("configuration LP needs items");
  const int n = instance.agent_count();
  const int m = instance.item_count();
  const int ell = instance.support_size();
  if (m > 20) throw TooManyItems("configuration LP supports at most 20 items");
  const int masks = (1 << m) - 1;

  struct Column {
    int agent, type, mask;
  };
  std::vector<Column> columns;
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < ell; ++t) {
      if (instance.prior(i, t) == 0) continue;
      for (int mask = 1; mask <= masks; ++mask) columns.push_back({i, t, mask});
      if (columns.size() > kCaColumnGuard)
        throw EnumerationTooLarge("configuration LP column count exceeds guard");
    }

  lp::Problem problem;
  problem.num_vars = columns.size();
  problem.objective.resize(columns.size());
  // Row layout: m item rows, then one row per positive-prior (i, t).
  std::map<std::pair<int, int>, std::size_t> row_of;
  std::vector<lp::Row> rows(m);
  for (int j = 0; j < m; ++j) {
    rows[j].rel = lp::Rel::le;
    rows[j].rhs = 1;
  }
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < ell; ++t) {
      if (instance.prior(i, t) == 0) continue;
      row_of[{i, t}] = rows.size();
      lp::Row row;
      row.rel = lp::Rel::le;
      row.rhs = 1;
      rows.push_back(std::move(row));
    }

  for (std::size_t c = 0; c < columns.size(); ++c) {
    const Column& col = columns[c];
    const Rat& f = instance.prior(col.agent, col.type);
    problem.objective[c] = f * instance.valuation(col.agent, col.type).value(col.mask);
    for (int j = 0; j < m; ++j)
      if (col.mask & (1 << j)) rows[j].coeffs.push_back({c, f});
    rows[row_of[{col.agent, col.type}]].coeffs.push_back({c, Rat(1)});
  }
  problem.rows = std::move(rows);

  lp::Solution solved = lp::solve(problem);
  if (!solved.feasible || !solved.bounded)
    throw NumericFailure("configuration LP did not solve");

  CAFractionalSolution solution;
  solution.agents = n;
  solution.items = m;
  solution.support_size = ell;
  solution.objective = solved.objective;
  for (std::size_t c = 0; c < columns.size(); ++c)
    if (solved.values[c] != 0) {
      std::tuple<int, int, int> key{columns[c].agent, columns[c].type, columns[c].mask};
      solution.entries[key] = solved.values[c];
      solution.entry_values[key] = problem.objective[c];
    }
  return solution;
}

// Removes entries below eps / (n m ell). The dropped value is below
// eps * LP*, so the filtered solution keeps value >= (1 - eps) LP*.
inline CAFractionalSolution filter_solution(const CAFractionalSolution& solution,
                                            const Rat& epsilon) {
  if (epsilon <= 0 || epsilon >= 1) throw InvalidEpsilon("epsilon must be in (0,1)");
  Rat threshold = epsilon / (solution.agents * solution.items * solution.support_size);
  CAFractionalSolution filtered = solution;
  filtered.entries.clear();
  filtered.entry_values.clear();
  filtered.objective = Rat(0);
  for (const auto& [key, value] : solution.entries) {
    if (value < threshold) continue;
    filtered.entries[key] = value;
    auto it = solution.entry_values.find(key);
    if (it != solution.entry_values.end()) {
      filtered.entry_values[key] = it->second;
      filtered.objective += value * it->second;
    }
  }
  return filtered;
}

// Objective of a solution against an instance (used after filtering).
inline Rat ca_objective(const MechanismInstance& instance, const CAFractionalSolution& solution) {
  Rat total(0);
  for (const auto& [key, value] : solution.entries) {
    const auto& [i, t, mask] = key;
    total += instance.prior(i, t) * instance.valuation(i, t).value(mask) * value;
  }
  return total;
}

// Rounding step 1: one independent categorical draw per agent from its
// reported type's row; the residual probability yields the empty set.
inline std::vector<int> round_tentative(const CAFractionalSolution& filtered,
                                        const std::vector<int>& reported_types, RngStream& rng) {
  std::vector<int> tentative(filtered.agents, 0);
  for (int i = 0; i < filtered.agents; ++i) {
    auto row = filtered.row(i, reported_types[i]);
    std::vector<double> weights;
    weights.reserve(row.size() + 1);
    double total = 0;
    for (const auto& [mask, prob] : row) {
      weights.push_back(prob.get_d());
      total += prob.get_d();
    }
    weights.push_back(std::max(0.0, 1.0 - total));
    std::size_t pick = rng.categorical(weights);
    tentative[i] = pick < row.size() ? row[pick].first : 0;
  }
  return tentative;
}

// Rounding step 2 for fractionally subadditive agents: every contested item
// goes to the claimant whose supporting-vector weight is highest (ties to
// the lowest agent index). The result partitions the claimed items.
inline Allocation resolve_conflicts_xos(const std::vector<int>& tentative,
                                        const std::vector<const Valuation*>& valuations) {
  const int n = static_cast<int>(tentative.size());
  std::vector<std::vector<Rat>> support(n);
  for (int i = 0; i < n; ++i)
    if (tentative[i]) support[i] = valuations[i]->supporting_weights(tentative[i]);
  Allocation out(n, 0);
  int all = 0;
  for (int mask : tentative) all |= mask;
  Valuation::for_items(all, [&](int j) {
    int winner = -1;
    for (int i = 0; i < n; ++i) {
      if (!(tentative[i] & (1 << j))) continue;
      if (winner < 0 || support[i][j] > support[winner][j]) winner = i;
    }
    if (winner >= 0) out[winner] |= 1 << j;
  });
  return out;
}

// Baseline resolver: contested items go to a uniformly random claimant.
inline Allocation resolve_conflicts_uniform(const std::vector<int>& tentative, RngStream& rng) {
  const int n = static_cast<int>(tentative.size());
  Allocation out(n, 0);
  int all = 0;
  for (int mask : tentative) all |= mask;
  Valuation::for_items(all, [&](int j) {
    std::vector<int> claimants;
    for (int i = 0; i < n; ++i)
      if (tentative[i] & (1 << j)) claimants.push_back(i);
    int winner = claimants[rng.uniform_below(claimants.size())];
    out[winner] |= 1 << j;
  });
  return out;
}

enum class ConflictResolver { xos, uniform };

// The LP-round allocation algorithm: filtered configuration-LP rounding plus
// conflict resolution, packaged for the welfare reduction. Declares the
// variance-ratio bound c = sqrt(4 n m ell / eps) for interim estimation.
class CaLpRoundAlgorithm : public AllocationAlgorithm {
 public:
  CaLpRoundAlgorithm(const MechanismInstance& instance, CAFractionalSolution filtered,
                     double epsilon, ConflictResolver resolver)
      : instance_(&instance), filtered_(std::move(filtered)), epsilon_(epsilon),
        resolver_(resolver) {}

  std::string id() const override {
    return resolver_ == ConflictResolver::xos ? "ca-lp-round" : "ca-lp-round-uniform";
  }
  bool deterministic() const override { return false; }
  bool supports_exact() const override { return true; }
  const CAFractionalSolution& solution() const { return filtered_; }

  double declared_variance_ratio_bound() const {
    return std::sqrt(4.0 * instance_->agent_count() * instance_->item_count() *
                     instance_->support_size() / epsilon_);
  }

  Allocation sample(const ValuationProfile& profile, RngStream& rng) const override {
    std::vector<int> tentative = round_tentative(filtered_, profile.types, rng);
    if (resolver_ == ConflictResolver::uniform) return resolve_conflicts_uniform(tentative, rng);
    return resolve_conflicts_xos(tentative, reported_valuations(profile));
  }

  std::vector<OutcomeAtom> enumerate(const ValuationProfile& profile) const override {
    const int n = instance_->agent_count();
    std::vector<std::vector<std::pair<int, Rat>>> rows(n);
    for (int i = 0; i < n; ++i) {
      rows[i] = filtered_.row(i, profile.types[i]);
      Rat total(0);
      for (const auto& [mask, prob] : rows[i]) total += prob;
      if (total < 1) rows[i].push_back({0, 1 - total});
    }
    std::map<Allocation, Rat> merged;
    std::vector<int> tentative(n, 0);
    std::size_t budget = 1 << 20;
    enumerate_rows(profile, rows, tentative, 0, Rat(1), merged, budget);
    std::vector<OutcomeAtom> atoms;
    atoms.reserve(merged.size());
    for (auto& [alloc, prob] : merged) atoms.push_back({alloc, prob});
    return atoms;
  }

 private:
  std::vector<const Valuation*> reported_valuations(const ValuationProfile& profile) const {
    std::vector<const Valuation*> out(instance_->agent_count());
    for (int i = 0; i < instance_->agent_count(); ++i)
      out[i] = &instance_->valuation(i, profile.types[i]);
    return out;
  }

  void enumerate_rows(const ValuationProfile& profile,
                      const std::vector<std::vector<std::pair<int, Rat>>>& rows,
                      std::vector<int>& tentative, int agent, Rat prob,
                      std::map<Allocation, Rat>& merged, std::size_t& budget) const {
    if (prob == 0) return;
    if (agent == instance_->agent_count()) {
      if (resolver_ == ConflictResolver::xos) {
        add_atom(merged, resolve_conflicts_xos(tentative, reported_valuations(profile)), prob,
                 budget);
      } else {
        Allocation partial(instance_->agent_count(), 0);
        enumerate_uniform(tentative, 0, partial, prob, merged, budget);
      }
      return;
    }
    for (const auto& [mask, p] : rows[agent]) {
      tentative[agent] = mask;
      enumerate_rows(profile, rows, tentative, agent + 1, Rat(prob * p), merged, budget);
    }
    tentative[agent] = 0;
  }

  void enumerate_uniform(const std::vector<int>& tentative, int item, Allocation& partial,
                         Rat prob, std::map<Allocation, Rat>& merged, std::size_t& budget) const {
    const int m = instance_->item_count();
    while (item < m) {
      std::vector<int> claimants;
      for (int i = 0; i < instance_->agent_count(); ++i)
        if (tentative[i] & (1 << item)) claimants.push_back(i);
      if (claimants.size() > 1) break;
      if (claimants.size() == 1) partial[claimants[0]] |= 1 << item;
      ++item;
    }
    if (item == m) {
      add_atom(merged, partial, prob, budget);
      return;
    }
    std::vector<int> claimants;
    for (int i = 0; i < instance_->agent_count(); ++i)
      if (tentative[i] & (1 << item)) claimants.push_back(i);
    Rat share = prob / static_cast<long>(claimants.size());
    for (int winner : claimants) {
      Allocation next = partial;
      next[winner] |= 1 << item;
      enumerate_uniform(tentative, item + 1, next, share, merged, budget);
    }
  }

  static void add_atom(std::map<Allocation, Rat>& merged, const Allocation& alloc, const Rat& prob,
                       std::size_t& budget) {
    if (budget == 0) throw EnumerationTooLarge("rounding enumeration exceeds guard");
    --budget;
    merged[alloc] += prob;
  }

  const MechanismInstance* instance_;
  CAFractionalSolution filtered_;
  double epsilon_;
  ConflictResolver resolver_;
};

// Convenience pipeline: solve, filter, wrap.
inline std::shared_ptr<CaLpRoundAlgorithm> make_ca_algorithm(const MechanismInstance& instance,
                                                             const Rat& epsilon,
                                                             ConflictResolver resolver) {
  CAFractionalSolution solution = solve_ca_lp(instance);
  CAFractionalSolution filtered = filter_solution(solution, epsilon);
  return std::make_shared<CaLpRoundAlgorithm>(instance, std::move(filtered), epsilon.get_d(),
                                              resolver);
}

}  // namespace bicforge
