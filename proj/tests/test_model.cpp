#include <catch2/catch_amalgamated.hpp>

#include "bicforge/model.hpp"
#include "support/random_problems.hpp"

using namespace bicforge;

namespace {

MechanismInstance single_agent_instance(std::vector<Rat> values, std::vector<Rat> prior) {
  std::vector<std::vector<Valuation>> supports(1);
  for (std::size_t t = 0; t < prior.size(); ++t)
    supports[0].push_back(Valuation::explicit_list(values));
  return build_instance({static_cast<int>(values.size())}, Feasibility::unrestricted(), supports,
                        {std::move(prior)});
}

}  // namespace

TEST_CASE("build_instance validates and pads") {
  SECTION("singleton instance is valid") {
    std::vector<std::vector<Valuation>> supports{{Valuation::explicit_list({rat(5)})}};
    auto inst = build_instance({1}, Feasibility::unrestricted(), supports, {{rat(1)}});
    REQUIRE(inst.agent_count() == 1);
    REQUIRE(inst.support_size() == 1);
    REQUIRE(inst.value(0, 0, 0) == rat(5));
  }

  SECTION("prior sum mismatch") {
    std::vector<std::vector<Valuation>> supports{
        {Valuation::explicit_list({rat(1)}), Valuation::explicit_list({rat(2)})}};
    REQUIRE_THROWS_AS(
        build_instance({1}, Feasibility::unrestricted(), supports, {{rat(6, 10), rat(3, 10)}}),
        ProbabilitySumMismatch);
  }

  SECTION("empty explicit feasibility is infeasible") {
    std::vector<std::vector<Valuation>> supports{{Valuation::explicit_list({rat(1)})},
                                                 {Valuation::explicit_list({rat(1)})}};
    REQUIRE_THROWS_AS(build_instance({1, 1}, Feasibility::explicit_list({}), supports,
                                     {{rat(1)}, {rat(1)}}),
                      InfeasibleInstance);
  }

  SECTION("ragged supports are padded with zero-probability duplicates") {
    std::vector<std::vector<Valuation>> supports(2);
    supports[0] = {Valuation::explicit_list({rat(1), rat(2)}),
                   Valuation::explicit_list({rat(0), rat(3)})};
    supports[1] = {Valuation::explicit_list({rat(4), rat(0)})};
    auto inst = build_instance({2, 2}, Feasibility::unrestricted(), supports,
                               {{rat(1, 2), rat(1, 2)}, {rat(1)}});
    REQUIRE(inst.support_size() == 2);
    REQUIRE(inst.prior(1, 1) == 0);
    REQUIRE(inst.value(1, 1, 0) == rat(4));
  }

  SECTION("near-one priors are normalized exactly") {
    auto inst = single_agent_instance({rat(1), rat(2)},
                                      {rat_from_double(0.1) * 3, rat_from_double(0.7)});
    Rat sum = inst.prior(0, 0) + inst.prior(0, 1);
    REQUIRE(sum == 1);
  }
}

TEST_CASE("v_max and granularity") {
  auto inst = single_agent_instance({rat(0), rat(5)}, {rat(1, 4), rat(3, 4)});
  REQUIRE(v_max(inst) == rat(5));
  REQUIRE(granularity(inst) == rat(1, 4));

  SECTION("all-zero values") {
    auto zero = single_agent_instance({rat(0)}, {rat(1)});
    REQUIRE(v_max(zero) == 0);
    REQUIRE(granularity(zero) == 1);
  }

  SECTION("uniform prior over 4 types") {
    auto inst4 = single_agent_instance({rat(1)},
                                       {rat(1, 4), rat(1, 4), rat(1, 4), rat(1, 4)});
    REQUIRE(granularity(inst4) == rat(1, 4));
  }
}

TEST_CASE("set valuations") {
  SECTION("additive evaluation and supporting vector") {
    auto v = Valuation::additive({rat(1), rat(2), rat(3)});
    REQUIRE(v.value(0b101) == rat(4));
    auto support = xos_supporting(v, 0b101);
    REQUIRE(support[0] + support[2] == rat(4));
  }

  SECTION("xos picks the maximizing clause") {
    auto v = Valuation::xos({{rat(2), rat(0)}, {rat(0), rat(2)}});
    REQUIRE(v.value(0b01) == rat(2));
    auto support = xos_supporting(v, 0b01);
    REQUIRE(support[0] == rat(2));
  }

  SECTION("xos tie goes to lowest-index clause, sum matches value") {
    auto v = Valuation::xos({{rat(3), rat(1)}, {rat(1), rat(3)}});
    REQUIRE(v.value(0b11) == rat(4));
    auto support = xos_supporting(v, 0b11);
    REQUIRE(support[0] + support[1] == rat(4));
    REQUIRE(support[0] == rat(3));  // clause 0 wins the tie
  }

  SECTION("budget-additive caps at the budget and is not XOS-convertible") {
    auto v = Valuation::budget_additive({rat(3), rat(3)}, rat(4));
    REQUIRE(v.value(0b11) == rat(4));
    REQUIRE_THROWS_AS(xos_supporting(v, 0b11), NotXOS);
  }

  SECTION("unit-demand converts to a single-item supporting vector") {
    auto v = Valuation::unit_demand({rat(1), rat(5), rat(2)});
    REQUIRE(v.value(0b111) == rat(5));
    auto support = xos_supporting(v, 0b101);
    Rat total(0);
    for (const auto& x : support) total += x;
    REQUIRE(total == v.value(0b101));
  }
}

TEST_CASE("generated set valuations are monotone, normalized, subadditive") {
  RngStream rng(2024);
  const int items = 6;
  for (ValuationKind kind : {ValuationKind::additive, ValuationKind::unit_demand,
                             ValuationKind::budget_additive, ValuationKind::xos}) {
    for (int rep = 0; rep < 10; ++rep) {
      RngStream local = rng.derive(static_cast<int>(kind), rep);
      auto v = random_valuation(kind, items, local);
      REQUIRE(v.value(0) == 0);
      REQUIRE(check_monotone(v, items, 1000, local));
      if (kind == ValuationKind::budget_additive || kind == ValuationKind::xos)
        REQUIRE(check_subadditive(v, items, 1000, local));
    }
  }
}

TEST_CASE("xos_supporting is a declared clause whose sum matches v(S)") {
  RngStream rng(77);
  for (int rep = 0; rep < 50; ++rep) {
    RngStream local = rng.derive(rep);
    auto v = random_valuation(ValuationKind::xos, 5, local);
    int mask = static_cast<int>(local.uniform_below(32));
    auto support = xos_supporting(v, mask);
    Rat sum(0);
    Valuation::for_items(mask, [&](int j) { sum += support[j]; });
    REQUIRE(sum == v.value(mask));
    REQUIRE(std::find(v.clauses().begin(), v.clauses().end(), support) != v.clauses().end());
  }
}

TEST_CASE("sample_profile") {
  SECTION("degenerate prior always draws type 0") {
    auto inst = single_agent_instance({rat(1), rat(2)}, {rat(1), rat(0)});
    RngStream rng(1);
    for (int k = 0; k < 100; ++k) REQUIRE(sample_profile(inst, rng).types[0] == 0);
  }

  SECTION("empirical frequency matches the prior") {
    auto inst = single_agent_instance({rat(1), rat(2)}, {rat(1, 2), rat(1, 2)});
    RngStream rng(9);
    int hits = 0;
    const int draws = 100000;
    for (int k = 0; k < draws; ++k)
      if (sample_profile(inst, rng).types[0] == 0) ++hits;
    double freq = static_cast<double>(hits) / draws;
    REQUIRE(freq == Catch::Approx(0.5).margin(0.01));  // ~3 sigma on 1e5 draws
  }

  SECTION("same seed gives identical profiles") {
    RngStream r1(1234), r2(1234);
    auto inst = single_agent_instance({rat(1), rat(2), rat(3)},
                                      {rat(1, 3), rat(1, 3), rat(1, 3)});
    for (int k = 0; k < 50; ++k)
      REQUIRE(sample_profile(inst, r1).types == sample_profile(inst, r2).types);
  }
}

TEST_CASE("downward closure detection") {
  std::vector<std::vector<Valuation>> supports{
      {Valuation::explicit_list({rat(0), rat(2)})}, {Valuation::explicit_list({rat(0), rat(3)})}};
  std::vector<std::vector<Rat>> priors{{rat(1)}, {rat(1)}};

  auto closed = build_instance({2, 2},
                               Feasibility::explicit_list({{0, 0}, {1, 0}, {0, 1}}),
                               supports, priors, /*has_null=*/true);
  REQUIRE(closed.is_downward_closed());

  auto open = build_instance({2, 2}, Feasibility::explicit_list({{0, 0}, {1, 1}}), supports,
                             priors, /*has_null=*/true);
  REQUIRE_FALSE(open.is_downward_closed());

  auto no_null = build_instance({2, 2}, Feasibility::unrestricted(), supports, priors,
                                /*has_null=*/false);
  REQUIRE_FALSE(no_null.is_downward_closed());
}
