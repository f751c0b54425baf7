#pragma once

#include <cmath>
#include <filesystem>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bicforge/algorithms.hpp"
#include "bicforge/ca.hpp"
#include "bicforge/io.hpp"
#include "bicforge/mechanism.hpp"
#include "bicforge/reduction_rr.hpp"
#include "bicforge/reduction_sw.hpp"
#include "bicforge/verify.hpp"

namespace bicforge {

// Experiment runner: one config drives instance loading, algorithm
// construction, the chosen reduction, verification, and deterministic
// CSV/manifest emission. Identical (config, seed) pairs produce
// byte-identical CSV output.
struct ExperimentConfig {
  std::string command = "run";
  std::string instance_path;
  std::string algorithm_id = "optimal-bruteforce";
  std::string reduction = "sw";  // sw | revenue | surplus | none
  std::string mode = "exact";    // exact | relative | absolute
  double epsilon = 0.1;          // estimation accuracy for the sampled modes
  double c = 0.0;                // std/mean bound; 0 = auto
  std::string ca_epsilon = "1/10";
  std::string resolver = "xos";  // xos | uniform
  std::uint64_t seed = 1;
  int replications = 1;
  std::string out_dir;
  bool no_cache = false;
  int mc_samples = 20000;

  void validate() const {
    if (instance_path.empty()) throw InvalidArgument("missing instance path");
    if (!std::filesystem::exists(instance_path))
      throw InvalidArgument("instance file does not exist: " + instance_path);
    if (mode != "exact" && (epsilon <= 0.0 || epsilon >= 1.0))
      throw InvalidEpsilon("epsilon must lie in (0,1) for estimation modes");
    if (replications < 1) throw InvalidArgument("replications must be >= 1");
    if (reduction != "sw" && reduction != "revenue" && reduction != "surplus" &&
        reduction != "none")
      throw InvalidArgument("unknown reduction: " + reduction);
    if (mode != "exact" && mode != "relative" && mode != "absolute")
      throw InvalidArgument("unknown interim mode: " + mode);
  }

  InterimMode interim_mode() const {
    if (mode == "exact") return InterimMode::exact;
    return mode == "relative" ? InterimMode::relative : InterimMode::absolute;
  }

  json echo() const {
    json j;
    j["command"] = command;
    j["instance"] = instance_path;
    j["algorithm"] = algorithm_id;
    j["reduction"] = reduction;
    j["mode"] = mode;
    j["epsilon"] = epsilon;
    j["c"] = c;
    j["ca_epsilon"] = ca_epsilon;
    j["resolver"] = resolver;
    j["seed"] = seed;
    j["replications"] = replications;
    j["no_cache"] = no_cache;
    j["mc_samples"] = mc_samples;
    return j;
  }
};

inline std::string git_describe() {
  FILE* pipe = ::popen("git describe --always --dirty 2>/dev/null", "r");
  if (!pipe) return "unknown";
  char buf[128] = {0};
  std::string out;
  while (fgets(buf, sizeof buf, pipe)) out += buf;
  ::pclose(pipe);
  while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
  return out.empty() ? "unknown" : out;
}

struct BuiltAlgorithm {
  std::shared_ptr<AllocationAlgorithm> algorithm;
  double variance_bound = 10.0;
  std::string warning;
};

inline BuiltAlgorithm make_algorithm(const MechanismInstance& instance,
                                     const ExperimentConfig& config) {
  BuiltAlgorithm built;
  if (config.algorithm_id == "constant") {
    built.algorithm = std::make_shared<ConstantAlgorithm>(instance);
  } else if (config.algorithm_id == "serial-dictator") {
    built.algorithm = std::make_shared<SerialDictatorAlgorithm>(instance);
  } else if (config.algorithm_id == "optimal-bruteforce") {
    built.algorithm = std::make_shared<OptimalBruteForceAlgorithm>(instance);
  } else if (config.algorithm_id == "ca-lp-round") {
    ConflictResolver resolver =
        config.resolver == "uniform" ? ConflictResolver::uniform : ConflictResolver::xos;
    auto ca = make_ca_algorithm(instance, rat_parse(config.ca_epsilon), resolver);
    built.variance_bound = ca->declared_variance_ratio_bound();
    built.algorithm = ca;
  } else {
    throw InvalidArgument("unknown algorithm id: " + config.algorithm_id);
  }
  if (config.c > 0) {
    built.variance_bound = config.c;
  } else if (config.algorithm_id != "ca-lp-round" && config.mode == "relative") {
    built.variance_bound = 10.0;
    built.warning = "no std/mean bound supplied; defaulting c to 10";
  }
  return built;
}

namespace detail {

template <typename T>
InterimTable<T> interim_cached(const MechanismInstance& instance,
                               const AllocationAlgorithm& algorithm,
                               const ExperimentConfig& config, double c, RngStream rng,
                               const std::string& cache_dir) {
  InterimMode mode = config.interim_mode();
  std::string key;
  {
    std::ostringstream s;
    s << instance_hash(instance) << "-" << algorithm.id() << "-" << interim_mode_name(mode) << "-"
      << format_sig(config.epsilon) << "-" << format_sig(c) << "-"
      << (mode == InterimMode::exact ? 0 : rng.seed());
    key = std::to_string(fnv1a64(s.str()));
  }
  std::string path = cache_dir + "/interim-" + key + ".json";
  if (!config.no_cache && !cache_dir.empty() && std::filesystem::exists(path)) {
    return interim_from_json<T>(load_json_file(path));
  }
  InterimTable<T> table;
  if constexpr (ScalarTraits<T>::exact) {
    table = exact_interim(instance, algorithm);
  } else {
    table = mode == InterimMode::relative
                ? estimate_interim_relative(instance, algorithm, config.epsilon, c, rng)
                : estimate_interim_absolute(instance, algorithm, config.epsilon, rng);
  }
  if (!config.no_cache && !cache_dir.empty()) {
    std::filesystem::create_directories(cache_dir);
    write_text_file(path, interim_to_json(table).dump(1));
  }
  return table;
}

struct ReplicationRow {
  double sw = 0, revenue = 0, residual = 0, max_regret = 0;
  bool ir_ok = true;
  bool exact = true;
};

// Monte Carlo regret estimate for mechanisms too large to enumerate: every
// (i, s, t) interim utility is estimated from `samples` draws.
template <typename T>
double estimate_regret_mc(const MechanismInstance& instance, const Mechanism<T>& mech,
                          int samples, RngStream rng) {
  const int n = instance.agent_count();
  const int ell = instance.support_size();
  double worst = 0;
  for (int i = 0; i < n; ++i) {
    std::vector<std::vector<double>> utility(ell, std::vector<double>(ell, 0.0));
    for (int t = 0; t < ell; ++t) {
      if (instance.prior(i, t) == 0) continue;
      for (int k = 0; k < samples; ++k) {
        RngStream local = rng.derive(i, t, k);
        ValuationProfile reported = sample_profile(instance, local);
        reported.types[i] = t;
        Outcome<T> outcome = mech.sample(reported, local);
        for (int s = 0; s < ell; ++s) {
          if (instance.prior(i, s) == 0) continue;
          double value = instance.valuation(i, s).value_d(outcome.allocation[i]);
          utility[s][t] += (value - to_double(outcome.prices[i])) / samples;
        }
      }
    }
    for (int s = 0; s < ell; ++s)
      for (int t = 0; t < ell; ++t) {
        if (s == t || instance.prior(i, s) == 0 || instance.prior(i, t) == 0) continue;
        worst = std::max(worst, utility[s][t] - utility[s][s]);
      }
  }
  return worst;
}

template <typename T>
ReplicationRow evaluate_mechanism(const MechanismInstance& instance, const Mechanism<T>& mech,
                                  const ExperimentConfig& config, RngStream rng) {
  ReplicationRow row;
  std::size_t profiles = 1;
  for (int i = 0; i < instance.agent_count(); ++i)
    profiles *= static_cast<std::size_t>(instance.support_size());
  bool enumerable = mech.supports_exact() && profiles <= 100000;
  if (enumerable) {
    try {
      auto perf = performance(instance, mech);
      auto bic = check_bic(instance, interim_utilities(instance, mech), 0.0);
      auto ir = check_ir(instance, mech);
      row.sw = to_double(perf.social_welfare);
      row.revenue = to_double(perf.revenue);
      row.residual = to_double(perf.residual_surplus);
      row.max_regret = to_double(bic.max_regret);
      row.ir_ok = ir.ok;
      return row;
    } catch (const EnumerationTooLarge&) {
      // fall through to Monte Carlo
    }
  }
  row.exact = false;
  Performance<double> se;
  auto perf = performance_monte_carlo(instance, mech, config.mc_samples, rng.derive(1), &se);
  row.sw = perf.social_welfare;
  row.revenue = perf.revenue;
  row.residual = perf.residual_surplus;
  row.max_regret = estimate_regret_mc(instance, mech, std::max(1000, config.mc_samples / 10),
                                      rng.derive(2));
  // IR sweep over sampled realizations (the exact sweep is out of reach).
  row.ir_ok = true;
  RngStream ir_rng = rng.derive(3);
  for (int k = 0; k < config.mc_samples && row.ir_ok; ++k) {
    RngStream local = ir_rng.derive(k);
    ValuationProfile profile = sample_profile(instance, local);
    Outcome<T> outcome = mech.sample(profile, local);
    for (int i = 0; i < instance.agent_count(); ++i) {
      double utility = instance.valuation(i, profile.types[i]).value_d(outcome.allocation[i]) -
                       to_double(outcome.prices[i]);
      if (utility < -1e-9) row.ir_ok = false;
    }
  }
  return row;
}

}  // namespace detail

template <typename T>
json matrix_json(const Matrix<T>& m) {
  json rows = json::array();
  for (std::size_t s = 0; s < m.rows(); ++s) {
    json row = json::array();
    for (std::size_t t = 0; t < m.cols(); ++t) row.push_back(format_scalar(m(s, t)));
    rows.push_back(row);
  }
  return rows;
}


template <typename T>
json reduction_tables_json(const ReductionTables<T>& tables) {
  json j;
  j["kind"] = "sw";
  j["mode"] = interim_mode_name(tables.mode);
  j["epsilon"] = tables.epsilon;
  json agents = json::array();
  for (int i = 0; i < tables.agents(); ++i) {
    json a;
    a["interim_values"] = matrix_json(tables.interim_values[i]);
    a["allocation"] = matrix_json(tables.allocations[i]);
    json prices = json::array();
    for (const T& p : tables.prices[i]) prices.push_back(format_scalar(p));
    a["prices"] = prices;
    agents.push_back(a);
  }
  j["agents"] = agents;
  return j;
}

template <typename T>
json meta_tables_json(const MetaTables<T>& tables) {
  json j;
  j["kind"] = tables.objective == LadderObjective::revenue ? "revenue" : "surplus";
  j["mode"] = interim_mode_name(tables.mode);
  j["epsilon"] = tables.epsilon;
  json agents = json::array();
  for (int i = 0; i < tables.agents(); ++i) {
    json a;
    a["interim_values"] = matrix_json(tables.interim_values[i]);
    a["allocation"] = matrix_json(tables.allocations[i]);
    json prices = json::array();
    for (const T& p : tables.prices[i]) prices.push_back(format_scalar(p));
    a["prices"] = prices;
    json leftover = json::array();
    for (const T& y : tables.leftover[i]) leftover.push_back(format_scalar(y));
    a["leftover"] = leftover;
    a["ladder_levels"] = tables.ladder[i].levels;
    a["ladder_chosen"] = tables.ladder[i].chosen_level;
    agents.push_back(a);
  }
  j["agents"] = agents;
  return j;
}

struct RunArtifacts {
  std::vector<detail::ReplicationRow> rows;
  std::string metrics_csv;
  std::string summary;
  json manifest;
  json tables;
  std::string ladder_csv;
};

template <typename T>
void append_ladder_rows(std::ostringstream& csv, const MetaTables<T>& tables) {
  for (int i = 0; i < tables.agents(); ++i)
    for (std::size_t k = 0; k < tables.ladder[i].reserve.size(); ++k) {
      csv << i << "," << (k + 1) << "," << format_scalar(tables.ladder[i].reserve[k]) << ","
          << format_scalar(tables.ladder[i].level_revenue[k]) << ","
          << format_scalar(tables.ladder[i].level_surplus[k]) << ","
          << (static_cast<int>(k + 1) == tables.ladder[i].chosen_level ? 1 : 0) << "\n";
    }
}

// The shared pipeline behind reduce-sw, reduce-rr and verify.
inline RunArtifacts run_experiment(const ExperimentConfig& config) {
  config.validate();
  MechanismInstance instance = load_instance(config.instance_path);
  BuiltAlgorithm built = make_algorithm(instance, config);
  std::string cache_dir = config.out_dir.empty() ? std::string() : config.out_dir + "/cache";

  RunArtifacts artifacts;
  artifacts.rows.resize(config.replications);
  RngStream master(config.seed);

  LadderObjective objective =
      config.reduction == "surplus" ? LadderObjective::surplus : LadderObjective::revenue;

  std::ostringstream ladder_csv;
  ladder_csv << "# bicforge ladder v1\nagent,level,reserve,revenue,surplus,chosen\n";

  for (int r = 0; r < config.replications; ++r) {
    RngStream rep_rng = master.derive(static_cast<std::uint64_t>(r));
    if (config.mode == "exact") {
      auto table = detail::interim_cached<Rat>(instance, *built.algorithm, config,
                                               built.variance_bound, rep_rng, cache_dir);
      if (config.reduction == "none") {
        PostedPriceMechanism<Rat> mech(instance, built.algorithm,
                                       std::vector<Rat>(instance.agent_count(), Rat(0)));
        artifacts.rows[r] = detail::evaluate_mechanism(instance, mech, config, rep_rng);
      } else if (config.reduction == "sw") {
        auto tables = precompute_from_table(instance, table);
        if (r == 0) artifacts.tables = reduction_tables_json(tables);
        SwMechanism<Rat> mech(instance, built.algorithm, std::move(tables));
        artifacts.rows[r] = detail::evaluate_mechanism(instance, mech, config, rep_rng);
      } else {
        auto tables = meta_precompute_from_table(instance, table, objective);
        if (r == 0) {
          artifacts.tables = meta_tables_json(tables);
          append_ladder_rows(ladder_csv, tables);
        }
        MetaMechanism<Rat> mech(instance, built.algorithm, std::move(tables));
        artifacts.rows[r] = detail::evaluate_mechanism(instance, mech, config, rep_rng);
      }
    } else {
      auto table = detail::interim_cached<double>(instance, *built.algorithm, config,
                                                  built.variance_bound, rep_rng, cache_dir);
      if (config.reduction == "none") {
        PostedPriceMechanism<double> mech(instance, built.algorithm,
                                          std::vector<double>(instance.agent_count(), 0.0));
        artifacts.rows[r] = detail::evaluate_mechanism(instance, mech, config, rep_rng);
      } else if (config.reduction == "sw") {
        auto tables = precompute_from_table(instance, table);
        if (r == 0) artifacts.tables = reduction_tables_json(tables);
        SwMechanism<double> mech(instance, built.algorithm, std::move(tables));
        artifacts.rows[r] = detail::evaluate_mechanism(instance, mech, config, rep_rng);
      } else {
        auto tables = meta_precompute_from_table(instance, table, objective);
        if (r == 0) {
          artifacts.tables = meta_tables_json(tables);
          append_ladder_rows(ladder_csv, tables);
        }
        MetaMechanism<double> mech(instance, built.algorithm, std::move(tables));
        artifacts.rows[r] = detail::evaluate_mechanism(instance, mech, config, rep_rng);
      }
    }
  }
  artifacts.ladder_csv = ladder_csv.str();

  std::ostringstream csv;
  csv << "# bicforge metrics v1\n";
  csv << "replication,sw,revenue,residual_surplus,max_regret,ir_ok,exact\n";
  for (int r = 0; r < config.replications; ++r) {
    const auto& row = artifacts.rows[r];
    csv << r << "," << format_sig(row.sw) << "," << format_sig(row.revenue) << ","
        << format_sig(row.residual) << "," << format_sig(row.max_regret) << ","
        << (row.ir_ok ? 1 : 0) << "," << (row.exact ? 1 : 0) << "\n";
  }
  artifacts.metrics_csv = csv.str();

  auto mean_se = [&](auto get) {
    double mean = 0, m2 = 0;
    for (const auto& row : artifacts.rows) mean += get(row);
    mean /= artifacts.rows.size();
    for (const auto& row : artifacts.rows) m2 += (get(row) - mean) * (get(row) - mean);
    double se = artifacts.rows.size() > 1
                    ? std::sqrt(m2 / (artifacts.rows.size() - 1) / artifacts.rows.size())
                    : 0.0;
    return std::pair<double, double>(mean, se);
  };
  std::ostringstream summary;
  summary << "bicforge " << config.command << " summary\n";
  summary << "instance: " << config.instance_path << "\n";
  summary << "algorithm: " << config.algorithm_id << "  reduction: " << config.reduction
          << "  mode: " << config.mode << "  seed: " << config.seed << "\n";
  if (!built.warning.empty()) summary << "warning: " << built.warning << "\n";
  auto [sw, sw_se] = mean_se([](const auto& r) { return r.sw; });
  auto [rev, rev_se] = mean_se([](const auto& r) { return r.revenue; });
  auto [rs, rs_se] = mean_se([](const auto& r) { return r.residual; });
  auto [reg, reg_se] = mean_se([](const auto& r) { return r.max_regret; });
  bool all_ir = true;
  for (const auto& row : artifacts.rows) all_ir = all_ir && row.ir_ok;
  summary << "social_welfare: " << format_sig(sw) << " (se " << format_sig(sw_se) << ")\n";
  summary << "revenue: " << format_sig(rev) << " (se " << format_sig(rev_se) << ")\n";
  summary << "residual_surplus: " << format_sig(rs) << " (se " << format_sig(rs_se) << ")\n";
  summary << "max_regret: " << format_sig(reg) << " (se " << format_sig(reg_se) << ")\n";
  summary << "ir_ok: " << (all_ir ? "yes" : "NO") << "\n";
  artifacts.summary = summary.str();

  artifacts.manifest["config"] = config.echo();
  artifacts.manifest["seed"] = config.seed;
  artifacts.manifest["git_describe"] = git_describe();
  artifacts.manifest["csv_schema"] = "metrics/1";
  artifacts.manifest["instance_hash"] = instance_hash(instance);

  if (!config.out_dir.empty()) {
    std::filesystem::create_directories(config.out_dir);
    write_text_file(config.out_dir + "/metrics.csv", artifacts.metrics_csv);
    write_text_file(config.out_dir + "/summary.txt", artifacts.summary);
    write_text_file(config.out_dir + "/manifest.json", artifacts.manifest.dump(1) + "\n");
    if (!artifacts.tables.is_null())
      write_text_file(config.out_dir + "/tables.json", artifacts.tables.dump(1) + "\n");
    if (config.reduction == "revenue" || config.reduction == "surplus")
      write_text_file(config.out_dir + "/ladder.csv", artifacts.ladder_csv);
  }
  return artifacts;
}

}  // namespace bicforge
