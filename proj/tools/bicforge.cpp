// bicforge: wrap Bayesian allocation algorithms into incentive-compatible
// mechanisms via induced assignment problems and envy-free prices, and verify
// the result by exact enumeration at desk scale.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>

#include "bicforge/experiment.hpp"

using namespace bicforge;

namespace {

void apply_config_file(ExperimentConfig& config, const std::string& path) {
  json j = load_json_file(path);
  if (j.contains("instance")) config.instance_path = j["instance"].get<std::string>();
  if (j.contains("algorithm")) config.algorithm_id = j["algorithm"].get<std::string>();
  if (j.contains("reduction")) config.reduction = j["reduction"].get<std::string>();
  if (j.contains("mode")) config.mode = j["mode"].get<std::string>();
  if (j.contains("epsilon")) config.epsilon = j["epsilon"].get<double>();
  if (j.contains("c")) config.c = j["c"].get<double>();
  if (j.contains("ca_epsilon")) config.ca_epsilon = j["ca_epsilon"].get<std::string>();
  if (j.contains("resolver")) config.resolver = j["resolver"].get<std::string>();
  if (j.contains("seed")) config.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("replications")) config.replications = j["replications"].get<int>();
  if (j.contains("out")) config.out_dir = j["out"].get<std::string>();
  if (j.contains("no_cache")) config.no_cache = j["no_cache"].get<bool>();
  if (j.contains("mc_samples")) config.mc_samples = j["mc_samples"].get<int>();
}

void add_common_flags(CLI::App* cmd, ExperimentConfig& config, std::string& config_path) {
  cmd->add_option("--config", config_path, "JSON config file (flags override it)");
  cmd->add_option("--instance", config.instance_path, "instance file (JSON)");
  cmd->add_option("--algorithm", config.algorithm_id,
                  "ca-lp-round | serial-dictator | constant | optimal-bruteforce");
  cmd->add_option("--mode", config.mode, "exact | relative | absolute");
  cmd->add_option("--epsilon", config.epsilon, "estimation accuracy (estimation modes)");
  cmd->add_option("--c", config.c, "std/mean bound for relative estimation (0 = auto)");
  cmd->add_option("--ca-epsilon", config.ca_epsilon, "filter threshold parameter, e.g. 1/10");
  cmd->add_option("--resolver", config.resolver, "xos | uniform");
  cmd->add_option("--seed", config.seed, "master seed");
  cmd->add_option("--replications", config.replications, "independent replications");
  cmd->add_option("--out", config.out_dir, "output directory");
  cmd->add_flag("--no-cache", config.no_cache, "disable the interim table cache");
  cmd->add_option("--mc-samples", config.mc_samples, "Monte Carlo fallback sample count");
}

int run_and_print(ExperimentConfig config, const std::string& config_path) {
  if (!config_path.empty()) {
    ExperimentConfig from_file = config;
    apply_config_file(from_file, config_path);
    config = from_file;
  }
  RunArtifacts artifacts = run_experiment(config);
  std::cout << artifacts.summary;
  if (config.out_dir.empty()) std::cout << artifacts.metrics_csv;
  return 0;
}

int cmd_solve_assignment(const std::string& path, const std::string& out_dir) {
  auto problem = assignment_from_json(load_json_file(path));
  auto solution = solve_welfare_lp(problem);
  auto cert = check_certificate(problem, solution);
  auto envy = check_envy_free(problem, solution);

  std::ostringstream out;
  out << "objective: " << format_scalar(solution.objective) << "\n";
  out << "allocation:\n";
  for (std::size_t s = 0; s < problem.buyers(); ++s) {
    out << " ";
    for (std::size_t t = 0; t < problem.products(); ++t)
      out << " " << format_scalar(solution.allocation(s, t));
    out << "\n";
  }
  out << "prices:";
  for (const auto& p : solution.prices) out << " " << format_scalar(p);
  out << "\nbuyer_utilities:";
  for (const auto& u : solution.buyer_utilities) out << " " << format_scalar(u);
  out << "\ncertificate: primal=" << cert.primal_ok << " dual=" << cert.dual_ok
      << " cs=" << cert.cs_ok << " market_clearing=" << cert.market_clearing
      << " strong_duality=" << cert.strong_duality_ok << "\n";
  out << "envy_free: " << envy.ok << "\n";
  std::cout << out.str();
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    write_text_file(out_dir + "/solution.txt", out.str());
  }
  return 0;
}

int cmd_ca_experiment(ExperimentConfig config) {
  config.algorithm_id = "ca-lp-round";
  config.reduction = "sw";
  config.validate();
  MechanismInstance instance = load_instance(config.instance_path);
  Rat eps = rat_parse(config.ca_epsilon);
  auto lp_solution = solve_ca_lp(instance);
  auto filtered = filter_solution(lp_solution, eps);
  ConflictResolver resolver =
      config.resolver == "uniform" ? ConflictResolver::uniform : ConflictResolver::xos;
  auto algorithm = std::make_shared<CaLpRoundAlgorithm>(instance, filtered, eps.get_d(), resolver);

  RngStream master(config.seed);
  std::ostringstream csv;
  csv << "# bicforge ca-experiment v1\n";
  csv << "replication,lp_value,filtered_value,algorithm_sw,mechanism_sw,regret_estimate,ir_ok\n";
  double alg_sw_mean = 0, mech_sw_mean = 0, regret_mean = 0;
  for (int r = 0; r < config.replications; ++r) {
    RngStream rep = master.derive(r);
    ExperimentConfig rep_config = config;
    detail::ReplicationRow row;
    if (config.mode == "exact") {
      auto exact = exact_interim(instance, *algorithm);
      auto tables = precompute_from_table(instance, exact);
      SwMechanism<Rat> mech(instance, algorithm, std::move(tables));
      row = detail::evaluate_mechanism(instance, mech, rep_config, rep);
    } else {
      double c = config.c > 0 ? config.c : algorithm->declared_variance_ratio_bound();
      auto est = config.mode == "relative"
                     ? estimate_interim_relative(instance, *algorithm, config.epsilon, c, rep)
                     : estimate_interim_absolute(instance, *algorithm, config.epsilon, rep);
      auto tables = precompute_from_table(instance, est);
      SwMechanism<double> mech(instance, algorithm, std::move(tables));
      row = detail::evaluate_mechanism(instance, mech, rep_config, rep);
    }
    // Algorithm-only welfare via the same evaluator with zero prices.
    PostedPriceMechanism<Rat> bare(instance, algorithm,
                                   std::vector<Rat>(instance.agent_count(), Rat(0)));
    auto bare_row = detail::evaluate_mechanism(instance, bare, rep_config, rep.derive(99));
    csv << r << "," << format_sig(lp_solution.objective.get_d()) << ","
        << format_sig(filtered.objective.get_d()) << "," << format_sig(bare_row.sw) << ","
        << format_sig(row.sw) << "," << format_sig(row.max_regret) << "," << (row.ir_ok ? 1 : 0)
        << "\n";
    alg_sw_mean += bare_row.sw / config.replications;
    mech_sw_mean += row.sw / config.replications;
    regret_mean += row.max_regret / config.replications;
  }

  std::ostringstream summary;
  summary << "bicforge ca-experiment summary\n";
  summary << "instance: " << config.instance_path << "  resolver: " << config.resolver
          << "  mode: " << config.mode << "  seed: " << config.seed << "\n";
  summary << "lp_value: " << format_sig(lp_solution.objective.get_d()) << "\n";
  summary << "filtered_value: " << format_sig(filtered.objective.get_d()) << " (>= (1-eps) lp)\n";
  summary << "lp_nonzeros: " << lp_solution.nonzeros() << "\n";
  summary << "algorithm_sw: " << format_sig(alg_sw_mean) << "\n";
  summary << "mechanism_sw: " << format_sig(mech_sw_mean) << "\n";
  summary << "regret_estimate: " << format_sig(regret_mean) << "\n";
  summary << "variance_ratio_bound: " << format_sig(algorithm->declared_variance_ratio_bound())
          << "\n";
  std::cout << summary.str();
  if (!config.out_dir.empty()) {
    std::filesystem::create_directories(config.out_dir);
    write_text_file(config.out_dir + "/results.csv", csv.str());
    write_text_file(config.out_dir + "/summary.txt", summary.str());
    json manifest;
    manifest["config"] = config.echo();
    manifest["git_describe"] = git_describe();
    manifest["csv_schema"] = "ca-experiment/1";
    write_text_file(config.out_dir + "/manifest.json", manifest.dump(1) + "\n");
  }
  return 0;
}

int cmd_verify(ExperimentConfig config) {
  config.validate();
  MechanismInstance instance = load_instance(config.instance_path);
  BuiltAlgorithm built = make_algorithm(instance, config);

  std::ostringstream csv;
  csv << "# bicforge incentive v1\nagent,true_type,report,regret\n";
  std::ostringstream summary;
  summary << "bicforge verify summary\n";
  summary << "instance: " << config.instance_path << "  algorithm: " << config.algorithm_id
          << "  reduction: " << config.reduction << "\n";

  auto emit = [&](auto&& mech) {
    auto utilities = interim_utilities(instance, mech);
    auto bic = check_bic(instance, utilities, 0.0);
    auto ir = check_ir(instance, mech);
    auto perf = performance(instance, mech);
    for (int i = 0; i < instance.agent_count(); ++i)
      for (int s = 0; s < instance.support_size(); ++s)
        for (int t = 0; t < instance.support_size(); ++t) {
          if (s == t) continue;
          csv << i << "," << s << "," << t << "," << format_scalar(bic.regret[i](s, t)) << "\n";
        }
    summary << "max_regret: " << format_scalar(bic.max_regret) << "\n";
    summary << "ir_ok: " << (ir.ok ? "yes" : "NO") << " (worst violation "
            << format_scalar(ir.worst_violation) << ")\n";
    summary << "social_welfare: " << format_scalar(perf.social_welfare) << "\n";
    summary << "revenue: " << format_scalar(perf.revenue) << "\n";
    summary << "residual_surplus: " << format_scalar(perf.residual_surplus) << "\n";
    summary << "optimal_welfare: " << format_sig(optimal_welfare(instance).get_d()) << "\n";
  };

  if (config.reduction == "none") {
    PostedPriceMechanism<Rat> mech(instance, built.algorithm,
                                   std::vector<Rat>(instance.agent_count(), Rat(0)));
    emit(mech);
  } else if (config.reduction == "sw") {
    auto tables = precompute_exact(instance, *built.algorithm);
    SwMechanism<Rat> mech(instance, built.algorithm, std::move(tables));
    emit(mech);
  } else {
    LadderObjective objective =
        config.reduction == "surplus" ? LadderObjective::surplus : LadderObjective::revenue;
    auto tables = meta_precompute_exact(instance, *built.algorithm, objective);
    MetaMechanism<Rat> mech(instance, built.algorithm, std::move(tables));
    emit(mech);
  }

  std::cout << summary.str();
  if (!config.out_dir.empty()) {
    std::filesystem::create_directories(config.out_dir);
    write_text_file(config.out_dir + "/incentive.csv", csv.str());
    write_text_file(config.out_dir + "/summary.txt", summary.str());
  }
  return 0;
}

int cmd_lower_bound_demo(int levels, const std::string& objective_name,
                         const std::string& out_dir) {
  auto instance = make_lower_bound_instance(levels);
  LadderObjective objective =
      objective_name == "surplus" ? LadderObjective::surplus : LadderObjective::revenue;
  auto algorithm = std::make_shared<OptimalBruteForceAlgorithm>(instance);
  auto tables = meta_precompute_exact(instance, *algorithm, objective);
  MetaMechanism<Rat> mech(instance, algorithm, tables);
  auto perf = performance(instance, mech);
  auto bic = check_bic(instance, interim_utilities(instance, mech), 0.0);
  auto ir = check_ir(instance, mech);
  Rat opt = optimal_welfare(instance);

  std::ostringstream out;
  out << "lower-bound demo, K = " << levels << ", objective = " << objective_name << "\n";
  out << "granularity: " << format_sig(granularity(instance).get_d()) << "\n";
  out << "optimal_welfare: " << format_sig(opt.get_d()) << "\n";
  out << "mechanism_revenue: " << format_scalar(perf.revenue) << "\n";
  out << "mechanism_residual_surplus: " << format_scalar(perf.residual_surplus) << "\n";
  Rat score = objective == LadderObjective::revenue ? perf.revenue : perf.residual_surplus;
  Rat ratio = score / opt;
  out << "objective_over_opt: " << format_sig(ratio.get_d()) << "\n";
  out << "guarantee_floor (1/2K): " << format_sig(1.0 / (2.0 * levels)) << "\n";
  out << "max_regret: " << format_scalar(bic.max_regret) << "\n";
  out << "ir_ok: " << (ir.ok ? "yes" : "NO") << "\n";
  out << "ladder levels: " << tables.ladder[0].levels << ", chosen "
      << tables.ladder[0].chosen_level << "\n";
  for (std::size_t k = 0; k < tables.ladder[0].reserve.size(); ++k)
    out << "  level " << (k + 1) << ": reserve " << format_scalar(tables.ladder[0].reserve[k])
        << " revenue " << format_scalar(tables.ladder[0].level_revenue[k]) << " surplus "
        << format_scalar(tables.ladder[0].level_surplus[k]) << "\n";
  std::cout << out.str();
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    write_text_file(out_dir + "/lower_bound.txt", out.str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"black-box BIC mechanism toolkit"};
  app.require_subcommand(1);

  ExperimentConfig config;
  std::string config_path;
  std::string assignment_path, assignment_out;
  int levels = 3;
  std::string objective_name = "revenue";

  auto* solve = app.add_subcommand("solve-assignment", "solve one fractional assignment problem");
  solve->add_option("--instance", assignment_path, "assignment problem JSON")->required();
  solve->add_option("--out", assignment_out, "output directory");

  auto* sw = app.add_subcommand("reduce-sw", "welfare-preserving reduction");
  add_common_flags(sw, config, config_path);

  auto* rr = app.add_subcommand("reduce-rr", "revenue / residual-surplus meta-reduction");
  add_common_flags(rr, config, config_path);
  rr->add_option("--objective", config.reduction, "revenue | surplus");

  auto* ca = app.add_subcommand("ca-experiment", "combinatorial-auction pipeline");
  add_common_flags(ca, config, config_path);

  auto* verify = app.add_subcommand("verify", "exact incentive and performance verification");
  add_common_flags(verify, config, config_path);
  verify->add_option("--reduction", config.reduction, "sw | revenue | surplus | none");

  auto* demo = app.add_subcommand("lower-bound-demo", "the geometric-prior revenue cap example");
  demo->add_option("--levels", levels, "number of geometric levels K");
  demo->add_option("--objective", objective_name, "revenue | surplus");
  demo->add_option("--out", config.out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (solve->parsed()) return cmd_solve_assignment(assignment_path, assignment_out);
    if (sw->parsed()) {
      config.command = "reduce-sw";
      config.reduction = "sw";
      return run_and_print(config, config_path);
    }
    if (rr->parsed()) {
      config.command = "reduce-rr";
      if (config.reduction != "surplus") config.reduction = "revenue";
      return run_and_print(config, config_path);
    }
    if (ca->parsed()) {
      config.command = "ca-experiment";
      return cmd_ca_experiment(config);
    }
    if (verify->parsed()) {
      config.command = "verify";
      return cmd_verify(config);
    }
    if (demo->parsed()) return cmd_lower_bound_demo(levels, objective_name, config.out_dir);
  } catch (const Error& e) {
    json record{{"error", {{"code", e.code()}, {"message", e.what()}}}};
    std::cerr << record.dump() << "\n";
    return e.code() == "ParseError" || e.code() == "InvalidArgument" ? 2 : 1;
  } catch (const std::exception& e) {
    json record{{"error", {{"code", "Unhandled"}, {"message", e.what()}}}};
    std::cerr << record.dump() << "\n";
    return 1;
  }
  return 2;
}
