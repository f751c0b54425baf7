#pragma once

#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bicforge/assignment.hpp"
#include "bicforge/interim.hpp"
#include "bicforge/model.hpp"

namespace bicforge {

using nlohmann::json;

// Numbers in instance files are JSON numbers (converted exactly from their
// double reading) or strings like "3/4", "0.1".
inline Rat rat_from_json(const json& j) {
  if (j.is_string()) return rat_parse(j.get<std::string>());
  if (j.is_number_integer()) return Rat(static_cast<long>(j.get<std::int64_t>()));
  if (j.is_number()) return rat_from_double(j.get<double>());
  throw ParseError("expected a number or rational string");
}

inline std::vector<Rat> rat_vector_from_json(const json& j) {
  std::vector<Rat> out;
  for (const auto& v : j) out.push_back(rat_from_json(v));
  return out;
}

inline Valuation valuation_from_json(const json& j) {
  if (j.is_array()) return Valuation::explicit_list(rat_vector_from_json(j));
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "explicit") return Valuation::explicit_list(rat_vector_from_json(j.at("values")));
  if (kind == "additive") return Valuation::additive(rat_vector_from_json(j.at("weights")));
  if (kind == "unit-demand") return Valuation::unit_demand(rat_vector_from_json(j.at("weights")));
  if (kind == "budget-additive")
    return Valuation::budget_additive(rat_vector_from_json(j.at("weights")),
                                      rat_from_json(j.at("budget")));
  if (kind == "xos") {
    std::vector<std::vector<Rat>> clauses;
    for (const auto& clause : j.at("clauses")) clauses.push_back(rat_vector_from_json(clause));
    return Valuation::xos(std::move(clauses));
  }
  throw ParseError("unknown valuation kind: " + kind);
}

inline Feasibility feasibility_from_json(const json& j, int agents) {
  if (j.is_null()) return Feasibility::unrestricted();
  std::string kind = j.is_string() ? j.get<std::string>() : j.at("kind").get<std::string>();
  if (kind == "matroid-free") return Feasibility::unrestricted();
  if (kind == "partition") return Feasibility::partition();
  if (kind == "explicit") {
    std::vector<Allocation> allowed;
    for (const auto& row : j.at("allocations")) {
      Allocation alloc;
      for (const auto& v : row) alloc.push_back(v.get<int>());
      if (static_cast<int>(alloc.size()) != agents)
        throw ParseError("explicit allocation arity mismatch");
      allowed.push_back(std::move(alloc));
    }
    return Feasibility::explicit_list(std::move(allowed));
  }
  throw ParseError("unknown feasibility kind: " + kind);
}

inline MechanismInstance instance_from_json(const json& j) {
  int agents = j.at("agents").get<int>();
  std::vector<std::vector<Valuation>> supports;
  for (const auto& agent_support : j.at("supports")) {
    std::vector<Valuation> list;
    for (const auto& v : agent_support) list.push_back(valuation_from_json(v));
    supports.push_back(std::move(list));
  }
  std::vector<std::vector<Rat>> priors;
  for (const auto& p : j.at("priors")) priors.push_back(rat_vector_from_json(p));

  if (j.contains("items")) {
    int items = j.at("items").get<int>();
    return build_ca_instance(agents, items, std::move(supports), std::move(priors));
  }
  std::vector<int> counts;
  for (const auto& c : j.at("services")) counts.push_back(c.get<int>());
  bool has_null = j.value("null_service", false);
  Feasibility feas = feasibility_from_json(j.contains("feasibility") ? j.at("feasibility") : json(),
                                           agents);
  return build_instance(std::move(counts), std::move(feas), std::move(supports),
                        std::move(priors), has_null);
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ParseError(std::string("bad JSON in ") + path + ": " + e.what());
  }
  return j;
}

inline MechanismInstance load_instance(const std::string& path) {
  return instance_from_json(load_json_file(path));
}

// Assignment problems live under an "assignment" key (or standalone).
inline AssignmentProblem<Rat> assignment_from_json(const json& root) {
  const json& j = root.contains("assignment") ? root.at("assignment") : root;
  AssignmentProblem<Rat> problem;
  problem.demands = rat_vector_from_json(j.at("demands"));
  problem.supplies = rat_vector_from_json(j.at("supplies"));
  const auto& values = j.at("values");
  problem.values = Matrix<Rat>(problem.demands.size(), problem.supplies.size());
  for (std::size_t s = 0; s < problem.demands.size(); ++s)
    for (std::size_t t = 0; t < problem.supplies.size(); ++t)
      problem.values(s, t) = rat_from_json(values.at(s).at(t));
  problem.validate();
  return problem;
}

// 12 significant digits, the repo-wide output precision.
inline std::string format_sig(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

template <typename T>
std::string format_scalar(const T& x) {
  if constexpr (ScalarTraits<T>::exact) return format_sig(x.get_d());
  else return format_sig(x);
}

// Canonical serialization used for cache keys.
inline std::string canonical_instance_text(const MechanismInstance& inst) {
  std::ostringstream out;
  out << "n=" << inst.agent_count() << ";ell=" << inst.support_size()
      << ";items=" << inst.item_count() << ";null=" << inst.has_null_service()
      << ";feas=" << inst.feasibility().name() << ";";
  if (inst.feasibility().kind() == FeasibilityKind::explicit_list) {
    for (const auto& alloc : inst.feasibility().allowed()) {
      for (int s : alloc) out << s << ",";
      out << "|";
    }
  }
  for (int i = 0; i < inst.agent_count(); ++i) {
    out << "agent" << i << ":services=" << inst.service_count(i) << ":";
    for (int t = 0; t < inst.support_size(); ++t) {
      out << "f=" << rat_to_string(inst.prior(i, t)) << ":v=";
      const Valuation& v = inst.valuation(i, t);
      if (v.is_set_based()) {
        out << valuation_kind_name(v.kind()) << "[";
        for (const Rat& w : v.weights()) out << rat_to_string(w) << ",";
        for (const auto& clause : v.clauses()) {
          for (const Rat& w : clause) out << rat_to_string(w) << ",";
          out << "/";
        }
        out << "b" << rat_to_string(v.budget()) << "]";
      } else {
        for (int s = 0; s < inst.service_count(i); ++s) out << rat_to_string(v.value(s)) << ",";
      }
      out << ";";
    }
  }
  return out.str();
}

inline std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string instance_hash(const MechanismInstance& inst) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical_instance_text(inst))));
  return buf;
}

// Interim tables serialize with exact rationals in exact mode and %.17g
// doubles otherwise, keyed upstream by (instance hash, algorithm id, mode,
// eps, seed).
template <typename T>
json interim_to_json(const InterimTable<T>& table) {
  json j;
  j["mode"] = interim_mode_name(table.mode);
  j["epsilon"] = table.epsilon;
  json values = json::array();
  for (const auto& m : table.values) {
    json rows = json::array();
    for (std::size_t s = 0; s < m.rows(); ++s) {
      json row = json::array();
      for (std::size_t t = 0; t < m.cols(); ++t) {
        if constexpr (ScalarTraits<T>::exact) row.push_back(rat_to_string(m(s, t)));
        else {
          char buf[40];
          std::snprintf(buf, sizeof buf, "%.17g", m(s, t));
          row.push_back(std::string(buf));
        }
      }
      rows.push_back(row);
    }
    values.push_back(rows);
  }
  j["values"] = values;
  if (!table.samples.empty()) {
    json counts = json::array();
    for (const auto& m : table.samples) {
      json rows = json::array();
      for (std::size_t s = 0; s < m.rows(); ++s) {
        json row = json::array();
        for (std::size_t t = 0; t < m.cols(); ++t) row.push_back(m(s, t));
        rows.push_back(row);
      }
      counts.push_back(rows);
    }
    j["samples"] = counts;
  }
  return j;
}

template <typename T>
InterimTable<T> interim_from_json(const json& j) {
  InterimTable<T> table;
  std::string mode = j.at("mode").get<std::string>();
  table.mode = mode == "exact" ? InterimMode::exact
               : mode == "relative" ? InterimMode::relative
                                    : InterimMode::absolute;
  table.epsilon = j.at("epsilon").get<double>();
  for (const auto& rows : j.at("values")) {
    std::size_t ell = rows.size();
    Matrix<T> m(ell, ell);
    for (std::size_t s = 0; s < ell; ++s)
      for (std::size_t t = 0; t < ell; ++t) {
        if constexpr (ScalarTraits<T>::exact) m(s, t) = rat_parse(rows.at(s).at(t).get<std::string>());
        else m(s, t) = std::strtod(rows.at(s).at(t).get<std::string>().c_str(), nullptr);
      }
    table.values.push_back(std::move(m));
  }
  if (j.contains("samples")) {
    for (const auto& rows : j.at("samples")) {
      std::size_t ell = rows.size();
      Matrix<std::int64_t> m(ell, ell);
      for (std::size_t s = 0; s < ell; ++s)
        for (std::size_t t = 0; t < ell; ++t) m(s, t) = rows.at(s).at(t).get<std::int64_t>();
      table.samples.push_back(std::move(m));
    }
  }
  return table;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write file: " + path);
  out << content;
}

}  // namespace bicforge
