#include "semibandit/io.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace semibandit {

using nlohmann::json;

nlohmann::json instance_to_json(const Instance& inst) {
  json contexts = json::array();
  for (int x = 0; x < inst.num_contexts(); ++x) {
    const RewardLaw& law = inst.law(x);
    json jlaw;
    if (law.type == RewardLawType::kFixed) {
      jlaw = {{"type", "fixed"}, {"r", law.values}};
    } else {
      jlaw = {{"type", "bernoulli"}, {"means", law.values}};
    }
    contexts.push_back({{"prob", inst.context_prob(x)}, {"law", jlaw}});
  }
  return {{"version", 1},
          {"K", inst.capacity()},
          {"m", inst.subset_size()},
          {"s", inst.sparsity()},
          {"contexts", contexts}};
}

Instance instance_from_json(const nlohmann::json& j) {
  if (!j.contains("version") || j.at("version").get<int>() != 1)
    throw std::invalid_argument("instance_from_json: unsupported schema version");
  std::vector<double> probs;
  std::vector<RewardLaw> laws;
  for (const json& ctx : j.at("contexts")) {
    probs.push_back(ctx.at("prob").get<double>());
    const json& jlaw = ctx.at("law");
    RewardLaw law;
    const std::string type = jlaw.at("type").get<std::string>();
    if (type == "fixed") {
      law.type = RewardLawType::kFixed;
      law.values = jlaw.at("r").get<std::vector<double>>();
    } else if (type == "bernoulli") {
      law.type = RewardLawType::kBernoulli;
      law.values = jlaw.at("means").get<std::vector<double>>();
    } else {
      throw std::invalid_argument("instance_from_json: unknown law type " + type);
    }
    laws.push_back(std::move(law));
  }
  return Instance(j.at("K").get<int>(), j.at("m").get<int>(),
                  j.at("s").get<double>(), std::move(probs), std::move(laws));
}

nlohmann::json policy_class_to_json(const PolicyClass& cls) {
  json policies = json::array();
  for (std::size_t j = 0; j < cls.size(); ++j) {
    json table = json::array();
    for (const ActionSubset& a : cls[j].table()) table.push_back(a.members());
    policies.push_back(table);
  }
  return {{"version", 1},
          {"K", cls.capacity()},
          {"m", cls.subset_size()},
          {"policies", policies}};
}

PolicyClass policy_class_from_json(const nlohmann::json& j) {
  if (!j.contains("version") || j.at("version").get<int>() != 1)
    throw std::invalid_argument("policy_class_from_json: unsupported schema version");
  const int capacity = j.at("K").get<int>();
  const int subset_size = j.at("m").get<int>();
  std::vector<Policy> policies;
  for (const json& jpolicy : j.at("policies")) {
    std::vector<ActionSubset> table;
    for (const json& jaction : jpolicy)
      table.emplace_back(jaction.get<std::vector<int>>(), capacity);
    policies.emplace_back(std::move(table));
  }
  return PolicyClass(std::move(policies), capacity, subset_size);
}

nlohmann::json pac_report_to_json(const PacReport& report) {
  return {{"version", 1},
          {"out_policy", report.out_policy},
          {"gap", report.gap},
          {"grad_inf_norm", report.grad_inf_norm},
          {"variance_audit", report.variance_audit},
          {"samples_used", report.samples_used},
          {"erm_calls", report.erm_calls},
          {"uninformative_phase1", report.uninformative_phase1},
          {"p_hat", report.p_hat.weights()}};
}

Instance load_instance(const std::string& path) {
  return instance_from_json(load_json(path));
}

PolicyClass load_policy_class(const std::string& path) {
  return policy_class_from_json(load_json(path));
}

void save_json(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_json: cannot open " + path);
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("save_json: write failed for " + path);
}

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_json: cannot open " + path);
  json j;
  in >> j;
  return j;
}

std::string format_double(double v) {
  // Shortest representation that parses back exactly.
  char buf[64];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  return buf;
}

CsvWriter::CsvWriter(std::string path, std::vector<std::string> columns)
    : path_(std::move(path)), columns_(std::move(columns)) {}

void CsvWriter::add_row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_.size())
    throw std::invalid_argument("CsvWriter: row width differs from header");
  rows_.push_back(cells);
}

void CsvWriter::add_row(const std::vector<double>& cells) {
  std::vector<std::string> formatted;
  formatted.reserve(cells.size());
  for (double v : cells) formatted.push_back(format_double(v));
  add_row(formatted);
}

void CsvWriter::write() const {
  std::ofstream out(path_);
  if (!out) throw std::runtime_error("CsvWriter: cannot open " + path_);
  for (std::size_t i = 0; i < columns_.size(); ++i)
    out << columns_[i] << (i + 1 < columns_.size() ? "," : "");
  out << "\n";
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i)
      out << row[i] << (i + 1 < row.size() ? "," : "");
    out << "\n";
  }
  if (!out) throw std::runtime_error("CsvWriter: write failed for " + path_);
}

}  // namespace semibandit
