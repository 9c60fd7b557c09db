#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "semibandit/core.hpp"
#include "semibandit/environments.hpp"
#include "semibandit/pac.hpp"

namespace semibandit {

// Instance schema (version 1):
// { "version": 1, "K": int, "m": int, "s": number,
//   "contexts": [ { "prob": number,
//                   "law": {"type": "fixed", "r": [number]}
//                        | {"type": "bernoulli", "means": [number]} } ] }
nlohmann::json instance_to_json(const Instance& inst);
Instance instance_from_json(const nlohmann::json& j);

// PolicyClass schema (version 1):
// { "version": 1, "K": int, "m": int,
//   "policies": [ [ [action indices] per context ] ] }
nlohmann::json policy_class_to_json(const PolicyClass& cls);
PolicyClass policy_class_from_json(const nlohmann::json& j);

nlohmann::json pac_report_to_json(const PacReport& report);

Instance load_instance(const std::string& path);
PolicyClass load_policy_class(const std::string& path);
void save_json(const nlohmann::json& j, const std::string& path);
nlohmann::json load_json(const std::string& path);

// Shortest decimal form that round-trips; byte-stable across runs.
std::string format_double(double v);

// Header row plus rows of formatted cells; every write emits the header.
class CsvWriter {
 public:
  CsvWriter(std::string path, std::vector<std::string> columns);
  void add_row(const std::vector<std::string>& cells);
  void add_row(const std::vector<double>& cells);
  void write() const;

  const std::vector<std::vector<std::string>>& rows() const { return rows_; }

 private:
  std::string path_;
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace semibandit
