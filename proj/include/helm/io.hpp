#pragma once

#include "helm/common.hpp"

#include <Eigen/Core>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

namespace helm {

using json = nlohmann::json;

// Throws ConfigError naming the first key of `j` not in `allowed`.
void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where);

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

template <typename T>
T get_required(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing required key '" + key + "'");
  return get_or<T>(j, key, T{});
}

json read_json_file(const std::filesystem::path& p);
void write_json_file(const std::filesystem::path& p, const json& j);

// Dense numeric CSV without header; blank lines and lines starting with '#'
// are skipped.
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& p);
void write_matrix_csv(const std::filesystem::path& p, const Eigen::MatrixXd& m);

// Writes "# format_version=..." followed by a header line and rows.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& p, const std::vector<std::string>& header);
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void row(const std::vector<double>& values);
  void row_mixed(const std::vector<std::string>& cells);

 private:
  std::ofstream out_;
};

std::string format_double(double v);

}  // namespace helm
