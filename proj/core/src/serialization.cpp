#include "coherence/serialization.hpp"

#include <cstdio>
#include <sstream>
#include <vector>

#include <json.hpp>

namespace coherence {

std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string table_to_csv(const Matrix& table) {
  std::ostringstream out;
  for (Eigen::Index j = 0; j < table.cols(); ++j) {
    if (j > 0) out << ',';
    out << 'y' << j;
  }
  out << "\r\n";
  for (Eigen::Index x = 0; x < table.rows(); ++x) {
    for (Eigen::Index j = 0; j < table.cols(); ++j) {
      if (j > 0) out << ',';
      out << format_g17(table(x, j));
    }
    out << "\r\n";
  }
  return out.str();
}

Matrix table_from_csv(const std::string& csv) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(csv);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<double> row;
    std::istringstream fields(line);
    std::string field;
    while (std::getline(fields, field, ',')) row.push_back(std::stod(field));
    if (!rows.empty() && row.size() != rows.front().size())
      throw DomainError("table_from_csv: ragged rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DomainError("table_from_csv: no data rows");
  Matrix table(static_cast<Eigen::Index>(rows.size()),
               static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t x = 0; x < rows.size(); ++x)
    for (std::size_t j = 0; j < rows[x].size(); ++j)
      table(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(j)) =
          rows[x][j];
  return table;
}

std::string table_to_json(const Matrix& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index x = 0; x < table.rows(); ++x) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < table.cols(); ++j) row.push_back(table(x, j));
    rows.push_back(std::move(row));
  }
  nlohmann::json obj;
  obj["table"] = std::move(rows);
  return obj.dump();
}

Matrix table_from_json(const std::string& json_text) {
  const nlohmann::json obj = nlohmann::json::parse(json_text);
  if (!obj.contains("table") || !obj["table"].is_array())
    throw DomainError("table_from_json: missing table array");
  const auto& rows = obj["table"];
  if (rows.empty()) throw DomainError("table_from_json: empty table");
  Matrix table(static_cast<Eigen::Index>(rows.size()),
               static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t x = 0; x < rows.size(); ++x) {
    if (rows[x].size() != rows[0].size())
      throw DomainError("table_from_json: ragged rows");
    for (std::size_t j = 0; j < rows[x].size(); ++j)
      table(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(j)) =
          rows[x][j].get<double>();
  }
  return table;
}

}  // namespace coherence
