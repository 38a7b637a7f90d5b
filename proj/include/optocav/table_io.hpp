#pragma once

// Tabular output: CSV and JSON emitters with matching parsers.
//
// CSV layout, in order:
//   header row           t,P_e,norm
//   metadata lines       # key: value      (keys sorted)
//   data rows            17 significant digits per value
// The JSON document holds the same tables under "tables".

#include <cstdio>
#include <cstdlib>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "optocav/errors.hpp"

namespace optocav {

inline constexpr const char* kSoftwareVersion = "0.1.0";

struct Table {
  std::string name;
  std::map<std::string, std::string> metadata;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add_row(std::vector<double> row) {
    if (row.size() != columns.size()) {
      throw InvalidArgument("Table " + name + ": row has " + std::to_string(row.size()) +
                            " values for " + std::to_string(columns.size()) + " columns");
    }
    rows.push_back(std::move(row));
  }

  std::vector<double> column(const std::string& col) const {
    for (std::size_t j = 0; j < columns.size(); ++j) {
      if (columns[j] == col) {
        std::vector<double> v;
        v.reserve(rows.size());
        for (const auto& r : rows) v.push_back(r[j]);
        return v;
      }
    }
    throw InvalidArgument("Table " + name + ": no column " + col);
  }
};

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string write_csv(const Table& t) {
  std::string out;
  for (std::size_t j = 0; j < t.columns.size(); ++j) {
    if (j) out += ',';
    out += t.columns[j];
  }
  out += '\n';
  for (const auto& [k, v] : t.metadata) out += "# " + k + ": " + v + "\n";
  for (const auto& row : t.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out += ',';
      out += format_double(row[j]);
    }
    out += '\n';
  }
  return out;
}

inline Table parse_csv(const std::string& text, std::string name = {}) {
  Table t;
  t.name = std::move(name);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.empty() || line[0] == '#') {
    throw InvalidArgument("csv: missing header row");
  }
  {
    std::stringstream hs(line);
    std::string col;
    while (std::getline(hs, col, ',')) t.columns.push_back(col);
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto colon = line.find(": ");
      if (line.size() < 2 || line[1] != ' ' || colon == std::string::npos) {
        throw InvalidArgument("csv: malformed metadata on line " + std::to_string(lineno));
      }
      t.metadata[line.substr(2, colon - 2)] = line.substr(colon + 2);
      continue;
    }
    std::vector<double> row;
    std::stringstream rs(line);
    std::string cell;
    while (std::getline(rs, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0') {
        throw InvalidArgument("csv: bad number '" + cell + "' on line " + std::to_string(lineno));
      }
      row.push_back(v);
    }
    if (row.size() != t.columns.size()) {
      throw InvalidArgument("csv: line " + std::to_string(lineno) + " has " + std::to_string(row.size()) +
                            " values, header has " + std::to_string(t.columns.size()));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline nlohmann::json table_to_json(const Table& t) {
  nlohmann::json j;
  j["name"] = t.name;
  j["metadata"] = t.metadata;
  j["columns"] = t.columns;
  j["rows"] = t.rows;
  return j;
}

inline std::string write_json(const std::vector<Table>& tables, const std::string& scenario) {
  nlohmann::json doc;
  doc["scenario"] = scenario;
  doc["software_version"] = kSoftwareVersion;
  doc["tables"] = nlohmann::json::array();
  for (const auto& t : tables) doc["tables"].push_back(table_to_json(t));
  return doc.dump(2) + "\n";
}

struct JsonDocument {
  std::string scenario;
  std::vector<Table> tables;
};

inline JsonDocument parse_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("json: ") + e.what());
  }
  JsonDocument out;
  try {
    out.scenario = doc.at("scenario").get<std::string>();
    for (const auto& jt : doc.at("tables")) {
      Table t;
      t.name = jt.at("name").get<std::string>();
      t.metadata = jt.at("metadata").get<std::map<std::string, std::string>>();
      t.columns = jt.at("columns").get<std::vector<std::string>>();
      for (const auto& r : jt.at("rows")) t.add_row(r.get<std::vector<double>>());
      out.tables.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("json: ") + e.what());
  }
  return out;
}

}  // namespace optocav
