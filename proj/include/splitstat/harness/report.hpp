#pragma once

// Long-format experiment records, written as CSV or JSON.

#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "splitstat/harness/csv.hpp"

namespace splitstat::harness {

// NA is std::monostate.
using Value = std::variant<std::monostate, std::int64_t, double, std::string>;

struct Report {
  std::string experiment;
  std::vector<std::string> columns;
  std::vector<std::vector<Value>> rows;
  nlohmann::json meta = nlohmann::json::object();

  void add(std::vector<Value> row) {
    detail::require(row.size() == columns.size(), Errc::invalid_argument, "report row width mismatch");
    rows.push_back(std::move(row));
  }

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i] == name) return i;
    }
    detail::fail(Errc::schema, "report has no column '" + name + "'");
  }
};

inline Value na() { return std::monostate{}; }
inline Value count(std::size_t v) { return static_cast<std::int64_t>(v); }
inline Value real_or_na(double v) { return std::isfinite(v) ? Value(v) : na(); }

inline std::string to_text(const Value& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return "NA";
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(x);
        } else if constexpr (std::is_same_v<T, double>) {
          return format_double(x);
        } else {
          return x;
        }
      },
      v);
}

inline nlohmann::json to_json(const Value& v) {
  return std::visit(
      [](const auto& x) -> nlohmann::json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return nullptr;
        } else {
          return x;
        }
      },
      v);
}

inline void write_csv(std::ostream& os, const Report& r) {
  write_csv_record(os, r.columns);
  std::vector<std::string> fields;
  for (const auto& row : r.rows) {
    fields.clear();
    for (const auto& v : row) fields.push_back(to_text(v));
    write_csv_record(os, fields);
  }
}

inline nlohmann::json to_json(const Report& r) {
  nlohmann::json j;
  j["experiment"] = r.experiment;
  j["columns"] = r.columns;
  j["meta"] = r.meta;
  auto& records = j["records"] = nlohmann::json::array();
  for (const auto& row : r.rows) {
    nlohmann::json rec = nlohmann::json::object();
    for (std::size_t i = 0; i < row.size(); ++i) rec[r.columns[i]] = to_json(row[i]);
    records.push_back(std::move(rec));
  }
  return j;
}

// JSON with doubles at 17 significant digits.
inline std::string dump_json(const nlohmann::json& j) {
  std::string out;
  const std::function<void(const nlohmann::json&, int)> emit = [&](const nlohmann::json& v, int depth) {
    const std::string pad(static_cast<std::size_t>(depth + 1) * 2, ' ');
    const std::string close_pad(static_cast<std::size_t>(depth) * 2, ' ');
    if (v.is_object()) {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad + nlohmann::json(it.key()).dump() + ": ";
        emit(it.value(), depth + 1);
      }
      out += "\n" + close_pad + "}";
    } else if (v.is_array()) {
      if (v.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",\n";
        out += pad;
        emit(v[i], depth + 1);
      }
      out += "\n" + close_pad + "]";
    } else if (v.is_number_float()) {
      const double d = v.get<double>();
      out += std::isfinite(d) ? format_double(d) : "null";
    } else {
      out += v.dump();
    }
  };
  emit(j, 0);
  out += "\n";
  return out;
}

}  // namespace splitstat::harness
