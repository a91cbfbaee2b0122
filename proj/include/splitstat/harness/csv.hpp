#pragma once

// RFC 4180 style CSV: quoted fields, doubled quotes, CRLF or LF line ends,
// header row required.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "splitstat/core.hpp"
#include "splitstat/dcov.hpp"
#include "splitstat/error.hpp"

namespace splitstat::harness {

struct CsvDocument {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline CsvDocument parse_csv(std::istream& in) {
  CsvDocument doc;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  bool any = false;
  std::size_t line = 1;

  const auto end_record = [&]() {
    record.push_back(std::move(field));
    field.clear();
    const bool blank = record.size() == 1 && record[0].empty();
    if (!blank) {
      if (doc.header.empty() && doc.rows.empty() && !any) {
        doc.header = std::move(record);
        any = true;
      } else {
        doc.rows.push_back(std::move(record));
      }
    }
    record.clear();
    field_started = false;
  };

  char c = 0;
  while (in.get(c)) {
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started && !field.empty()) {
          detail::fail(Errc::parse, "stray quote inside unquoted field on line " + std::to_string(line));
        }
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
        break;
      case '\r':
        if (in.peek() == '\n') in.get(c);
        end_record();
        ++line;
        break;
      case '\n':
        end_record();
        ++line;
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  detail::require(!in_quotes, Errc::parse, "unterminated quoted field at end of input");
  if (!field.empty() || !record.empty()) end_record();
  detail::require(!doc.header.empty(), Errc::empty_data, "CSV input has no header row");
  return doc;
}

inline CsvDocument read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  detail::require(in.good(), Errc::empty_data, "cannot open '" + path + "'");
  return parse_csv(in);
}

inline bool is_missing_token(const std::string& s) {
  return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "null" || s == "NULL";
}

// Finite double, surrounding blanks allowed; nullopt otherwise.
inline std::optional<double> parse_number(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
  if (b == e) return std::nullopt;
  if (s[b] == '+') ++b;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data() + b, s.data() + e, v);
  if (ec != std::errc() || ptr != s.data() + e || !std::isfinite(v)) return std::nullopt;
  return v;
}

struct IngestReport {
  std::size_t rows_read = 0;
  std::size_t rows_kept = 0;
  std::size_t dropped = 0;
};

struct TableIngest {
  DataTable table;
  IngestReport report;
};

struct PairIngest {
  PairSample pair;
  IngestReport report;
};

namespace internal {

inline std::vector<std::size_t> column_indices(const CsvDocument& doc, const std::vector<std::string>& names) {
  std::unordered_map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < doc.header.size(); ++i) pos.emplace(doc.header[i], i);
  std::vector<std::size_t> idx;
  for (const auto& n : names) {
    const auto it = pos.find(n);
    if (it == pos.end()) detail::fail(Errc::schema, "column '" + n + "' not found in header");
    idx.push_back(it->second);
  }
  return idx;
}

// Selected numeric fields of every row, dropping or rejecting bad rows.
inline std::vector<std::vector<double>> select_numeric(const CsvDocument& doc, const std::vector<std::size_t>& idx,
                                                       const std::vector<std::string>& names, bool drop_missing,
                                                       IngestReport& report) {
  std::vector<std::vector<double>> out;
  out.reserve(doc.rows.size());
  report.rows_read = doc.rows.size();
  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    const auto& rec = doc.rows[r];
    std::vector<double> vals;
    vals.reserve(idx.size());
    bool bad = false;
    for (std::size_t c = 0; c < idx.size(); ++c) {
      const std::string empty;
      const std::string& cell = idx[c] < rec.size() ? rec[idx[c]] : empty;
      const auto v = is_missing_token(cell) ? std::nullopt : parse_number(cell);
      if (!v) {
        if (!drop_missing) {
          // Data rows are numbered from 1; the header is line 1 of the file.
          detail::fail(Errc::parse, "row " + std::to_string(r + 1) + ", column '" + names[c] + "': " +
                                        (is_missing_token(cell) ? "missing value" : "cannot parse '" + cell + "'"));
        }
        bad = true;
        break;
      }
      vals.push_back(*v);
    }
    if (bad) {
      ++report.dropped;
      continue;
    }
    out.push_back(std::move(vals));
  }
  report.rows_kept = out.size();
  detail::require(!out.empty(), Errc::empty_data, "no rows left after removing missing values");
  return out;
}

inline DataTable to_table(const std::vector<std::vector<double>>& rows, std::size_t from, std::size_t count,
                          std::vector<std::string> names) {
  std::vector<double> v;
  v.reserve(rows.size() * count);
  for (const auto& r : rows) v.insert(v.end(), r.begin() + static_cast<std::ptrdiff_t>(from),
                                       r.begin() + static_cast<std::ptrdiff_t>(from + count));
  return DataTable(std::move(v), count, std::move(names));
}

}  // namespace internal

inline TableIngest ingest_table(const CsvDocument& doc, const std::vector<std::string>& columns, bool drop_missing) {
  detail::require(!columns.empty(), Errc::invalid_argument, "no columns selected");
  const auto idx = internal::column_indices(doc, columns);
  IngestReport report;
  const auto rows = internal::select_numeric(doc, idx, columns, drop_missing, report);
  return {internal::to_table(rows, 0, columns.size(), columns), report};
}

inline TableIngest ingest_table(const std::string& path, const std::vector<std::string>& columns, bool drop_missing) {
  return ingest_table(read_csv_file(path), columns, drop_missing);
}

// A row is dropped when any selected Y or Z field is missing.
inline PairIngest ingest_pair(const CsvDocument& doc, const std::vector<std::string>& y_columns,
                              const std::vector<std::string>& z_columns, bool drop_missing) {
  detail::require(!y_columns.empty() && !z_columns.empty(), Errc::invalid_argument, "Y and Z need columns");
  std::vector<std::string> all = y_columns;
  all.insert(all.end(), z_columns.begin(), z_columns.end());
  const auto idx = internal::column_indices(doc, all);
  IngestReport report;
  const auto rows = internal::select_numeric(doc, idx, all, drop_missing, report);
  return {PairSample(internal::to_table(rows, 0, y_columns.size(), y_columns),
                     internal::to_table(rows, y_columns.size(), z_columns.size(), z_columns)),
          report};
}

inline PairIngest ingest_pair(const std::string& path, const std::vector<std::string>& y_columns,
                              const std::vector<std::string>& z_columns, bool drop_missing) {
  return ingest_pair(read_csv_file(path), y_columns, z_columns, drop_missing);
}

// ---------------------------------------------------------------------------
// Output

inline std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline void write_csv_record(std::ostream& os, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) os << ',';
    os << csv_escape(fields[i]);
  }
  os << '\n';
}

}  // namespace splitstat::harness
