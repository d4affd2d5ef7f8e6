#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <fmt/format.h>

#include "scope/harness.hpp"

namespace scope::harness {

namespace {

const std::vector<std::string> kResultColumns{
    "policy",   "workload",       "percentile",     "cap",        "start_id",     "start_kind",
    "gamma",    "interval_sec",   "max_samples",    "model",      "offline_fraction", "rep",
    "seed",     "run_length_sec", "speedup",        "violation_rate", "violation_magnitude", "poc",
    "coverage", "avm",            "intervals"};

std::string num(double v) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{}", v);
}

std::string quote(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

double to_number(const std::string& s) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

const std::string& field(const std::map<std::string, std::string>& row, const std::string& key) {
  const auto it = row.find(key);
  if (it == row.end()) throw std::invalid_argument("missing column '" + key + "'");
  return it->second;
}

}  // namespace

std::string results_header() {
  std::string out;
  for (std::size_t i = 0; i < kResultColumns.size(); ++i) {
    if (i) out += ',';
    out += kResultColumns[i];
  }
  return out;
}

std::string format_row(const ResultRow& row) {
  const auto& r = row.report;
  return fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}", quote(row.policy),
                     quote(row.workload), num(row.percentile), num(row.cap), row.start_id, quote(row.start_kind),
                     num(row.gamma), row.interval_sec, row.max_samples, quote(row.model), num(row.offline_fraction),
                     row.rep, row.seed, r.run_length_sec, num(r.speedup), num(r.violation_rate),
                     num(r.violation_magnitude), num(r.poc), num(r.coverage), num(r.avm), row.intervals);
}

std::string trace_header() { return "t,config_id,true_power,measured_power,work_done,violated,interval_index"; }

Table parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string cur;
  bool in_quotes = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        cur += c;
      }
      continue;
    }
    if (c == '"') {
      in_quotes = true;
      any = true;
    } else if (c == ',') {
      record.push_back(std::move(cur));
      cur.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !cur.empty()) {
        record.push_back(std::move(cur));
        records.push_back(std::move(record));
      }
      record.clear();
      cur.clear();
      any = false;
    } else {
      cur += c;
      any = true;
    }
  }
  if (in_quotes) throw std::invalid_argument("csv: unterminated quoted field");
  if (any || !cur.empty()) {
    record.push_back(std::move(cur));
    records.push_back(std::move(record));
  }

  Table table;
  if (records.empty()) return table;
  const auto& header = records.front();
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != header.size())
      throw std::invalid_argument(fmt::format("csv: row {} has {} fields, header has {}", r + 1, records[r].size(),
                                              header.size()));
    std::map<std::string, std::string> row;
    for (std::size_t c = 0; c < header.size(); ++c) row[header[c]] = records[r][c];
    table.push_back(std::move(row));
  }
  return table;
}

Table read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

void write_table(std::ostream& out, const Table& table, const std::vector<std::string>& columns) {
  for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << quote(columns[i]);
  out << '\n';
  for (const auto& row : table) {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      const auto it = row.find(columns[i]);
      out << (i ? "," : "") << (it == row.end() ? "" : quote(it->second));
    }
    out << '\n';
  }
}

Table report_data(const Table& rows, const std::vector<std::string>& group_by) {
  static const char* kMetrics[] = {"speedup", "violation_rate", "poc", "coverage", "avm", "run_length_sec"};
  struct Acc {
    std::size_t n = 0;
    std::map<std::string, std::vector<double>> values;
  };
  std::map<std::vector<std::string>, Acc> groups;
  for (const auto& row : rows) {
    std::vector<std::string> key;
    for (const auto& g : group_by) key.push_back(field(row, g));
    auto& acc = groups[key];
    ++acc.n;
    for (const char* m : kMetrics) acc.values[m].push_back(to_number(field(row, m)));
    acc.values["violation_magnitude"].push_back(to_number(field(row, "violation_magnitude")));
  }

  Table out;
  for (const auto& [key, acc] : groups) {
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < group_by.size(); ++i) row[group_by[i]] = key[i];
    row["n"] = std::to_string(acc.n);
    for (const char* m : kMetrics) row[m] = num(metrics::mean_defined(acc.values.at(m)));
    const auto& mag = acc.values.at("violation_magnitude");
    row["violation_magnitude"] = num(metrics::mean_nonzero(mag));
    row["violation_magnitude_all"] = num(metrics::mean_defined(mag));
    out.push_back(std::move(row));
  }
  return out;
}

Table best_interval(const Table& rows) {
  // (policy, workload) -> interval -> violation rates
  std::map<std::pair<std::string, std::string>, std::map<int, std::vector<double>>> by;
  for (const auto& row : rows) {
    const int interval = static_cast<int>(to_number(field(row, "interval_sec")));
    by[{field(row, "policy"), field(row, "workload")}][interval].push_back(
        to_number(field(row, "violation_rate")));
  }
  Table out;
  for (const auto& [key, intervals] : by) {
    int best = 0;
    double best_rate = std::numeric_limits<double>::infinity();
    for (const auto& [interval, rates] : intervals) {
      const double m = metrics::mean_defined(rates);
      if (m < best_rate) {  // map order: ties keep the shorter interval
        best_rate = m;
        best = interval;
      }
    }
    out.push_back({{"policy", key.first},
                   {"workload", key.second},
                   {"interval_sec", std::to_string(best)},
                   {"violation_rate", num(best_rate)}});
  }
  return out;
}

}  // namespace scope::harness
