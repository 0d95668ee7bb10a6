/*
 * Copyright 2026 The meshsim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "meshsim/bench.hpp"
#include "meshsim/errors.hpp"

namespace meshsim::bench {

namespace {

std::string format_double(double v) {
  std::string s = fmt::format("{}", v);
  // Keep a visible fraction so the value reads back as a real, not an integer.
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string cell_text(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return "";
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(v);
        } else if constexpr (std::is_same_v<T, double>) {
          return format_double(v);
        } else {
          return v;
        }
      },
      c);
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string csv_field(const std::string& s) {
  return s.find_first_of(",\"\r\n") == std::string::npos ? s : quote(s);
}

Cell parse_cell(const std::string& s, bool quoted) {
  if (s.empty() && !quoted) return std::monostate{};
  if (quoted) return s;
  std::size_t used = 0;
  const bool looks_integer = s.find_first_of(".eEn") == std::string::npos;
  try {
    if (looks_integer) {
      const long long v = std::stoll(s, &used);
      if (used == s.size()) return std::int64_t{v};
    } else {
      const double v = std::stod(s, &used);
      if (used == s.size()) return v;
    }
  } catch (const std::exception&) {
  }
  return s;
}

/// Splits RFC-4180 text into records of (field, was_quoted).
std::vector<std::vector<std::pair<std::string, bool>>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::pair<std::string, bool>>> records;
  std::vector<std::pair<std::string, bool>> rec;
  std::string field;
  bool quoted = false, in_quotes = false, any = false;
  auto end_field = [&] {
    rec.emplace_back(std::move(field), quoted);
    field.clear();
    quoted = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(rec));
    rec.clear();
    any = false;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (in_quotes) {
      if (ch == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (ch == '"') {
        in_quotes = false;
      } else {
        field += ch;
      }
      continue;
    }
    if (ch == '"') {
      in_quotes = quoted = any = true;
    } else if (ch == ',') {
      end_field();
      any = true;
    } else if (ch == '\r' || ch == '\n') {
      if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty() || !rec.empty()) end_record();
    } else {
      field += ch;
      any = true;
    }
  }
  if (in_quotes) throw UsageError("unterminated quoted CSV field");
  if (any || !field.empty() || !rec.empty()) end_record();
  return records;
}

nlohmann::json cell_json(const Cell& c) {
  return std::visit(
      [](const auto& v) -> nlohmann::json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return nullptr;
        } else {
          return v;
        }
      },
      c);
}

Cell json_cell(const nlohmann::json& j) {
  if (j.is_null()) return std::monostate{};
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number()) return j.get<double>();
  if (j.is_boolean()) return std::int64_t{j.get<bool>()};
  if (j.is_string()) return j.get<std::string>();
  throw UsageError("unsupported JSON cell: " + j.dump());
}

}  // namespace

int ExperimentResult::column(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return static_cast<int>(i);
  }
  return -1;
}

std::optional<double> ExperimentResult::num(std::size_t row, std::string_view col) const {
  const int c = column(col);
  if (c < 0 || row >= rows.size() || static_cast<std::size_t>(c) >= rows[row].size()) {
    return std::nullopt;
  }
  const Cell& v = rows[row][static_cast<std::size_t>(c)];
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&v)) return *d;
  return std::nullopt;
}

std::string ExperimentResult::str(std::size_t row, std::string_view col) const {
  const int c = column(col);
  if (c < 0 || row >= rows.size() || static_cast<std::size_t>(c) >= rows[row].size()) return "";
  return cell_text(rows[row][static_cast<std::size_t>(c)]);
}

std::vector<std::size_t> ExperimentResult::where(std::string_view col, std::string_view value) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (str(i, col) == value) out.push_back(i);
  }
  return out;
}

std::string to_csv(const ExperimentResult& r) {
  std::string out;
  auto line = [&](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out += ',';
      out += fields[i];
    }
    out += "\r\n";
  };
  std::vector<std::string> f;
  for (const auto& c : r.columns) f.push_back(csv_field(c));
  line(f);
  for (const auto& row : r.rows) {
    f.clear();
    for (const Cell& c : row) {
      const std::string t = cell_text(c);
      // A string that would read back as a number or an empty cell stays quoted.
      const bool force = std::holds_alternative<std::string>(c) &&
                         !std::holds_alternative<std::string>(parse_cell(t, false));
      f.push_back(force ? quote(t) : csv_field(t));
    }
    line(f);
  }
  return out;
}

ExperimentResult from_csv(std::string_view text) {
  const auto records = parse_csv(text);
  if (records.empty()) throw UsageError("empty CSV");
  ExperimentResult r;
  for (const auto& [name, q] : records.front()) r.columns.push_back(name);
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].size() != r.columns.size()) {
      throw UsageError("CSV row " + std::to_string(i + 1) + " has " +
                       std::to_string(records[i].size()) + " fields, header has " +
                       std::to_string(r.columns.size()));
    }
    std::vector<Cell> row;
    for (const auto& [f, q] : records[i]) row.push_back(parse_cell(f, q));
    r.rows.push_back(std::move(row));
  }
  if (!r.rows.empty()) r.experiment = r.str(0, "experiment");
  if (r.experiment.empty()) throw UsageError("CSV has no experiment column");
  r.spec = {{"kind", r.experiment}};
  return r;
}

nlohmann::json to_json(const ExperimentResult& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    nlohmann::json o = nlohmann::json::object();
    for (std::size_t i = 0; i < r.columns.size() && i < row.size(); ++i) {
      o[r.columns[i]] = cell_json(row[i]);
    }
    rows.push_back(std::move(o));
  }
  return {{"experiment", r.experiment}, {"spec", r.spec}, {"columns", r.columns}, {"rows", rows}};
}

ExperimentResult from_json(const nlohmann::json& j) {
  try {
    ExperimentResult r;
    r.experiment = j.at("experiment").get<std::string>();
    r.spec = j.value("spec", nlohmann::json::object());
    r.columns = j.at("columns").get<std::vector<std::string>>();
    for (const auto& o : j.at("rows")) {
      std::vector<Cell> row;
      for (const auto& c : r.columns) row.push_back(o.contains(c) ? json_cell(o[c]) : Cell{});
      r.rows.push_back(std::move(row));
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("malformed result JSON: ") + e.what());
  }
}

std::vector<ExperimentResult> load_results(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) throw UsageError(path + " is empty");
  if (text[first] != '{' && text[first] != '[') return {from_csv(text)};
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(path + ": " + e.what());
  }
  std::vector<ExperimentResult> out;
  if (j.is_array()) {
    for (const auto& e : j) out.push_back(from_json(e));
  } else {
    out.push_back(from_json(j));
  }
  return out;
}

}  // namespace meshsim::bench
