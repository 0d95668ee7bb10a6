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

/**
 * @file bench.hpp
 * @brief Benchmark harness: experiments, reference values, checks and output.
 *
 * An experiment produces a flat table of datapoints. Checks are computed from
 * those datapoints alone, so a report can be rebuilt from saved CSV or JSON
 * without rerunning anything.
 */

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "meshsim/config.hpp"

namespace meshsim::bench {

enum class Kind { Bandwidth, Latency, ELink, Stencil, Matmul, WeakScaling, StrongScaling };

std::string_view kind_name(Kind k);
/// Accepts the names returned by kind_name; throws UsageError otherwise.
Kind parse_kind(std::string_view name);
/// Every kind in suite order.
const std::vector<Kind>& all_kinds();

struct ExperimentSpec {
  Kind kind = Kind::Latency;
  std::optional<int> wg_rows, wg_cols;  // --cores RxC
  std::optional<int> size;              // square problem
  std::optional<int> rows, cols;        // rectangular problem
  std::optional<int> iterations;
  std::optional<int> writers;
  bool large = false;                   // adds the 1024 and 1536 paged products
  std::ostream* event_log = nullptr;    // JSON lines from the simulator, if set

  /// Throws UsageError for anything the experiment cannot run.
  void validate(const MeshConfig& cfg) const;
  [[nodiscard]] bool custom() const { return wg_rows || size || rows || cols || writers; }
  [[nodiscard]] nlohmann::json to_json() const;
};

/// One table cell; monostate is an empty cell.
using Cell = std::variant<std::monostate, std::int64_t, double, std::string>;

struct ExperimentResult {
  std::string experiment;
  nlohmann::json spec = nlohmann::json::object();
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  /// Index of `name`, or -1.
  [[nodiscard]] int column(std::string_view name) const;
  /// Numeric value, nullopt when the column is absent or the cell empty.
  [[nodiscard]] std::optional<double> num(std::size_t row, std::string_view col) const;
  [[nodiscard]] std::string str(std::size_t row, std::string_view col) const;
  /// Rows whose string column `col` equals `value`.
  [[nodiscard]] std::vector<std::size_t> where(std::string_view col, std::string_view value) const;

  bool operator==(const ExperimentResult&) const = default;
};

ExperimentResult run_experiment(const ExperimentSpec& spec, const MeshConfig& cfg);
/// Every default experiment; independent runs execute concurrently and are
/// returned in suite order.
std::vector<ExperimentResult> run_suite(const MeshConfig& cfg, bool large = false);

// ---- serialization ----------------------------------------------------

/// RFC-4180: header line, CRLF row ends, quoted fields where needed.
std::string to_csv(const ExperimentResult& r);
ExperimentResult from_csv(std::string_view text);
nlohmann::json to_json(const ExperimentResult& r);
ExperimentResult from_json(const nlohmann::json& j);
/// Reads a CSV file, a JSON object or a JSON array of objects.
std::vector<ExperimentResult> load_results(const std::string& path);

// ---- reference values and checks ---------------------------------------

struct Tolerance {
  enum class Kind { Relative, Absolute, Range, AtLeast, AtMost };
  Kind kind = Kind::Relative;
  double a = 0.0;  // relative or absolute width, or the lower bound
  double b = 0.0;  // upper bound for Range

  [[nodiscard]] bool accepts(double measured, double reference) const;
  [[nodiscard]] std::string describe() const;
};

struct ReferenceEntry {
  std::string id;
  std::string experiment;   // kind_name of the experiment that supplies it
  std::string description;
  std::string provenance;   // which published measurement the value comes from
  double value = 0.0;
  std::string unit;
  Tolerance tolerance;
  bool mandatory = true;
};

const std::vector<ReferenceEntry>& reference_table();
/// Throws UsageError for an unknown id.
const ReferenceEntry& reference(std::string_view id);

enum class Verdict { Pass, Fail, Skipped };
std::string_view verdict_name(Verdict v);

struct CheckOutcome {
  const ReferenceEntry* ref = nullptr;
  std::optional<double> measured;
  Verdict verdict = Verdict::Skipped;
};

/// One outcome per reference entry, in table order. Entries whose data is not
/// present in `results` are skipped.
std::vector<CheckOutcome> evaluate(const std::vector<ExperimentResult>& results);

struct Report {
  std::vector<CheckOutcome> checks;
  [[nodiscard]] bool mandatory_ok() const;
  [[nodiscard]] int count(Verdict v) const;
  [[nodiscard]] std::string to_text() const;
  [[nodiscard]] std::string to_csv() const;
};
Report make_report(const std::vector<ExperimentResult>& results);

// ---- charts and calibration ---------------------------------------------

/// Static SVG line chart for the experiments that have a natural x axis.
/// Returns nullopt for the others.
std::optional<std::string> to_svg(const ExperimentResult& r);

struct CalibrationFit {
  MeshConfig config;     // defaults with the fitted constants replaced
  nlohmann::json detail;  // per-fit coefficients and residuals
};
/// Least-squares fits of the published latency table, single-core matmul
/// table and 64-core Cannon column, plus the two quoted rates. Constants that
/// the data does not determine are taken from `base`.
CalibrationFit calibrate(const MeshConfig& base = MeshConfig::defaults());

}  // namespace meshsim::bench
