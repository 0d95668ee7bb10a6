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

// meshsim command-line front end: bench, report and calibrate.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <regex>

#include <CLI11.hpp>

#include "meshsim/bench.hpp"
#include "meshsim/errors.hpp"

namespace fs = std::filesystem;
using namespace meshsim;

namespace {

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path);
  out << text;
}

std::string render(const bench::ExperimentResult& r, const std::string& format,
                   const MeshConfig& cfg) {
  if (format == "csv") return bench::to_csv(r);
  nlohmann::json j = bench::to_json(r);
  j["config"] = cfg.to_json();
  return j.dump(2) + "\n";
}

MeshConfig load_config(const std::string& path) {
  return path.empty() ? MeshConfig::defaults() : MeshConfig::load(path);
}

struct BenchOptions {
  std::string kind, cores, config, out, format = "csv", svg, event_log;
  std::optional<int> size, rows, cols, iters, writers;
  bool large = false;
};

int run_bench(const BenchOptions& o) {
  const MeshConfig cfg = load_config(o.config);
  if (o.kind == "all") {
    if (o.out.empty()) throw UsageError("bench all needs --out DIR");
    fs::create_directories(o.out);
    for (const auto& r : bench::run_suite(cfg, o.large)) {
      const fs::path base = fs::path(o.out) / r.experiment;
      write_file(base.string() + "." + o.format, render(r, o.format, cfg));
      if (!o.svg.empty()) {
        if (auto svg = bench::to_svg(r)) write_file(base.string() + ".svg", *svg);
      }
    }
    return 0;
  }
  bench::ExperimentSpec spec;
  spec.kind = bench::parse_kind(o.kind);
  if (!o.cores.empty()) {
    std::smatch m;
    if (!std::regex_match(o.cores, m, std::regex(R"((\d+)x(\d+))"))) {
      throw UsageError("--cores expects RxC, got " + o.cores);
    }
    spec.wg_rows = std::stoi(m[1]);
    spec.wg_cols = std::stoi(m[2]);
  }
  spec.size = o.size;
  spec.rows = o.rows;
  spec.cols = o.cols;
  spec.iterations = o.iters;
  spec.writers = o.writers;
  spec.large = o.large;
  std::ofstream log;
  if (!o.event_log.empty()) {
    log.open(o.event_log);
    if (!log) throw UsageError("cannot write " + o.event_log);
    spec.event_log = &log;
  }
  const bench::ExperimentResult r = bench::run_experiment(spec, cfg);
  const std::string text = render(r, o.format, cfg);
  if (o.out.empty()) {
    std::cout << text;
  } else {
    write_file(o.out, text);
  }
  if (!o.svg.empty()) {
    if (auto svg = bench::to_svg(r)) {
      write_file(o.svg, *svg);
    } else {
      std::cerr << "no chart for experiment " << r.experiment << "\n";
    }
  }
  return 0;
}

int run_report(const std::vector<std::string>& in, const std::string& out, const std::string& csv,
               const std::string& curves) {
  std::vector<bench::ExperimentResult> results;
  for (const auto& p : in) {
    if (fs::is_directory(p)) {
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(p)) {
        const auto ext = e.path().extension();
        if (ext == ".csv" || ext == ".json") files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      for (const auto& f : files) {
        for (auto& r : bench::load_results(f.string())) results.push_back(std::move(r));
      }
    } else {
      for (auto& r : bench::load_results(p)) results.push_back(std::move(r));
    }
  }
  if (results.empty()) throw UsageError("report needs at least one result");
  const bench::Report rep = bench::make_report(results);
  const std::string text = rep.to_text();
  std::cout << text;
  if (!out.empty()) write_file(out, text);
  if (!csv.empty()) write_file(csv, rep.to_csv());
  if (!curves.empty()) {
    fs::create_directories(curves);
    for (const auto& r : results) {
      write_file((fs::path(curves) / (r.experiment + ".csv")).string(), bench::to_csv(r));
    }
  }
  return rep.mandatory_ok() ? 0 : 1;
}

int run_calibrate(const std::string& out, const std::string& config) {
  const bench::CalibrationFit f = bench::calibrate(load_config(config));
  nlohmann::json j = f.config.to_json();
  j["calibration"] = f.detail;
  const std::string text = j.dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    write_file(out, text);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"meshsim: deterministic simulator of a 64-core mesh NoC"};
  app.require_subcommand(1);

  BenchOptions b;
  auto* bench_cmd = app.add_subcommand("bench", "run an experiment (or 'all') and emit datapoints");
  bench_cmd->add_option("kind", b.kind,
                        "bandwidth|latency|elink|stencil|matmul|weak_scaling|strong_scaling|all")
      ->required();
  bench_cmd->add_option("--cores", b.cores, "workgroup shape RxC");
  auto* size = bench_cmd->add_option("--size", b.size, "square problem size");
  auto* rows = bench_cmd->add_option("--rows", b.rows, "problem rows");
  auto* cols = bench_cmd->add_option("--cols", b.cols, "problem columns");
  size->excludes(rows)->excludes(cols);
  bench_cmd->add_option("--iters", b.iters, "stencil iterations");
  bench_cmd->add_option("--writers", b.writers, "off-chip writers");
  bench_cmd->add_option("--config", b.config, "JSON config overriding the defaults");
  bench_cmd->add_option("--out", b.out, "output file (directory for 'all')");
  bench_cmd->add_option("--format", b.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  bench_cmd->add_option("--svg", b.svg, "write an SVG chart here (any value enables it for 'all')");
  bench_cmd->add_option("--event-log", b.event_log, "JSON-lines simulator event log");
  bench_cmd->add_flag("--large", b.large, "include the 1024 and 1536 paged products");

  std::vector<std::string> in;
  std::string rep_out, rep_csv, rep_curves;
  auto* report_cmd = app.add_subcommand("report", "compare results against reference values");
  report_cmd->add_option("--in", in, "result files or directories")->required();
  report_cmd->add_option("--out", rep_out, "also write the table here");
  report_cmd->add_option("--csv", rep_csv, "write the check table as CSV");
  report_cmd->add_option("--curves", rep_curves, "write each experiment's datapoints as CSV here");

  std::string cal_out, cal_config;
  auto* cal_cmd = app.add_subcommand("calibrate", "fit the timing constants to reference data");
  cal_cmd->add_option("--out", cal_out, "write the fitted config here");
  cal_cmd->add_option("--config", cal_config, "base config for constants the fit leaves alone");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help exits 0; every other parse failure is a usage error.
    return app.exit(e) == 0 ? 0 : 2;
  }
  try {
    if (*bench_cmd) return run_bench(b);
    if (*report_cmd) return run_report(in, rep_out, rep_csv, rep_curves);
    if (*cal_cmd) return run_calibrate(cal_out, cal_config);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
