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

#include <Eigen/Dense>

#include "meshsim/bench.hpp"
#include "meshsim/matmul.hpp"

namespace meshsim::bench {

namespace {

constexpr double kDmaPlateau = 2.0e9;     // bytes/s, large adjacent-core DMA
constexpr double kELinkWrite = 150.0e6;   // bytes/s, sustained off-chip writes
constexpr int kLatencyWords = 20;         // an 80-byte message

/// Ordinary least squares; returns the coefficients.
Eigen::VectorXd fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  return x.colPivHouseholderQr().solve(y);
}

double cannon_cycles(const MeshConfig& cfg, int p, int block) {
  const MatrixF z = MatrixF::Zero(p * block, p * block);
  return cannon_multicore(z, z, p, cfg).cycles;
}

}  // namespace

CalibrationFit calibrate(const MeshConfig& base) {
  CalibrationFit out{base, nlohmann::json::object()};
  MeshConfig& cfg = out.config;
  const double ns = cfg.ns_per_cycle();

  // Per-transfer latency is affine in distance: a + b*d cycles.
  {
    const double d[] = {1, 1, 2, 2, 3, 3, 4, 4, 5, 6, 14};
    const double t[] = {11.12, 11.12, 11.14, 11.14, 11.19, 11.19, 11.38, 11.38, 11.62, 11.86, 12.57};
    Eigen::MatrixXd x(11, 2);
    Eigen::VectorXd y(11);
    for (int i = 0; i < 11; ++i) {
      x(i, 0) = 1.0;
      x(i, 1) = d[i];
      y(i) = t[i] / ns;
    }
    const Eigen::VectorXd c = fit(x, y);
    cfg.timing.hop_latency_cycles = c(1) * kLatencyWords;
    cfg.timing.direct_write_issue_cycles = c(0) - cfg.timing.direct_write_setup_cycles / kLatencyWords;
    const Eigen::VectorXd res = (x * c - y).cwiseQuotient(y);
    out.detail["latency"] = {{"intercept_cycles", c(0)},
                             {"slope_cycles_per_hop", c(1)},
                             {"max_relative_residual", res.cwiseAbs().maxCoeff()}};
  }

  cfg.timing.dma_bytes_per_cycle = kDmaPlateau / cfg.clock_hz;
  cfg.elink.transaction_overhead_factor = cfg.elink.link_bytes_per_cycle * cfg.clock_hz / kELinkWrite;
  out.detail["rates"] = {{"dma_bytes_per_cycle", cfg.timing.dma_bytes_per_cycle},
                         {"transaction_overhead_factor", cfg.elink.transaction_overhead_factor}};

  // Single-core block product: cycles - n^3 * macro_rate = n * row + n^2 * store.
  {
    const double n[] = {8, 16, 20, 24, 32};
    const double g[] = {0.85, 1.07, 1.11, 1.12, 1.15};
    const double per_mac = cfg.matmul.cycles_per_macro / (cfg.matmul.flops_per_macro / 2.0);
    Eigen::MatrixXd x(5, 2);
    Eigen::VectorXd y(5);
    for (int i = 0; i < 5; ++i) {
      const double cycles = 2.0 * n[i] * n[i] * n[i] / (g[i] * 1e9) * cfg.clock_hz;
      // Rows are scaled by 1/cycles so the fit minimizes relative error.
      x(i, 0) = n[i] / cycles;
      x(i, 1) = n[i] * n[i] / cycles;
      y(i) = (cycles - per_mac * n[i] * n[i] * n[i]) / cycles;
    }
    const Eigen::VectorXd c = fit(x, y);
    cfg.matmul.row_loop_overhead_cycles = c(0);
    cfg.matmul.store_row_cycles_per_elem = c(1);
    double worst = 0.0;
    for (int i = 0; i < 5; ++i) {
      const int b = static_cast<int>(n[i]);
      const double gf = matmul_flops(b, b, b) / (matmul_core_time(b, b, b, cfg.matmul) / cfg.clock_hz) / 1e9;
      worst = std::max(worst, std::abs(gf / g[i] - 1.0));
    }
    out.detail["matmul_single"] = {{"row_loop_overhead_cycles", c(0)},
                                   {"store_row_cycles_per_elem", c(1)},
                                   {"max_relative_error", worst}};
  }

  // Per-round Cannon overhead against the full-mesh column. Each round pays
  // it once on the critical path, so run time is affine in it; two probes
  // give each entry's slope and a weighted least-squares fit does the rest.
  {
    const int p = std::min(cfg.rows, cfg.cols);
    const int blocks[] = {8, 16, 20, 24, 32};
    const double g[] = {20.30, 51.41, 57.62, 62.17, 65.32};
    constexpr double kProbe = 500.0;
    MeshConfig probe = cfg;
    Eigen::MatrixXd x(5, 1);
    Eigen::VectorXd y(5);
    for (int i = 0; i < 5; ++i) {
      const double n = p * blocks[i];
      const double target = matmul_flops(n, n, n) / (g[i] * 1e9) * cfg.clock_hz;
      probe.matmul.round_overhead_cycles = 0.0;
      const double t0 = cannon_cycles(probe, p, blocks[i]);
      probe.matmul.round_overhead_cycles = kProbe;
      const double slope = (cannon_cycles(probe, p, blocks[i]) - t0) / kProbe;
      x(i, 0) = slope / target;
      y(i) = (target - t0) / target;
    }
    const double r = std::max(0.0, fit(x, y)(0));
    cfg.matmul.round_overhead_cycles = r;
    nlohmann::json errs = nlohmann::json::array();
    for (int i = 0; i < 5; ++i) {
      const double n = p * blocks[i];
      const double gf = matmul_flops(n, n, n) / (cannon_cycles(cfg, p, blocks[i]) / cfg.clock_hz) / 1e9;
      errs.push_back(gf / g[i] - 1.0);
    }
    out.detail["cannon_round"] = {{"round_overhead_cycles", r}, {"relative_errors", errs}};
  }
  cfg.validate();
  return out;
}

}  // namespace meshsim::bench
