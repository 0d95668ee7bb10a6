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

#include <bit>
#include <fstream>
#include <sstream>
#include <vector>

#include "meshsim/errors.hpp"
#include "meshsim/grid.hpp"

namespace meshsim {

static_assert(std::endian::native == std::endian::little, "binary IO assumes little endian");

Grid random_integer_grid(int rows, int cols, int lo, int hi, std::mt19937_64& rng) {
  Grid g(rows, cols);
  g.values = random_integer_matrix(rows + 2, cols + 2, lo, hi, rng);
  return g;
}

void save_binary(const MatrixF& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path);
  const std::int32_t dims[2] = {static_cast<std::int32_t>(m.rows()),
                                static_cast<std::int32_t>(m.cols())};
  out.write(reinterpret_cast<const char*>(dims), sizeof dims);
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(float)));
}

MatrixF load_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::int32_t dims[2];
  if (!in.read(reinterpret_cast<char*>(dims), sizeof dims) || dims[0] < 0 || dims[1] < 0) {
    throw UsageError("bad matrix header in " + path);
  }
  MatrixF m(dims[0], dims[1]);
  if (!in.read(reinterpret_cast<char*>(m.data()),
               static_cast<std::streamsize>(m.size() * sizeof(float)))) {
    throw UsageError("truncated matrix file " + path);
  }
  return m;
}

void save_csv(const MatrixF& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write " + path);
  out.precision(9);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << m(r, c);
    }
    out << '\n';
  }
}

MatrixF load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read " + path);
  std::vector<float> vals;
  Eigen::Index rows = 0, cols = -1;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    Eigen::Index n = 0;
    while (std::getline(ss, cell, ',')) {
      vals.push_back(std::stof(cell));
      ++n;
    }
    if (cols >= 0 && n != cols) throw UsageError("ragged CSV matrix " + path);
    cols = n;
    ++rows;
  }
  MatrixF m(rows, cols < 0 ? 0 : cols);
  std::copy(vals.begin(), vals.end(), m.data());
  return m;
}

}  // namespace meshsim
