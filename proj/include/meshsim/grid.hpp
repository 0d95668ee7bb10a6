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
 * @file grid.hpp
 * @brief Dense single-precision matrices and halo grids, plus their file formats.
 *
 * Binary format: int32 rows, int32 cols (little endian), then rows*cols
 * row-major float32 values.
 */

#pragma once

#include <cstdint>
#include <random>
#include <string>

#include <Eigen/Dense>

namespace meshsim {

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixF = RowMatrix<float>;

/// Interior of rows x cols points surrounded by a one-point boundary ring.
struct Grid {
  int rows = 0;
  int cols = 0;
  MatrixF values;  // (rows+2) x (cols+2), halo included

  Grid() = default;
  Grid(int r, int c) : rows(r), cols(c), values(MatrixF::Zero(r + 2, c + 2)) {}

  /// Interior point (0-based, halo excluded).
  float& at(int r, int c) { return values(r + 1, c + 1); }
  [[nodiscard]] float at(int r, int c) const { return values(r + 1, c + 1); }
  auto interior() { return values.block(1, 1, rows, cols); }
  [[nodiscard]] auto interior() const { return values.block(1, 1, rows, cols); }

  bool operator==(const Grid& o) const {
    return rows == o.rows && cols == o.cols && values == o.values;
  }
};

/// Integer-valued random matrix in [lo, hi]; exact under float arithmetic.
template <typename Scalar = float>
RowMatrix<Scalar> random_integer_matrix(int rows, int cols, int lo, int hi, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> d(lo, hi);
  RowMatrix<Scalar> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(d(rng));
  return m;
}

/// Grid with integer interior and boundary values in [lo, hi].
Grid random_integer_grid(int rows, int cols, int lo, int hi, std::mt19937_64& rng);

void save_binary(const MatrixF& m, const std::string& path);
MatrixF load_binary(const std::string& path);
void save_csv(const MatrixF& m, const std::string& path);
MatrixF load_csv(const std::string& path);

}  // namespace meshsim
