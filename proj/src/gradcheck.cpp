// Copyright 2026 The attrx Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "attrx/gradcheck.hpp"

#include <algorithm>

#include "attrx/error.hpp"

namespace attrx {

Vector central_difference(const ScalarFn& f, const Vector& x, double h) {
  require(h > 0.0, "finite-difference step must be positive");
  Vector grad(x.size());
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double orig = probe(i);
    probe(i) = orig + h;
    const double up = f(probe);
    probe(i) = orig - h;
    const double down = f(probe);
    probe(i) = orig;
    grad(i) = (up - down) / (2.0 * h);
  }
  return grad;
}

double relative_error(const Vector& a, const Vector& b, double floor) {
  require(a.size() == b.size(), "relative_error: size mismatch");
  const double diff = (a - b).norm();
  const double scale = std::max(a.norm(), b.norm());
  return scale < floor ? diff : diff / scale;
}

Vector flatten(const Matrix& m) {
  Vector v(m.size());
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) v(k++) = m(i, j);
  return v;
}

Matrix unflatten(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  require(v.size() == rows * cols, "unflatten: size mismatch");
  Matrix m(rows, cols);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = v(k++);
  return m;
}

}  // namespace attrx
