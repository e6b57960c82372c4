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

#pragma once

#include <functional>

#include "attrx/data.hpp"

namespace attrx {

using ScalarFn = std::function<double(const Vector&)>;

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every coordinate.
Vector central_difference(const ScalarFn& f, const Vector& x, double h = 1e-6);

// ||a - b|| / max(||a||, ||b||), or ||a - b|| when both are below `floor`.
double relative_error(const Vector& a, const Vector& b, double floor = 1e-8);

// Row-major flattening helpers so matrix parameters can be checked the same way.
Vector flatten(const Matrix& m);
Matrix unflatten(const Vector& v, Eigen::Index rows, Eigen::Index cols);

}  // namespace attrx
