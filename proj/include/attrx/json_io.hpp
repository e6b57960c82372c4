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

#include <ostream>

#include <json.hpp>

#include "attrx/explain.hpp"
#include "attrx/perturb.hpp"
#include "attrx/robust.hpp"

namespace attrx {

// {epsilon, alpha, steps, n, clean_acc, adv_acc, flip_rate} plus raw counts.
nlohmann::json to_json(const AttackSummary& s);
nlohmann::json to_json(const RobustificationReport& r);
nlohmann::json to_json(const ExplanationRecord& r);
// Stats block only; per-sample values go to CSV.
nlohmann::json stats_json(const DistanceSummary& s);

// Header `sample_id,d1,d2`.
void write_distance_csv(const DistanceSummary& s, std::ostream& out);

}  // namespace attrx
