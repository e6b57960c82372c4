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

#include "attrx/json_io.hpp"

namespace attrx {

using nlohmann::json;

namespace {

json vec(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json scored(const std::vector<ScoredIndex>& list, const std::vector<std::string>& names) {
  json a = json::array();
  for (const auto& s : list)
    a.push_back({{"index", s.index},
                 {"name", names.at(static_cast<std::size_t>(s.index))},
                 {"score", s.score}});
  return a;
}

}  // namespace

json to_json(const AttackSummary& s) {
  return {{"epsilon", s.epsilon},         {"alpha", s.alpha},
          {"steps", s.steps},             {"n", s.n},
          {"clean_acc", s.clean_acc()},   {"adv_acc", s.adv_acc()},
          {"flip_rate", s.flip_rate()},   {"clean_correct", s.clean_correct},
          {"adv_correct", s.adv_correct}, {"flipped", s.flipped},
          {"eligible", s.eligible}};
}

json to_json(const RobustificationReport& r) {
  return {{"clean_acc_standard", r.clean_acc_standard},
          {"adv_acc_standard", r.adv_acc_standard},
          {"clean_acc_robust", r.clean_acc_robust},
          {"adv_acc_robust", r.adv_acc_robust},
          {"measure", r.measure ? json(*r.measure) : json("not-applicable")}};
}

json to_json(const ExplanationRecord& r) {
  json j = {{"sample_id", r.sample_id},
            {"explainable", r.explainable},
            {"status", r.status},
            {"true_class", r.true_class},
            {"counter_class", r.counter_class},
            {"clean_attrs", vec(r.clean_attrs)},
            {"adv_attrs", vec(r.adv_attrs)},
            {"discriminative_clean", scored(r.discriminative_clean, r.attribute_names)},
            {"discriminative_adv", scored(r.discriminative_adv, r.attribute_names)},
            {"attribute_names", r.attribute_names}};
  json ce = json::array();
  for (const auto& c : r.counter_examples)
    ce.push_back({{"sample_id", c.sample_id}, {"distance", c.distance}});
  j["counter_examples"] = std::move(ce);
  if (r.robust)
    j["robust"] = {{"predicted_class", r.robust->predicted_class},
                   {"adv_attrs", vec(r.robust->adv_attrs)}};
  return j;
}

json stats_json(const DistanceSummary& s) {
  return {{"mode", to_string(s.mode)},
          {"candidates", s.candidates},
          {"eligible", s.d1.size()},
          {"d1", {{"mean", s.d1_stats.mean}, {"median", s.d1_stats.median}}},
          {"d2", {{"mean", s.d2_stats.mean}, {"median", s.d2_stats.median}}},
          {"overlap", s.overlap}};
}

void write_distance_csv(const DistanceSummary& s, std::ostream& out) {
  out << "sample_id,d1,d2\n";
  for (std::size_t i = 0; i < s.d1.size(); ++i)
    out << s.sample_ids[i] << ',' << format_double(s.d1[i]) << ',' << format_double(s.d2[i])
        << '\n';
}

}  // namespace attrx
