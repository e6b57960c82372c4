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

// Serial vs OpenMP timings of the per-sample kernels.
//
//   bench_kernels [samples_per_class] [repeats]

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <omp.h>

#include "attrx/explain.hpp"
#include "attrx/perturb.hpp"
#include "attrx/pipeline.hpp"

using namespace attrx;

namespace {

template <typename Fn>
double median_seconds(int repeats, Fn&& fn) {
  std::vector<double> t;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    t.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  std::nth_element(t.begin(), t.begin() + t.size() / 2, t.end());
  return t[t.size() / 2];
}

void row(const char* name, double serial, double parallel, bool same) {
  std::printf("%-24s %10.4f %10.4f %8.2fx  %s\n", name, serial, parallel, serial / parallel,
              same ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig c;
  if (argc > 1) c.data.samples_per_class = std::strtoul(argv[1], nullptr, 10);
  const int repeats = argc > 2 ? std::atoi(argv[2]) : 5;
  c.validate();

  Dataset ds = generate_synthetic(synthetic_spec(c));
  ds = ds.with_bounds(bounds_for(c, ds.feature_dim()));
  std::vector<std::size_t> all(ds.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const auto map = make_map(c, ds.feature_dim());
  const auto model = train_sje(ds, all, map, train_config(c, "train-sje")).model;
  const AttributeClassifier clf(map, model, ds.class_attributes(), c.train.margin);
  const auto attack = attack_config(c, c.attack.epsilon_rel, mean_feature_std(ds, all),
                                    parse_attack_loss(c.attack.loss));

  std::printf("%zu samples, %d threads, median of %d\n", ds.size(), omp_get_max_threads(), repeats);
  std::printf("%-24s %10s %10s %9s\n", "kernel", "serial s", "omp s", "speedup");

  AttackResult as, ap;
  const double ts = median_seconds(repeats, [&] { as = attack_dataset(clf, ds, all, attack, Exec::serial); });
  const double tp = median_seconds(repeats, [&] { ap = attack_dataset(clf, ds, all, attack, Exec::parallel); });
  bool same = as.samples.size() == ap.samples.size();
  for (std::size_t i = 0; same && i < as.samples.size(); ++i)
    same = as.samples[i].perturbed == ap.samples[i].perturbed;
  row("attack_dataset", ts, tp, same);

  AccuracyCount cs, cp;
  const double us = median_seconds(repeats * 10, [&] { cs = accuracy(clf, ds, all, Exec::serial); });
  const double up = median_seconds(repeats * 10, [&] { cp = accuracy(clf, ds, all, Exec::parallel); });
  row("accuracy", us, up, cs.correct == cp.correct);

  // Whole dataset as one gallery by relabelling every entry to class 0.
  auto gallery = build_gallery(clf, ds, all, 0);
  for (std::size_t i = 0; i < all.size(); ++i)
    if (ds.sample(i).label != 0) gallery.push_back({i, 0, clf.attributes(ds.sample(i).features)});
  const Vector q = clf.attributes(ap.samples.front().perturbed);
  std::vector<CounterExample> es, ep;
  const double gs = median_seconds(repeats * 10, [&] { es = select_counter_examples(q, 0, gallery, 5, Exec::serial); });
  const double gp =
      median_seconds(repeats * 10, [&] { ep = select_counter_examples(q, 0, gallery, 5, Exec::parallel); });
  row("select_counter_examples", gs, gp, es == ep);
  return 0;
}
