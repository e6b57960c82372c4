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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "attrx/data.hpp"
#include "attrx/error.hpp"
#include "test_util.hpp"

using namespace attrx;
using attrx::testing::TempDir;
using attrx::testing::write_text;

namespace {

SyntheticSpec small_spec() {
  SyntheticSpec s;
  s.num_classes = 4;
  s.num_attributes = 3;
  s.feature_dim = 5;
  s.samples_per_class = 7;
  s.noise_sigma = 0.1;
  s.class_similarity = 0.4;
  s.seed = 99;
  return s;
}

// Hand-built dataset with n samples per class for C classes.
Dataset toy(std::size_t classes, std::size_t per_class) {
  std::vector<Sample> samples;
  for (std::size_t c = 0; c < classes; ++c)
    for (std::size_t k = 0; k < per_class; ++k)
      samples.push_back({Vector::Constant(2, static_cast<double>(c * per_class + k)),
                         static_cast<int>(c)});
  Matrix phi = Matrix::Identity(static_cast<Eigen::Index>(classes), 2);
  std::vector<std::string> cn, an{"a0", "a1"};
  for (std::size_t c = 0; c < classes; ++c) cn.push_back("c" + std::to_string(c));
  return Dataset(std::move(samples), phi, cn, an);
}

}  // namespace

TEST_CASE("orthogonal noiseless settings give two point clusters") {
  SyntheticSpec s;
  s.num_classes = 2;
  s.num_attributes = 2;
  s.feature_dim = 2;
  s.samples_per_class = 5;
  s.noise_sigma = 0.0;
  s.class_similarity = 0.0;
  s.seed = 3;
  const auto ds = generate_synthetic(s);
  CHECK(ds.class_attributes() == Matrix::Identity(2, 2));

  const Vector c0 = ds.sample(0).features;
  const Vector c1 = ds.sample(5).features;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& x = ds.sample(i);
    CHECK(x.features == (x.label == 0 ? c0 : c1));
  }
  // Distinct centers: a point cluster per class, separable by the bisector.
  CHECK((c0 - c1).norm() > 0.0);
  const Vector w = c0 - c1;
  const double b = -0.5 * (c0 + c1).dot(w);
  for (const auto& x : ds.samples()) CHECK(((w.dot(x.features) + b) > 0) == (x.label == 0));
}

TEST_CASE("generation is deterministic and seed dependent") {
  auto s = small_spec();
  CHECK(generate_synthetic(s) == generate_synthetic(s));
  auto t = s;
  t.seed = 100;
  CHECK_FALSE(generate_synthetic(s) == generate_synthetic(t));
}

TEST_CASE("more classes than distinct codes still generates") {
  auto s = small_spec();
  s.num_classes = 9;  // 2^3 - 1 = 7 nonempty codes
  const auto ds = generate_synthetic(s);
  CHECK(ds.num_classes() == 9);
  CHECK(ds == generate_synthetic(s));
}

TEST_CASE("generated signatures lie in the unit box and samples are class major") {
  auto s = small_spec();
  s.num_classes = 10;
  s.num_attributes = 8;
  s.feature_dim = 16;
  for (double sim : {0.0, 0.3, 0.8, 1.0}) {
    s.class_similarity = sim;
    const auto ds = generate_synthetic(s);
    CHECK(ds.class_attributes().minCoeff() >= 0.0);
    CHECK(ds.class_attributes().maxCoeff() <= 1.0);
    for (std::size_t i = 0; i < ds.size(); ++i)
      CHECK(ds.sample(i).label == static_cast<int>(i / s.samples_per_class));
  }
}

TEST_CASE("higher similarity pulls class signatures together") {
  auto s = small_spec();
  s.num_classes = 10;
  s.num_attributes = 8;
  s.feature_dim = 16;
  auto mean_gap = [&](double sim) {
    s.class_similarity = sim;
    const Matrix phi = generate_synthetic(s).class_attributes();
    double sum = 0.0;
    int n = 0;
    for (Eigen::Index a = 0; a < phi.rows(); ++a)
      for (Eigen::Index b = a + 1; b < phi.rows(); ++b, ++n) sum += (phi.row(a) - phi.row(b)).norm();
    return sum / n;
  };
  CHECK(mean_gap(0.1) > mean_gap(0.5));
  CHECK(mean_gap(0.5) > mean_gap(0.9));
}

TEST_CASE("invalid synthetic specs are rejected") {
  auto s = small_spec();
  s.num_classes = 1;
  CHECK_THROWS_AS(generate_synthetic(s), ValidationError);
  s = small_spec();
  s.feature_dim = 2;
  CHECK_THROWS_AS(generate_synthetic(s), ValidationError);
  s = small_spec();
  s.noise_sigma = -1;
  CHECK_THROWS_AS(generate_synthetic(s), ValidationError);
  s = small_spec();
  s.class_similarity = 1.5;
  CHECK_THROWS_AS(generate_synthetic(s), ValidationError);
}

TEST_CASE("dataset constructor validates invariants") {
  Matrix phi = Matrix::Identity(2, 2);
  std::vector<std::string> cn{"a", "b"}, an{"x", "y"};
  CHECK_THROWS_AS(Dataset({{Vector::Zero(2), 2}}, phi, cn, an), ValidationError);
  CHECK_THROWS_AS(Dataset({{Vector::Zero(2), 0}, {Vector::Zero(3), 1}}, phi, cn, an),
                  ValidationError);
  Vector bad = Vector::Zero(2);
  bad(1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(Dataset({{bad, 0}}, phi, cn, an), ValidationError);
  CHECK_THROWS_AS(Dataset({{Vector::Zero(2), 0}}, phi, {"a"}, an), ValidationError);
  CHECK_THROWS_AS(Dataset({{Vector::Ones(2), 0}}, phi, cn, an, FeatureBounds::uniform(2, 0, 0.5)),
                  ValidationError);
}

TEST_CASE("save then load is the identity") {
  TempDir dir("data-rt");
  auto s = small_spec();
  const auto ds = generate_synthetic(s);
  DatasetPaths p{dir / "f.csv", dir / "a.csv", dir / "n.txt"};
  save_dataset(ds, p);
  CHECK(load_dataset(p) == ds);

  // Hand-checked values survive exactly, including awkward ones.
  std::vector<Sample> samples{{(Vector(2) << 0.1, 1e-300).finished(), 0},
                              {(Vector(2) << -2.5e17, 1.0 / 3.0).finished(), 1}};
  Dataset tiny(samples, (Matrix(2, 2) << 0.7, 0.3, 1.0 / 7.0, 0).finished(), {"x", "y"},
               {"p", "q"});
  save_dataset(tiny, p);
  CHECK(load_dataset(p) == tiny);
}

TEST_CASE("file formats follow the documented headers") {
  TempDir dir("data-fmt");
  DatasetPaths p{dir / "f.csv", dir / "a.csv", dir / "n.txt"};
  save_dataset(toy(2, 1), p);
  const auto f = attrx::testing::read_text(p.features);
  CHECK(f.substr(0, f.find('\n')) == "f0,f1,label");
  const auto a = attrx::testing::read_text(p.attributes);
  CHECK(a.substr(0, a.find('\n')) == "a0,a1");
  CHECK(attrx::testing::read_text(p.names) == "class:c0\nclass:c1\nattr:a0\nattr:a1\n");
}

TEST_CASE("malformed files produce errors naming the line") {
  TempDir dir("data-bad");
  DatasetPaths p{dir / "f.csv", dir / "a.csv", dir / "n.txt"};
  write_text(p.attributes, "a0,a1\n1,0\n0,1\n");
  write_text(p.names, "class:c0\nclass:c1\nattr:x\nattr:y\n");

  SUBCASE("feature row of wrong length") {
    write_text(p.features, "f0,f1,label\n0.5,0.5,0\n0.1,0\n");
    try {
      load_dataset(p);
      FAIL("expected an error");
    } catch (const ValidationError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("dimension mismatch") != std::string::npos);
      CHECK(msg.find(":3") != std::string::npos);
    }
  }
  SUBCASE("NaN in the attribute matrix") {
    write_text(p.attributes, "a0,a1\n1,nan\n0,1\n");
    write_text(p.features, "f0,f1,label\n0.5,0.5,0\n");
    try {
      load_dataset(p);
      FAIL("expected an error");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("non-finite") != std::string::npos);
    }
  }
  SUBCASE("unknown label") {
    write_text(p.features, "f0,f1,label\n0.5,0.5,2\n");
    CHECK_THROWS_WITH_AS(load_dataset(p), doctest::Contains("label"), ValidationError);
  }
  SUBCASE("garbage number") {
    write_text(p.features, "f0,f1,label\n0.5,abc,0\n");
    CHECK_THROWS_AS(load_dataset(p), ValidationError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_dataset({dir / "nope.csv", p.attributes, p.names}), ValidationError);
  }
}

TEST_CASE("split with all weight on train") {
  const auto ds = toy(3, 4);
  const auto s = split(ds, {1.0, 0.0, 0.0}, 5);
  CHECK(s.train.size() == ds.size());
  CHECK(s.val.empty());
  CHECK(s.test.empty());
}

TEST_CASE("split is deterministic") {
  const auto ds = generate_synthetic(small_spec());
  const auto a = split(ds, {0.6, 0.1, 0.3}, 11);
  const auto b = split(ds, {0.6, 0.1, 0.3}, 11);
  CHECK(a.train == b.train);
  CHECK(a.val == b.val);
  CHECK(a.test == b.test);
}

TEST_CASE("100 samples over 10 classes split 6/1/3 per class") {
  const auto ds = toy(10, 10);
  const auto s = split(ds, {0.6, 0.1, 0.3}, 1);
  // Exhaustive count per class and part.
  for (int c = 0; c < 10; ++c) {
    std::size_t counts[3] = {0, 0, 0};
    int part = 0;
    for (auto p : {SplitPart::train, SplitPart::val, SplitPart::test}) {
      for (auto i : s.part(p))
        if (ds.sample(i).label == c) ++counts[part];
      ++part;
    }
    CHECK(counts[0] == 6);
    CHECK(counts[1] == 1);
    CHECK(counts[2] == 3);
  }
}

TEST_CASE("split parts are disjoint, sorted, covering and stratified") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto spec = small_spec();
    spec.samples_per_class = 13;
    const auto ds = generate_synthetic(spec);
    const std::array<double, 3> ratios{0.5, 0.2, 0.3};
    const auto s = split(ds, ratios, seed);
    std::set<std::size_t> all;
    for (auto p : {SplitPart::train, SplitPart::val, SplitPart::test}) {
      const auto& idx = s.part(p);
      CHECK(std::is_sorted(idx.begin(), idx.end()));
      for (auto i : idx) CHECK(all.insert(i).second);
    }
    CHECK(all.size() == ds.size());
    for (int c = 0; c < 4; ++c) {
      int k = 0;
      for (auto p : {SplitPart::train, SplitPart::val, SplitPart::test}) {
        const auto n = std::count_if(s.part(p).begin(), s.part(p).end(),
                                     [&](std::size_t i) { return ds.sample(i).label == c; });
        CHECK(std::abs(static_cast<double>(n) - 13.0 * ratios[static_cast<std::size_t>(k)]) <= 1.0);
        ++k;
      }
    }
  }
}

TEST_CASE("split rejects degenerate requests") {
  CHECK_THROWS_AS(split(toy(2, 2), {0.6, 0.1, 0.3}, 1), ValidationError);
  CHECK_THROWS_AS(split(toy(2, 10), {0.5, 0.1, 0.1}, 1), ValidationError);
  CHECK_THROWS_AS(split(toy(2, 10), {0.0, 0.5, 0.5}, 1), ValidationError);
}

TEST_CASE("number formatting round-trips") {
  for (double v : {0.0, -0.0, 0.1, 1.0 / 3.0, 1e-310, 6.02e23, -7.25}) {
    CHECK(parse_double(format_double(v)) == v);
  }
  CHECK(format_double(0.5) == "0.5");
  CHECK_THROWS_AS(parse_double("1.5x"), ValidationError);
  CHECK_THROWS_AS(parse_double(""), ValidationError);
}

TEST_CASE("mean feature std matches a direct computation") {
  const auto ds = generate_synthetic(small_spec());
  std::vector<std::size_t> idx(ds.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  double expect = 0.0;
  for (std::size_t j = 0; j < ds.feature_dim(); ++j) {
    double m = 0.0;
    for (auto i : idx) m += ds.sample(i).features(static_cast<Eigen::Index>(j));
    m /= static_cast<double>(idx.size());
    double v = 0.0;
    for (auto i : idx) v += std::pow(ds.sample(i).features(static_cast<Eigen::Index>(j)) - m, 2);
    expect += std::sqrt(v / static_cast<double>(idx.size() - 1));
  }
  expect /= static_cast<double>(ds.feature_dim());
  CHECK(mean_feature_std(ds, idx) == doctest::Approx(expect).epsilon(1e-12));
}
