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

#include "attrx/data.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "attrx/error.hpp"
#include "attrx/rng.hpp"

namespace attrx {

namespace {

bool all_finite(const Eigen::Ref<const Matrix>& m) { return m.allFinite(); }

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

std::string where(const std::filesystem::path& p, std::size_t line) {
  return p.string() + ":" + std::to_string(line) + ": ";
}

std::ifstream open_in(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  require(static_cast<bool>(in), "cannot open " + p.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), "cannot write " + p.string());
  return out;
}

}  // namespace

FeatureBounds FeatureBounds::uniform(std::size_t dim, double low, double high) {
  const auto n = static_cast<Eigen::Index>(dim);
  return {Vector::Constant(n, low), Vector::Constant(n, high)};
}

Dataset::Dataset(std::vector<Sample> samples, Matrix class_attributes,
                 std::vector<std::string> class_names, std::vector<std::string> attribute_names,
                 std::optional<FeatureBounds> bounds)
    : samples_(std::move(samples)),
      class_attributes_(std::move(class_attributes)),
      class_names_(std::move(class_names)),
      attribute_names_(std::move(attribute_names)),
      bounds_(std::move(bounds)) {
  require(class_attributes_.rows() > 0 && class_attributes_.cols() > 0,
          "class attribute matrix is empty");
  require(all_finite(class_attributes_), "class attribute matrix has a non-finite entry");
  require(class_names_.size() == num_classes(),
          "expected " + std::to_string(num_classes()) + " class names, got " +
              std::to_string(class_names_.size()));
  require(attribute_names_.size() == num_attributes(),
          "expected " + std::to_string(num_attributes()) + " attribute names, got " +
              std::to_string(attribute_names_.size()));
  require(!samples_.empty(), "dataset has no samples");
  feature_dim_ = static_cast<std::size_t>(samples_.front().features.size());
  require(feature_dim_ > 0, "feature dimension is zero");
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const auto& s = samples_[i];
    require(static_cast<std::size_t>(s.features.size()) == feature_dim_,
            "sample " + std::to_string(i) + " has " + std::to_string(s.features.size()) +
                " features, expected " + std::to_string(feature_dim_));
    require(s.features.allFinite(), "sample " + std::to_string(i) + " has a non-finite feature");
    require(s.label >= 0 && static_cast<std::size_t>(s.label) < num_classes(),
            "sample " + std::to_string(i) + " has unknown label " + std::to_string(s.label));
  }
  if (bounds_) {
    const auto d = static_cast<Eigen::Index>(feature_dim_);
    require(bounds_->low.size() == d && bounds_->high.size() == d,
            "feature bounds do not match feature dimension");
    require((bounds_->low.array() <= bounds_->high.array()).all(), "feature bounds are inverted");
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      const auto& f = samples_[i].features;
      require((f.array() >= bounds_->low.array()).all() &&
                  (f.array() <= bounds_->high.array()).all(),
              "sample " + std::to_string(i) + " lies outside the declared feature bounds");
    }
  }
}

Dataset Dataset::with_bounds(std::optional<FeatureBounds> bounds) const {
  return Dataset(samples_, class_attributes_, class_names_, attribute_names_, std::move(bounds));
}

bool operator==(const Dataset& a, const Dataset& b) {
  if (a.samples_.size() != b.samples_.size()) return false;
  for (std::size_t i = 0; i < a.samples_.size(); ++i) {
    if (a.samples_[i].label != b.samples_[i].label) return false;
    if (a.samples_[i].features != b.samples_[i].features) return false;
  }
  if (a.bounds_.has_value() != b.bounds_.has_value()) return false;
  if (a.bounds_ && (a.bounds_->low != b.bounds_->low || a.bounds_->high != b.bounds_->high))
    return false;
  return a.class_attributes_ == b.class_attributes_ && a.class_names_ == b.class_names_ &&
         a.attribute_names_ == b.attribute_names_;
}

void SyntheticSpec::validate() const {
  require(num_classes >= 2, "synthetic data needs at least 2 classes");
  require(num_attributes >= 2, "synthetic data needs at least 2 attributes");
  require(feature_dim >= num_attributes, "synthetic data needs feature_dim >= num_attributes");
  require(samples_per_class >= 1, "synthetic data needs at least 1 sample per class");
  require(std::isfinite(noise_sigma) && noise_sigma >= 0.0, "noise_sigma must be >= 0");
  require(class_similarity >= 0.0 && class_similarity <= 1.0,
          "class_similarity must lie in [0, 1]");
}

namespace {

double binomial(std::size_t n, std::size_t k) {
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

constexpr double kBaseJitter = 0.1;

// Distinct binary codes, one per class, with the smallest weight that fits.
std::vector<std::vector<std::size_t>> class_codes(std::size_t classes, std::size_t attrs,
                                                  std::mt19937_64& rng) {
  std::vector<std::vector<std::size_t>> codes;
  if (classes <= attrs) {
    for (std::size_t c = 0; c < classes; ++c) codes.push_back({c});
    return codes;
  }
  std::size_t weight = 2;
  while (weight <= attrs && binomial(attrs, weight) < static_cast<double>(classes)) ++weight;
  if (weight > attrs) {
    // No single weight has enough codes: take every nonempty subset, lightest
    // first, and cycle once they run out (classes then differ by jitter only).
    require(attrs <= 24, "too many classes for " + std::to_string(attrs) + " attributes");
    std::vector<std::vector<std::size_t>> all;
    for (std::size_t w = 1; w <= attrs; ++w) {
      std::vector<std::vector<std::size_t>> level;
      for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << attrs); ++mask) {
        if (static_cast<std::size_t>(std::popcount(mask)) != w) continue;
        std::vector<std::size_t> code;
        for (std::size_t j = 0; j < attrs; ++j)
          if (mask >> j & 1U) code.push_back(j);
        level.push_back(std::move(code));
      }
      std::shuffle(level.begin(), level.end(), rng);
      all.insert(all.end(), level.begin(), level.end());
    }
    for (std::size_t c = 0; c < classes; ++c) codes.push_back(all[c % all.size()]);
    return codes;
  }
  std::set<std::vector<std::size_t>> seen;
  std::vector<std::size_t> pool(attrs);
  while (codes.size() < classes) {
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    std::shuffle(pool.begin(), pool.end(), rng);
    std::vector<std::size_t> code(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(weight));
    std::sort(code.begin(), code.end());
    if (seen.insert(code).second) codes.push_back(std::move(code));
  }
  return codes;
}

}  // namespace

Dataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  auto rng = substream(spec.seed, "synthetic");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const auto C = static_cast<Eigen::Index>(spec.num_classes);
  const auto A = static_cast<Eigen::Index>(spec.num_attributes);
  const auto d = static_cast<Eigen::Index>(spec.feature_dim);

  Vector base(A);
  for (Eigen::Index j = 0; j < A; ++j) base(j) = unit(rng);
  const auto codes = class_codes(spec.num_classes, spec.num_attributes, rng);

  // Convex blend of each class code toward the shared base signature. Each
  // class sees the base with a small jitter so close classes still differ in
  // a continuous way rather than only through their codes.
  Matrix phi = Matrix::Zero(C, A);
  const double s = spec.class_similarity;
  std::uniform_real_distribution<double> jitter(-kBaseJitter, kBaseJitter);
  for (Eigen::Index c = 0; c < C; ++c) {
    Vector code = Vector::Zero(A);
    for (auto j : codes[static_cast<std::size_t>(c)]) code(static_cast<Eigen::Index>(j)) = 1.0;
    Vector shared = base;
    for (Eigen::Index j = 0; j < A; ++j) shared(j) = std::clamp(base(j) + jitter(rng), 0.0, 1.0);
    phi.row(c) = ((1.0 - s) * code + s * shared).transpose();
  }

  Matrix mixing(d, A);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < A; ++j) mixing(i, j) = gauss(rng);

  std::vector<Sample> samples;
  samples.reserve(spec.num_classes * spec.samples_per_class);
  for (Eigen::Index c = 0; c < C; ++c) {
    const Vector center = mixing * phi.row(c).transpose();
    for (std::size_t k = 0; k < spec.samples_per_class; ++k) {
      Vector x = center;
      if (spec.noise_sigma > 0.0)
        for (Eigen::Index i = 0; i < d; ++i) x(i) += spec.noise_sigma * gauss(rng);
      samples.push_back({std::move(x), static_cast<int>(c)});
    }
  }

  std::vector<std::string> class_names, attr_names;
  for (Eigen::Index c = 0; c < C; ++c) class_names.push_back("class_" + std::to_string(c));
  for (Eigen::Index j = 0; j < A; ++j) attr_names.push_back("attr_" + std::to_string(j));
  return Dataset(std::move(samples), std::move(phi), std::move(class_names), std::move(attr_names));
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  require(ec == std::errc(), "cannot format value");
  return std::string(buf.data(), end);
}

double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw ValidationError("malformed number '" + std::string(text) + "'");
  return v;
}

namespace {

double parse_finite(std::string_view text, const std::string& ctx) {
  double v = 0.0;
  try {
    v = parse_double(text);
  } catch (const ValidationError& e) {
    throw ValidationError(ctx + e.what());
  }
  if (!std::isfinite(v)) throw ValidationError(ctx + "non-finite value '" + std::string(text) + "'");
  return v;
}

void expect_header(const std::vector<std::string>& got, const std::string& prefix,
                   std::size_t count, const std::string& ctx) {
  for (std::size_t i = 0; i < count; ++i)
    require(i < got.size() && got[i] == prefix + std::to_string(i),
            ctx + "bad header, expected column '" + prefix + std::to_string(i) + "'");
}

}  // namespace

Dataset load_dataset(const DatasetPaths& paths) {
  // Attributes first: they define C and A.
  std::vector<std::vector<double>> attr_rows;
  std::size_t A = 0;
  {
    auto in = open_in(paths.attributes);
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), where(paths.attributes, 1) + "empty file");
    auto header = split_fields(strip_cr(line));
    A = header.size();
    require(A > 0, where(paths.attributes, 1) + "empty header");
    expect_header(header, "a", A, where(paths.attributes, 1));
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      line = strip_cr(line);
      if (line.empty()) continue;
      auto f = split_fields(line);
      require(f.size() == A, where(paths.attributes, lineno) + "dimension mismatch: expected " +
                                 std::to_string(A) + " fields, got " + std::to_string(f.size()));
      std::vector<double> row;
      for (const auto& s : f) row.push_back(parse_finite(s, where(paths.attributes, lineno)));
      attr_rows.push_back(std::move(row));
    }
  }
  require(!attr_rows.empty(), paths.attributes.string() + ": no class rows");
  const std::size_t C = attr_rows.size();
  Matrix phi(static_cast<Eigen::Index>(C), static_cast<Eigen::Index>(A));
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t j = 0; j < A; ++j)
      phi(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(j)) = attr_rows[c][j];

  std::vector<std::string> class_names, attr_names;
  {
    auto in = open_in(paths.names);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      line = strip_cr(line);
      if (line.empty()) continue;
      if (line.rfind("class:", 0) == 0) {
        require(attr_names.empty(), where(paths.names, lineno) + "class entry after attr entries");
        class_names.push_back(line.substr(6));
      } else if (line.rfind("attr:", 0) == 0) {
        attr_names.push_back(line.substr(5));
      } else {
        throw ValidationError(where(paths.names, lineno) + "malformed row, expected class:/attr:");
      }
    }
  }
  require(class_names.size() == C, paths.names.string() + ": expected " + std::to_string(C) +
                                       " class names, got " + std::to_string(class_names.size()));
  require(attr_names.size() == A, paths.names.string() + ": expected " + std::to_string(A) +
                                      " attr names, got " + std::to_string(attr_names.size()));

  std::vector<Sample> samples;
  {
    auto in = open_in(paths.features);
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), where(paths.features, 1) + "empty file");
    auto header = split_fields(strip_cr(line));
    require(header.size() >= 2 && header.back() == "label",
            where(paths.features, 1) + "bad header, expected f0..f{d-1},label");
    const std::size_t d = header.size() - 1;
    expect_header(header, "f", d, where(paths.features, 1));
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      line = strip_cr(line);
      if (line.empty()) continue;
      auto f = split_fields(line);
      require(f.size() == d + 1, where(paths.features, lineno) + "dimension mismatch: expected " +
                                     std::to_string(d + 1) + " fields, got " +
                                     std::to_string(f.size()));
      Sample s;
      s.features.resize(static_cast<Eigen::Index>(d));
      for (std::size_t i = 0; i < d; ++i)
        s.features(static_cast<Eigen::Index>(i)) = parse_finite(f[i], where(paths.features, lineno));
      int label = -1;
      auto [ptr, ec] = std::from_chars(f[d].data(), f[d].data() + f[d].size(), label);
      require(ec == std::errc() && ptr == f[d].data() + f[d].size(),
              where(paths.features, lineno) + "malformed label '" + f[d] + "'");
      require(label >= 0 && static_cast<std::size_t>(label) < C,
              where(paths.features, lineno) + "unknown label " + std::to_string(label));
      s.label = label;
      samples.push_back(std::move(s));
    }
  }
  return Dataset(std::move(samples), std::move(phi), std::move(class_names), std::move(attr_names));
}

void save_dataset(const Dataset& dataset, const DatasetPaths& paths) {
  {
    auto out = open_out(paths.features);
    for (std::size_t i = 0; i < dataset.feature_dim(); ++i) out << 'f' << i << ',';
    out << "label\n";
    for (const auto& s : dataset.samples()) {
      for (Eigen::Index i = 0; i < s.features.size(); ++i) out << format_double(s.features(i)) << ',';
      out << s.label << '\n';
    }
    require(static_cast<bool>(out), "write failed: " + paths.features.string());
  }
  {
    auto out = open_out(paths.attributes);
    const auto& phi = dataset.class_attributes();
    for (Eigen::Index j = 0; j < phi.cols(); ++j) out << (j ? "," : "") << 'a' << j;
    out << '\n';
    for (Eigen::Index c = 0; c < phi.rows(); ++c) {
      for (Eigen::Index j = 0; j < phi.cols(); ++j) out << (j ? "," : "") << format_double(phi(c, j));
      out << '\n';
    }
    require(static_cast<bool>(out), "write failed: " + paths.attributes.string());
  }
  {
    auto out = open_out(paths.names);
    for (const auto& n : dataset.class_names()) out << "class:" << n << '\n';
    for (const auto& n : dataset.attribute_names()) out << "attr:" << n << '\n';
    require(static_cast<bool>(out), "write failed: " + paths.names.string());
  }
}

const char* to_string(SplitPart part) {
  switch (part) {
    case SplitPart::train: return "train";
    case SplitPart::val: return "val";
    case SplitPart::test: return "test";
  }
  return "?";
}

const std::vector<std::size_t>& SplitAssignment::part(SplitPart p) const {
  switch (p) {
    case SplitPart::train: return train;
    case SplitPart::val: return val;
    case SplitPart::test: return test;
  }
  return train;
}

SplitAssignment split(const Dataset& dataset, std::array<double, 3> ratios, std::uint64_t seed) {
  double total = 0.0;
  std::size_t parts = 0;
  for (double r : ratios) {
    require(std::isfinite(r) && r >= 0.0, "split ratios must be nonnegative");
    total += r;
    if (r > 0.0) ++parts;
  }
  require(std::abs(total - 1.0) <= 1e-9, "split ratios must sum to 1");
  require(ratios[0] > 0.0, "train ratio must be positive");

  std::vector<std::vector<std::size_t>> by_class(dataset.num_classes());
  for (std::size_t i = 0; i < dataset.size(); ++i)
    by_class[static_cast<std::size_t>(dataset.sample(i).label)].push_back(i);

  auto rng = substream(seed, "split");
  SplitAssignment out;
  out.seed = seed;
  std::array<std::vector<std::size_t>*, 3> dest{&out.train, &out.val, &out.test};
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& idx = by_class[c];
    require(idx.size() >= parts, "class " + dataset.class_names()[c] + " has " +
                                     std::to_string(idx.size()) + " samples, fewer than the " +
                                     std::to_string(parts) + " split parts");
    std::shuffle(idx.begin(), idx.end(), rng);

    // Largest-remainder apportionment; ties go to the earlier part.
    const double n = static_cast<double>(idx.size());
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> frac{};
    std::size_t assigned = 0;
    for (std::size_t p = 0; p < 3; ++p) {
      const double ideal = ratios[p] * n;
      counts[p] = static_cast<std::size_t>(std::floor(ideal + 1e-9));
      frac[p] = ideal - static_cast<double>(counts[p]);
      assigned += counts[p];
    }
    std::array<std::size_t, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
    for (std::size_t k = 0; assigned < idx.size(); k = (k + 1) % 3) {
      if (ratios[order[k]] > 0.0) {
        ++counts[order[k]];
        ++assigned;
      }
    }
    require(counts[0] > 0, "class " + dataset.class_names()[c] + " gets no training samples");

    std::size_t pos = 0;
    for (std::size_t p = 0; p < 3; ++p)
      for (std::size_t k = 0; k < counts[p]; ++k) dest[p]->push_back(idx[pos++]);
  }
  for (auto* d : dest) std::sort(d->begin(), d->end());
  return out;
}

double mean_feature_std(const Dataset& dataset, std::span<const std::size_t> indices) {
  require(indices.size() >= 2, "need at least 2 samples for a feature scale");
  const auto d = static_cast<Eigen::Index>(dataset.feature_dim());
  Vector mean = Vector::Zero(d);
  for (auto i : indices) mean += dataset.sample(i).features;
  mean /= static_cast<double>(indices.size());
  Vector var = Vector::Zero(d);
  for (auto i : indices) var += (dataset.sample(i).features - mean).array().square().matrix();
  var /= static_cast<double>(indices.size() - 1);
  return var.array().sqrt().mean();
}

}  // namespace attrx
