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

#include "attrx/model_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "attrx/error.hpp"

namespace attrx {

namespace {

constexpr const char* kMagic = "attrx-model 1";

std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return r;
  }
  return v;
}

struct ModelFile {
  std::string kind;
  std::map<std::string, std::string> meta;
  std::map<std::string, Matrix> tensors;
};

void write_file(const ModelFile& f, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), "cannot write " + path.string());
  out << kMagic << '\n' << "kind " << f.kind << '\n';
  for (const auto& [k, v] : f.meta) out << "meta " << k << ' ' << v << '\n';
  for (const auto& [name, m] : f.tensors) {
    out << "tensor " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        const std::uint64_t bits = to_le(std::bit_cast<std::uint64_t>(m(i, j)));
        out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
      }
    out << '\n';
  }
  out << "end\n";
  require(static_cast<bool>(out), "write failed: " + path.string());
}

ModelFile read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), "cannot open " + path.string());
  const std::string ctx = path.string() + ": ";
  std::string line;
  require(std::getline(in, line) && line == kMagic, ctx + "not an attrx model file");
  ModelFile f;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "end") {
      require(!f.kind.empty(), ctx + "missing kind");
      return f;
    }
    if (tag == "kind") {
      ss >> f.kind;
    } else if (tag == "meta") {
      std::string k, v;
      ss >> k >> v;
      require(!k.empty() && !v.empty(), ctx + "malformed meta line");
      f.meta[k] = v;
    } else if (tag == "tensor") {
      std::string name;
      long long rows = -1, cols = -1;
      ss >> name >> rows >> cols;
      require(!name.empty() && rows >= 0 && cols >= 0 && rows * cols < (1LL << 32),
              ctx + "malformed tensor header");
      Matrix m(rows, cols);
      for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
          std::uint64_t bits = 0;
          in.read(reinterpret_cast<char*>(&bits), sizeof bits);
          require(static_cast<bool>(in), ctx + "truncated tensor '" + name + "'");
          m(i, j) = std::bit_cast<double>(to_le(bits));
        }
      require(in.get() == '\n', ctx + "missing newline after tensor '" + name + "'");
      require(m.allFinite(), ctx + "tensor '" + name + "' has non-finite values");
      f.tensors[name] = std::move(m);
    } else {
      throw ValidationError(ctx + "unexpected line '" + line + "'");
    }
  }
  throw ValidationError(ctx + "missing end marker");
}

const Matrix& tensor(const ModelFile& f, const std::string& name, const std::string& ctx) {
  auto it = f.tensors.find(name);
  require(it != f.tensors.end(), ctx + "missing tensor '" + name + "'");
  return it->second;
}

void expect_kind(const ModelFile& f, const std::string& kind, const std::filesystem::path& p) {
  require(f.kind == kind, p.string() + ": expected kind '" + kind + "', found '" + f.kind + "'");
}

}  // namespace

void save_model(const EmbeddingModel& model, const std::filesystem::path& path) {
  ModelFile f;
  f.kind = "sje";
  f.meta["normalize_class_attributes"] = model.normalize_class_attributes ? "1" : "0";
  f.meta["prediction_rule"] = to_string(model.prediction_rule);
  f.tensors["W"] = model.weights;
  write_file(f, path);
}

void save_model(const GeneralClassifier& clf, const std::filesystem::path& path) {
  ModelFile f;
  f.kind = "general";
  f.tensors["V"] = clf.weights;
  f.tensors["bias"] = clf.bias.transpose();
  write_file(f, path);
}

void save_map(const DifferentiableMap& map, const std::filesystem::path& path) {
  ModelFile f;
  if (map.kind() == DifferentiableMap::Kind::identity) {
    f.kind = "map-identity";
    f.meta["dim"] = std::to_string(map.input_dim());
  } else {
    f.kind = "map-tanh";
    f.tensors["W1"] = map.w1();
    f.tensors["b1"] = map.b1().transpose();
    f.tensors["W2"] = map.w2();
  }
  write_file(f, path);
}

EmbeddingModel load_embedding_model(const std::filesystem::path& path) {
  const auto f = read_file(path);
  expect_kind(f, "sje", path);
  const std::string ctx = path.string() + ": ";
  EmbeddingModel m;
  m.weights = tensor(f, "W", ctx);
  auto norm = f.meta.find("normalize_class_attributes");
  require(norm != f.meta.end() && (norm->second == "0" || norm->second == "1"),
          ctx + "missing normalize_class_attributes");
  m.normalize_class_attributes = norm->second == "1";
  auto rule = f.meta.find("prediction_rule");
  require(rule != f.meta.end(), ctx + "missing prediction_rule");
  m.prediction_rule = parse_prediction_rule(rule->second);
  return m;
}

GeneralClassifier load_general_classifier(const std::filesystem::path& path) {
  const auto f = read_file(path);
  expect_kind(f, "general", path);
  const std::string ctx = path.string() + ": ";
  GeneralClassifier c;
  c.weights = tensor(f, "V", ctx);
  const Matrix& b = tensor(f, "bias", ctx);
  require(b.rows() == 1 && b.cols() == c.weights.cols(), ctx + "bias shape mismatch");
  c.bias = b.row(0).transpose();
  return c;
}

DifferentiableMap load_map(const std::filesystem::path& path) {
  const auto f = read_file(path);
  const std::string ctx = path.string() + ": ";
  if (f.kind == "map-identity") {
    auto it = f.meta.find("dim");
    require(it != f.meta.end(), ctx + "missing dim");
    return DifferentiableMap::identity(static_cast<std::size_t>(std::stoull(it->second)));
  }
  require(f.kind == "map-tanh", ctx + "not a map file");
  const Matrix& b1 = tensor(f, "b1", ctx);
  require(b1.rows() == 1, ctx + "b1 shape mismatch");
  return DifferentiableMap::tanh_hidden(tensor(f, "W1", ctx), b1.row(0).transpose(),
                                        tensor(f, "W2", ctx));
}

void validate_against(const EmbeddingModel& model, const DifferentiableMap& map,
                      const Dataset& dataset) {
  require(map.input_dim() == dataset.feature_dim(), "map input dimension does not match dataset");
  require(static_cast<std::size_t>(model.weights.rows()) == map.output_dim() &&
              static_cast<std::size_t>(model.weights.cols()) == dataset.num_attributes(),
          "embedding model shape does not match dataset");
}

void validate_against(const GeneralClassifier& clf, const DifferentiableMap& map,
                      const Dataset& dataset) {
  require(map.input_dim() == dataset.feature_dim(), "map input dimension does not match dataset");
  require(static_cast<std::size_t>(clf.weights.rows()) == map.output_dim() &&
              static_cast<std::size_t>(clf.weights.cols()) == dataset.num_classes(),
          "general classifier shape does not match dataset");
}

}  // namespace attrx
