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

// Model files are self-describing:
//
//   attrx-model 1
//   kind <sje|general|map-identity|map-tanh>
//   meta <key> <value>          (zero or more)
//   tensor <name> <rows> <cols>
//   <rows*cols little-endian IEEE-754 doubles, row-major>
//   ...
//   end
//
// Every header line ends in '\n'; tensor payloads follow their header line
// directly and are followed by '\n'.

#include <filesystem>

#include "attrx/data.hpp"
#include "attrx/embed.hpp"

namespace attrx {

void save_model(const EmbeddingModel& model, const std::filesystem::path& path);
void save_model(const GeneralClassifier& clf, const std::filesystem::path& path);
void save_map(const DifferentiableMap& map, const std::filesystem::path& path);

EmbeddingModel load_embedding_model(const std::filesystem::path& path);
GeneralClassifier load_general_classifier(const std::filesystem::path& path);
DifferentiableMap load_map(const std::filesystem::path& path);

// Shape checks against the dataset and map a model will be used with.
void validate_against(const EmbeddingModel& model, const DifferentiableMap& map,
                      const Dataset& dataset);
void validate_against(const GeneralClassifier& clf, const DifferentiableMap& map,
                      const Dataset& dataset);

}  // namespace attrx
