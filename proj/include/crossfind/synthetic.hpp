// Copyright (C) 2026 The crossfind Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except in compliance
// with the License. You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License
// is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
// or implied. See the License for the specific language governing permissions and limitations under the License.

#pragma once

#include <cstdint>
#include <string>

#include "crossfind/catalog.hpp"
#include "crossfind/embedding.hpp"

namespace crossfind {

struct SyntheticOptions {
    std::size_t count = 200;
    /// Standard deviation of the Gaussian noise added to each text component.
    double noise_sigma = 0.05;
    std::uint64_t seed = 0;
    std::size_t image_dim = kImageDim;
    std::size_t text_dim = kTextDim;
    std::string category = "chair";
};

/// Labeled catalog plus base embeddings where each image base is i.i.d.
/// N(0, 1) and its text base is A * image + noise for one fixed random A
/// (entries N(0, 1/image_dim)). No splits are assigned.
struct SyntheticCorpus {
    DatasetCatalog catalog;
    EmbeddingTable images;
    EmbeddingTable texts;
};

SyntheticCorpus make_synthetic_corpus(const SyntheticOptions& options = {});

/// Zero-padded id, e.g. synthetic_id(7) == "obj-00007".
std::string synthetic_id(std::size_t i);

}  // namespace crossfind
