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

#include "crossfind/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <vector>

#include "crossfind/error.hpp"
#include "crossfind/rng.hpp"

namespace crossfind {

std::string synthetic_id(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "obj-%05zu", i);
    return buf;
}

SyntheticCorpus make_synthetic_corpus(const SyntheticOptions& options) {
    require(options.count >= 1, ErrorKind::kInvalidArgument, "synthetic corpus needs at least one object");
    Rng rng(options.seed);

    const std::size_t di = options.image_dim;
    const std::size_t dt = options.text_dim;
    std::vector<double> mix(dt * di);
    const double scale = 1.0 / std::sqrt(static_cast<double>(di));
    for (auto& a : mix) {
        a = rng.normal() * scale;
    }

    CaptureManifest manifest;
    manifest.dataset_name = "synthetic";
    manifest.source_note = "generated: text = A * image + N(0, sigma^2)";
    SyntheticCorpus corpus{DatasetCatalog(), EmbeddingTable(di), EmbeddingTable(dt)};
    std::vector<Description> descriptions;

    std::vector<float> image(di);
    std::vector<float> text(dt);
    for (std::size_t n = 0; n < options.count; ++n) {
        const std::string id = synthetic_id(n);
        for (auto& x : image) {
            x = static_cast<float>(rng.normal());
        }
        for (std::size_t r = 0; r < dt; ++r) {
            double acc = 0.0;
            for (std::size_t c = 0; c < di; ++c) {
                acc += mix[r * di + c] * image[c];
            }
            text[r] = static_cast<float>(acc + options.noise_sigma * rng.normal());
        }
        corpus.images.add(id, image);
        corpus.texts.add(id, text);
        manifest.records.push_back({id, "images/" + id + ".png", "models/" + id + ".obj", options.category, std::nullopt});

        Description d;
        d.object_id = id;
        d.kind = PromptKind::kTemplate;
        d.text = "synthetic " + options.category + " " + id;
        d.token_count = 3;
        d.backend_id = "synthetic";
        d.created_at = "1970-01-01T00:00:00Z";
        descriptions.push_back(std::move(d));
    }
    corpus.catalog = DatasetCatalog(std::move(manifest)).with_descriptions(std::move(descriptions));
    return corpus;
}

}  // namespace crossfind
