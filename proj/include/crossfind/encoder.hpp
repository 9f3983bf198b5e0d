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

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "crossfind/embedding.hpp"
#include "crossfind/transport.hpp"

namespace crossfind {

enum class EncoderKind { kRemote, kPrecomputed, kMock };

std::string_view to_string(EncoderKind kind);
EncoderKind parse_encoder_kind(std::string_view name);

/// Environment variable holding a bearer token for remote encoders.
inline constexpr const char* kEncoderTokenEnv = "CROSSFIND_ENCODER_TOKEN";

struct EncoderBackendConfig {
    EncoderKind kind = EncoderKind::kMock;
    std::string endpoint_url;                 // remote
    std::filesystem::path embedding_file;     // precomputed
    std::chrono::milliseconds timeout{10'000};
    int max_retries = 3;
    std::uint64_t mock_seed = 0;              // mock

    void validate() const;
    Json to_json() const;
    static EncoderBackendConfig from_json(const Json& j);
};

/// Frozen-tower embeddings behind one of three backends.
///
/// mock:        sha256(modality, seed, input) seeds a counter-based generator
///              that fills the vector, which is then scaled to unit norm.
/// precomputed: rows of an EmbeddingTable keyed by object id (or query id);
///              returned byte-for-byte.
/// remote:      POST {"inputs": ...} to endpoint_url, expecting a JSON array
///              of floats (a single nested row is accepted). Failures that
///              look transient are retried with 200 ms * 2^k backoff.
class EncoderGateway {
 public:
    explicit EncoderGateway(EncoderBackendConfig config, std::shared_ptr<HttpClient> http = nullptr,
                            std::shared_ptr<Clock> clock = nullptr);

    /// `id` keys the precomputed lookup; other backends ignore it. When empty
    /// the precomputed backend looks the text itself up.
    BaseTextEmbedding encode_text(std::string_view text, std::string_view id = {}) const;
    BaseImageEmbedding encode_image(std::string_view image_ref, std::string_view object_id) const;

    const EncoderBackendConfig& config() const { return config_; }
    /// Provenance string recorded in artifacts, e.g. "mock:seed=0".
    std::string backend_id() const;

 private:
    std::vector<float> run(std::string_view modality, std::string_view input, std::string_view id,
                           std::size_t dimension) const;
    std::vector<float> remote(std::string_view modality, std::string_view input, std::size_t dimension) const;

    EncoderBackendConfig config_;
    std::shared_ptr<HttpClient> http_;
    std::shared_ptr<Clock> clock_;
    std::shared_ptr<const EmbeddingTable> table_;
};

/// Deterministic unit vector for `input`; the mock backend's whole behaviour.
std::vector<float> mock_embedding(std::string_view modality, std::string_view input, std::size_t dimension,
                                  std::uint64_t seed);

BaseTextEmbedding encode_text(std::string_view text, const EncoderBackendConfig& backend);
BaseImageEmbedding encode_image(std::string_view image_ref, const EncoderBackendConfig& backend,
                                std::string_view object_id = {});

}  // namespace crossfind
