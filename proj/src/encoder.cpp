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

#include "crossfind/encoder.hpp"

#include <cmath>
#include <cstdlib>

#include "crossfind/error.hpp"
#include "crossfind/rng.hpp"

namespace crossfind {

std::string_view to_string(EncoderKind kind) {
    switch (kind) {
        case EncoderKind::kRemote:
            return "remote";
        case EncoderKind::kPrecomputed:
            return "precomputed";
        case EncoderKind::kMock:
            return "mock";
    }
    return "mock";
}

EncoderKind parse_encoder_kind(std::string_view name) {
    if (name == "remote") return EncoderKind::kRemote;
    if (name == "precomputed") return EncoderKind::kPrecomputed;
    if (name == "mock") return EncoderKind::kMock;
    fail(ErrorKind::kInvalidArgument, "unknown encoder backend '" + std::string(name) + "'");
}

void EncoderBackendConfig::validate() const {
    require(timeout.count() > 0, ErrorKind::kInvalidArgument, "encoder timeout must be positive");
    require(max_retries >= 0, ErrorKind::kInvalidArgument, "encoder max_retries must be non-negative");
    if (kind == EncoderKind::kRemote) {
        require(!endpoint_url.empty(), ErrorKind::kInvalidArgument, "remote encoder needs endpoint_url");
    }
    if (kind == EncoderKind::kPrecomputed) {
        require(!embedding_file.empty(), ErrorKind::kInvalidArgument, "precomputed encoder needs embedding_file");
    }
}

Json EncoderBackendConfig::to_json() const {
    return {{"kind", to_string(kind)},
            {"endpoint_url", endpoint_url},
            {"embedding_file", embedding_file.string()},
            {"timeout_ms", timeout.count()},
            {"max_retries", max_retries},
            {"mock_seed", mock_seed}};
}

EncoderBackendConfig EncoderBackendConfig::from_json(const Json& j) {
    EncoderBackendConfig c;
    c.kind = parse_encoder_kind(j.value("kind", "mock"));
    c.endpoint_url = j.value("endpoint_url", "");
    c.embedding_file = j.value("embedding_file", "");
    c.timeout = std::chrono::milliseconds(j.value("timeout_ms", std::int64_t{10'000}));
    c.max_retries = j.value("max_retries", 3);
    c.mock_seed = j.value("mock_seed", std::uint64_t{0});
    return c;
}

std::vector<float> mock_embedding(std::string_view modality, std::string_view input, std::size_t dimension,
                                  std::uint64_t seed) {
    std::string keyed;
    keyed.reserve(modality.size() + input.size() + 24);
    keyed.append(modality).push_back('\0');
    keyed.append(std::to_string(seed)).push_back('\0');
    keyed.append(input);
    const std::string digest = sha256_hex(keyed);
    const std::uint64_t stream = std::stoull(digest.substr(0, 16), nullptr, 16);

    std::vector<double> raw(dimension);
    double norm2 = 0.0;
    for (std::size_t i = 0; i < dimension; ++i) {
        raw[i] = 2.0 * counter_uniform(stream, i) - 1.0;
        norm2 += raw[i] * raw[i];
    }
    const double inv = 1.0 / std::sqrt(norm2);
    std::vector<float> out(dimension);
    for (std::size_t i = 0; i < dimension; ++i) {
        out[i] = static_cast<float>(raw[i] * inv);
    }
    return out;
}

EncoderGateway::EncoderGateway(EncoderBackendConfig config, std::shared_ptr<HttpClient> http,
                               std::shared_ptr<Clock> clock)
    : config_(std::move(config)), http_(std::move(http)), clock_(std::move(clock)) {
    config_.validate();
    if (!clock_) {
        clock_ = system_clock();
    }
    if (config_.kind == EncoderKind::kRemote && !http_) {
        http_ = make_http_client();
    }
    if (config_.kind == EncoderKind::kPrecomputed) {
        table_ = std::make_shared<const EmbeddingTable>(EmbeddingTable::load(config_.embedding_file));
    }
}

std::string EncoderGateway::backend_id() const {
    switch (config_.kind) {
        case EncoderKind::kMock:
            return "mock:seed=" + std::to_string(config_.mock_seed);
        case EncoderKind::kPrecomputed:
            return "precomputed:" + config_.embedding_file.filename().string();
        case EncoderKind::kRemote:
            return "remote:" + config_.endpoint_url;
    }
    return "unknown";
}

BaseTextEmbedding EncoderGateway::encode_text(std::string_view text, std::string_view id) const {
    require(!text.empty(), ErrorKind::kInvalidArgument, "cannot encode empty text");
    return {std::string(id), run("text", text, id.empty() ? text : id, kTextDim)};
}

BaseImageEmbedding EncoderGateway::encode_image(std::string_view image_ref, std::string_view object_id) const {
    require(!image_ref.empty(), ErrorKind::kInvalidArgument, "cannot encode empty image_ref");
    return {std::string(object_id), run("image", image_ref, object_id.empty() ? image_ref : object_id, kImageDim)};
}

std::vector<float> EncoderGateway::run(std::string_view modality, std::string_view input, std::string_view id,
                                       std::size_t dimension) const {
    std::vector<float> v;
    switch (config_.kind) {
        case EncoderKind::kMock:
            v = mock_embedding(modality, input, dimension, config_.mock_seed);
            break;
        case EncoderKind::kPrecomputed: {
            require(table_->dimension() == dimension, ErrorKind::kBackend,
                    "precomputed file " + config_.embedding_file.string() + " holds " +
                        std::to_string(table_->dimension()) + "-d vectors, " + std::string(modality) + " needs " +
                        std::to_string(dimension));
            auto row = table_->at(id);
            v.assign(row.begin(), row.end());
            break;
        }
        case EncoderKind::kRemote:
            v = remote(modality, input, dimension);
            break;
    }
    require(all_finite(v), ErrorKind::kBackend, "encoder returned non-finite components");
    return v;
}

std::vector<float> EncoderGateway::remote(std::string_view modality, std::string_view input,
                                          std::size_t dimension) const {
    Json body;
    const bool is_url = input.starts_with("http://") || input.starts_with("https://");
    if (modality == "image" && !is_url) {
        body["inputs"] = base64_encode(read_file(std::string(input)));
    } else {
        body["inputs"] = std::string(input);
    }
    const std::string payload = body.dump();

    Headers headers = {{"Accept", "application/json"}};
    if (const char* token = std::getenv(kEncoderTokenEnv); token != nullptr && *token != '\0') {
        headers.emplace_back("Authorization", std::string("Bearer ") + token);
    }

    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            clock_->sleep_for(backoff_delay(attempt));
        }
        const HttpResponse res = http_->post(config_.endpoint_url, payload, headers, config_.timeout);
        if (!res.ok()) {
            last_error = res.transport_error ? *res.transport_error : "HTTP " + std::to_string(res.status);
            if (res.retryable()) {
                continue;
            }
            fail(ErrorKind::kBackend, "encoder endpoint rejected request: " + last_error);
        }
        Json parsed;
        try {
            parsed = Json::parse(res.body);
        } catch (const Json::parse_error&) {
            fail(ErrorKind::kBackend, "encoder endpoint returned non-JSON body");
        }
        if (parsed.is_array() && parsed.size() == 1 && parsed[0].is_array()) {
            parsed = parsed[0];
        }
        require(parsed.is_array(), ErrorKind::kBackend, "encoder endpoint did not return an array of floats");
        require(parsed.size() == dimension, ErrorKind::kBackend,
                "dimension mismatch from encoder endpoint: got " + std::to_string(parsed.size()) + ", expected " +
                    std::to_string(dimension) + " for " + std::string(modality));
        std::vector<float> v;
        v.reserve(dimension);
        for (const auto& x : parsed) {
            require(x.is_number(), ErrorKind::kBackend, "encoder endpoint returned a non-numeric component");
            v.push_back(x.get<float>());
        }
        return v;
    }
    fail(ErrorKind::kBackend, "encoder endpoint failed after " + std::to_string(config_.max_retries + 1) +
                                  " attempts: " + last_error);
}

BaseTextEmbedding encode_text(std::string_view text, const EncoderBackendConfig& backend) {
    return EncoderGateway(backend).encode_text(text);
}

BaseImageEmbedding encode_image(std::string_view image_ref, const EncoderBackendConfig& backend,
                                std::string_view object_id) {
    return EncoderGateway(backend).encode_image(image_ref, object_id);
}

}  // namespace crossfind
