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
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crossfind/catalog.hpp"
#include "crossfind/transport.hpp"

namespace crossfind {

/// Hard input limit of the downstream text encoder, in its own tokens.
inline constexpr std::int64_t kDefaultDescriptionTokens = 77;

struct PromptTemplate {
    PromptKind kind = PromptKind::kTemplate;
    /// May contain the slot "{category}", filled from the object record.
    std::string body;
    std::int64_t max_description_tokens = kDefaultDescriptionTokens;

    void validate() const;
};

/// design_purpose, structure and template prompts, in that order.
std::vector<PromptTemplate> builtin_templates();
PromptTemplate builtin_template(PromptKind kind);

std::string render_prompt(const PromptTemplate& tmpl, const ObjectRecord& record);

/// Pluggable tokenization rule. `limit_for` converts the encoder's token
/// budget into a cap expressed in this counter's units.
class TokenCounter {
 public:
    virtual ~TokenCounter() = default;
    virtual std::int64_t count(std::string_view text) const = 0;
    virtual std::int64_t limit_for(std::int64_t max_tokens) const = 0;
    virtual std::string name() const = 0;
};

/// Counts whitespace-delimited words. Words run longer than encoder tokens,
/// so the budget is scaled by `margin` (77 tokens -> 60 words by default).
class WhitespaceTokenCounter final : public TokenCounter {
 public:
    explicit WhitespaceTokenCounter(double margin = 60.0 / 77.0) : margin_(margin) {}

    std::int64_t count(std::string_view text) const override;
    std::int64_t limit_for(std::int64_t max_tokens) const override;
    std::string name() const override { return "whitespace"; }

 private:
    double margin_;
};

/// Whitespace word count.
std::int64_t count_tokens(std::string_view text);

/// Longest prefix of whole sentences whose count fits `limit`; nullopt when
/// even the first sentence is too long.
std::optional<std::string> truncate_to_sentences(std::string_view text, std::int64_t limit,
                                                 const TokenCounter& counter);

/// Appended to the prompt when a response must be re-requested.
std::string brevity_instruction(std::int64_t word_limit);

enum class VlmKind { kRemote, kMock };

inline constexpr const char* kVlmTokenEnv = "CROSSFIND_VLM_TOKEN";

struct VlmBackendConfig {
    VlmKind kind = VlmKind::kMock;
    std::string endpoint_url;
    double rate_limit = 60.0;  // requests per minute
    int max_retries = 3;
    std::chrono::milliseconds timeout{60'000};

    void validate() const;
    Json to_json() const;
    static VlmBackendConfig from_json(const Json& j);
};

/// A vision-language model that answers a prompt about one object image.
class VlmBackend {
 public:
    virtual ~VlmBackend() = default;
    virtual std::string generate(const ObjectRecord& record, std::string_view prompt) = 0;
    virtual std::string id() const = 0;
};

/// Deterministic captions assembled from hashed attribute choices. Honors
/// the brevity instruction by answering with two sentences instead of four.
class MockVlm final : public VlmBackend {
 public:
    std::string generate(const ObjectRecord& record, std::string_view prompt) override;
    std::string id() const override { return "mock-vlm"; }
};

/// POST {"prompt": ..., "image_url"|"image_base64": ...}; reads the "text"
/// field of the JSON reply. Retries transient failures with backoff.
class RemoteVlm final : public VlmBackend {
 public:
    RemoteVlm(VlmBackendConfig config, std::shared_ptr<HttpClient> http, std::shared_ptr<Clock> clock);
    std::string generate(const ObjectRecord& record, std::string_view prompt) override;
    std::string id() const override { return "remote:" + config_.endpoint_url; }

 private:
    VlmBackendConfig config_;
    std::shared_ptr<HttpClient> http_;
    std::shared_ptr<Clock> clock_;
};

std::unique_ptr<VlmBackend> make_vlm_backend(const VlmBackendConfig& config, std::shared_ptr<HttpClient> http = nullptr,
                                             std::shared_ptr<Clock> clock = nullptr);

struct LabelOptions {
    std::shared_ptr<const TokenCounter> counter;  // whitespace rule when null
    std::shared_ptr<Clock> clock;                 // system clock when null
};

/// One labeled description under the template's budget. Over-budget replies
/// are cut at the last sentence boundary that fits; if none fits, the
/// request is repeated once with a brevity instruction.
Description request_description(const ObjectRecord& record, const PromptTemplate& tmpl, VlmBackend& backend,
                                const LabelOptions& options = {});

struct LabelFailure {
    std::string object_id;
    std::string message;
};

struct BatchLabelResult {
    DatasetCatalog catalog;
    std::size_t labeled = 0;
    std::size_t skipped = 0;
    std::size_t backend_calls = 0;
    std::vector<LabelFailure> failures;
};

/// Labels every record lacking a description of the template's kind. Backend
/// calls are spaced at least 60 / rate_limit seconds apart on `options.clock`;
/// individual failures are collected and the run continues.
BatchLabelResult batch_label(const DatasetCatalog& catalog, const PromptTemplate& tmpl, VlmBackend& backend,
                             double rate_limit, const LabelOptions& options = {});

}  // namespace crossfind
