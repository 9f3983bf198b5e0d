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

#include "crossfind/labeler.hpp"

#include <array>
#include <cmath>
#include <cstdlib>

#include "crossfind/error.hpp"
#include "crossfind/rng.hpp"

namespace crossfind {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

constexpr std::string_view kBrevityMarker = "Answer in at most";

}  // namespace

// --- templates --------------------------------------------------------------

void PromptTemplate::validate() const {
    require(!body.empty(), ErrorKind::kInvalidArgument, "prompt template body is empty");
    require(max_description_tokens > 0, ErrorKind::kInvalidArgument, "max_description_tokens must be positive");
}

PromptTemplate builtin_template(PromptKind kind) {
    switch (kind) {
        case PromptKind::kDesignPurpose:
            // Editable reconstruction: purpose, use case and intended user first.
            return {kind,
                    "Please describe the provided {category} within 5 sentences. What is the intended PURPOSE of "
                    "this design, in which USE CASE would it be used, and which type of USER is it most suited "
                    "for? Mention the design decisions that serve that purpose. The texture, material, shadowing "
                    "and color are not important.",
                    kDefaultDescriptionTokens};
        case PromptKind::kStructure:
            return {kind,
                    "Please describe the provided object within 5 sentences. Please focus on the SHAPE, "
                    "PROPORTION, and UNIQUENESS of the object.",
                    kDefaultDescriptionTokens};
        case PromptKind::kTemplate:
            // Editable reconstruction: compressed form covering purpose and structure.
            return {kind,
                    "Describe the provided {category} by filling in this template, using at most 3 short "
                    "sentences: \"A <style> {category} for <intended purpose and user>. It has <SHAPE of the "
                    "seat, back, arms and legs> with <PROPORTION>. Its most UNIQUE feature is <feature>.\" The "
                    "texture, material, shadowing and color are not important.",
                    kDefaultDescriptionTokens};
    }
    fail(ErrorKind::kInvalidArgument, "unknown prompt kind");
}

std::vector<PromptTemplate> builtin_templates() {
    return {builtin_template(PromptKind::kDesignPurpose), builtin_template(PromptKind::kStructure),
            builtin_template(PromptKind::kTemplate)};
}

std::string render_prompt(const PromptTemplate& tmpl, const ObjectRecord& record) {
    const std::string category = record.category.empty() ? "object" : record.category;
    std::string out;
    out.reserve(tmpl.body.size());
    constexpr std::string_view kSlot = "{category}";
    std::size_t pos = 0;
    while (true) {
        const auto at = tmpl.body.find(kSlot, pos);
        if (at == std::string::npos) {
            out.append(tmpl.body, pos);
            break;
        }
        out.append(tmpl.body, pos, at - pos);
        out += category;
        pos = at + kSlot.size();
    }
    return out;
}

// --- token counting ---------------------------------------------------------

std::int64_t count_tokens(std::string_view text) {
    std::int64_t n = 0;
    bool in_word = false;
    for (char c : text) {
        if (is_space(c)) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++n;
        }
    }
    return n;
}

std::int64_t WhitespaceTokenCounter::count(std::string_view text) const { return count_tokens(text); }

std::int64_t WhitespaceTokenCounter::limit_for(std::int64_t max_tokens) const {
    return static_cast<std::int64_t>(std::floor(static_cast<double>(max_tokens) * margin_ + 1e-9));
}

std::optional<std::string> truncate_to_sentences(std::string_view text, std::int64_t limit,
                                                 const TokenCounter& counter) {
    std::optional<std::string> best;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c != '.' && c != '!' && c != '?') {
            continue;
        }
        const bool boundary = i + 1 == text.size() || is_space(text[i + 1]);
        if (!boundary) {
            continue;
        }
        std::string candidate = trim(text.substr(0, i + 1));
        if (counter.count(candidate) > limit) {
            break;
        }
        best = std::move(candidate);
    }
    return best;
}

std::string brevity_instruction(std::int64_t word_limit) {
    return std::string(kBrevityMarker) + " " + std::to_string(word_limit) + " words, in complete sentences.";
}

// --- backends ---------------------------------------------------------------

void VlmBackendConfig::validate() const {
    require(rate_limit > 0.0, ErrorKind::kInvalidArgument, "rate_limit must be positive");
    require(max_retries >= 0, ErrorKind::kInvalidArgument, "max_retries must be non-negative");
    if (kind == VlmKind::kRemote) {
        require(!endpoint_url.empty(), ErrorKind::kInvalidArgument, "remote VLM backend needs endpoint_url");
    }
}

Json VlmBackendConfig::to_json() const {
    return {{"kind", kind == VlmKind::kMock ? "mock" : "remote"},
            {"endpoint_url", endpoint_url},
            {"rate_limit", rate_limit},
            {"max_retries", max_retries},
            {"timeout_ms", timeout.count()}};
}

VlmBackendConfig VlmBackendConfig::from_json(const Json& j) {
    VlmBackendConfig c;
    const std::string kind = j.value("kind", "mock");
    if (kind == "mock") {
        c.kind = VlmKind::kMock;
    } else if (kind == "remote") {
        c.kind = VlmKind::kRemote;
    } else {
        fail(ErrorKind::kInvalidArgument, "unknown VLM backend '" + kind + "'");
    }
    c.endpoint_url = j.value("endpoint_url", "");
    c.rate_limit = j.value("rate_limit", 60.0);
    c.max_retries = j.value("max_retries", 3);
    c.timeout = std::chrono::milliseconds(j.value("timeout_ms", std::int64_t{60'000}));
    return c;
}

std::string MockVlm::generate(const ObjectRecord& record, std::string_view prompt) {
    static constexpr std::array kStyle = {"modern",   "minimalist", "Nordic-style", "industrial", "classic",
                                          "rustic",   "ergonomic",  "mid-century",  "futuristic", "baroque",
                                          "Bauhaus",  "Shaker-style"};
    static constexpr std::array kUse = {"office work",         "reading",           "dining",
                                        "outdoor lounging",    "gaming sessions",   "waiting rooms",
                                        "bar counters",        "children's rooms",  "conference halls",
                                        "long writing hours"};
    static constexpr std::array kLegs = {"four straight legs",     "four splayed legs",  "a five-star wheeled base",
                                         "a cantilever frame",     "a sled base",        "a single pedestal",
                                         "crossed X-shaped legs",  "tapered wooden legs"};
    static constexpr std::array kBack = {"tall slatted", "curved", "low", "ladder-style",
                                         "mesh",         "padded", "spindle", "shell-shaped"};
    static constexpr std::array kSeat = {"square", "round", "contoured", "wide", "thin", "deeply padded"};
    static constexpr std::array kProportion = {"slender and tall", "low and wide",   "compact",
                                               "bulky",            "well balanced", "top-heavy"};
    static constexpr std::array kArms = {"absent", "short", "wide and flat", "curved", "integrated into the back",
                                         "adjustable"};
    static constexpr std::array kUnique = {"a swivel mechanism",        "a folding hinge",
                                           "a built-in footrest",        "a rocking base",
                                           "a headrest cushion",         "an open lattice back",
                                           "stackable geometry",         "a height adjustment lever",
                                           "a woven seat pattern",       "a wing-shaped back"};

    const std::string category = record.category.empty() ? "object" : record.category;
    const std::string digest = sha256_hex(record.image_ref + "\n" + std::string(prompt));
    const std::uint64_t stream = std::stoull(digest.substr(0, 16), nullptr, 16);
    std::uint64_t counter = 0;
    auto pick = [&](const auto& options) -> std::string {
        const auto r = splitmix64(stream ^ splitmix64(counter++));
        return options[r % options.size()];
    };
    const auto height = 38 + static_cast<int>(splitmix64(stream ^ 0xabcdefULL) % 30);

    std::string text = "A " + pick(kStyle) + " " + category + " made for " + pick(kUse) + ". It stands on " +
                       pick(kLegs) + " with a " + pick(kBack) + " backrest and a " + pick(kSeat) + " seat.";
    if (prompt.find(kBrevityMarker) != std::string_view::npos) {
        return text;
    }
    text += " The proportions are " + pick(kProportion) + ", the seat sits " + std::to_string(height) +
            " cm high and the armrests are " + pick(kArms) + ". Its most unique feature is " + pick(kUnique) + ".";
    return text;
}

RemoteVlm::RemoteVlm(VlmBackendConfig config, std::shared_ptr<HttpClient> http, std::shared_ptr<Clock> clock)
    : config_(std::move(config)), http_(std::move(http)), clock_(std::move(clock)) {
    config_.validate();
    if (!http_) {
        http_ = make_http_client();
    }
    if (!clock_) {
        clock_ = system_clock();
    }
}

std::string RemoteVlm::generate(const ObjectRecord& record, std::string_view prompt) {
    Json body = {{"prompt", std::string(prompt)}};
    const std::string& ref = record.image_ref;
    if (ref.starts_with("http://") || ref.starts_with("https://")) {
        body["image_url"] = ref;
    } else {
        body["image_base64"] = base64_encode(read_file(ref));
    }
    const std::string payload = body.dump();
    Headers headers = {{"Accept", "application/json"}};
    if (const char* token = std::getenv(kVlmTokenEnv); token != nullptr && *token != '\0') {
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
            fail(ErrorKind::kBackend, "VLM endpoint rejected request for '" + record.object_id + "': " + last_error);
        }
        try {
            const Json reply = Json::parse(res.body);
            return reply.at("text").get<std::string>();
        } catch (const Json::exception&) {
            fail(ErrorKind::kBackend, "VLM endpoint reply lacks a string field \"text\"");
        }
    }
    fail(ErrorKind::kBackend, "VLM endpoint failed for '" + record.object_id + "' after " +
                                  std::to_string(config_.max_retries + 1) + " attempts: " + last_error);
}

std::unique_ptr<VlmBackend> make_vlm_backend(const VlmBackendConfig& config, std::shared_ptr<HttpClient> http,
                                             std::shared_ptr<Clock> clock) {
    config.validate();
    if (config.kind == VlmKind::kMock) {
        return std::make_unique<MockVlm>();
    }
    return std::make_unique<RemoteVlm>(config, std::move(http), std::move(clock));
}

// --- labeling ---------------------------------------------------------------

namespace {

const TokenCounter& counter_or_default(const LabelOptions& options) {
    static const WhitespaceTokenCounter kDefault;
    return options.counter ? *options.counter : kDefault;
}

/// Spaces successive generate() calls at least `interval` apart.
class PacedBackend final : public VlmBackend {
 public:
    PacedBackend(VlmBackend& inner, Clock& clock, std::chrono::nanoseconds interval)
        : inner_(inner), clock_(clock), interval_(interval) {}

    std::string generate(const ObjectRecord& record, std::string_view prompt) override {
        if (calls_ > 0) {
            const auto now = clock_.now();
            if (now < next_allowed_) {
                clock_.sleep_for(next_allowed_ - now);
            }
        }
        next_allowed_ = clock_.now() + interval_;
        ++calls_;
        return inner_.generate(record, prompt);
    }
    std::string id() const override { return inner_.id(); }
    std::size_t calls() const { return calls_; }

 private:
    VlmBackend& inner_;
    Clock& clock_;
    std::chrono::nanoseconds interval_;
    std::chrono::nanoseconds next_allowed_{0};
    std::size_t calls_ = 0;
};

}  // namespace

Description request_description(const ObjectRecord& record, const PromptTemplate& tmpl, VlmBackend& backend,
                                const LabelOptions& options) {
    tmpl.validate();
    require(!record.image_ref.empty(), ErrorKind::kInvalidArgument, "record '" + record.object_id + "' has no image");
    const TokenCounter& counter = counter_or_default(options);
    const auto clock = options.clock ? options.clock : system_clock();
    const std::int64_t limit = counter.limit_for(tmpl.max_description_tokens);
    const std::string prompt = render_prompt(tmpl, record);

    auto finish = [&](std::string text, BudgetAction action) {
        Description d;
        d.object_id = record.object_id;
        d.kind = tmpl.kind;
        d.token_count = counter.count(text);
        d.text = std::move(text);
        d.backend_id = backend.id();
        d.created_at = iso8601_utc(clock->now());
        d.budget_action = action;
        return d;
    };

    std::string raw = trim(backend.generate(record, prompt));
    require(!raw.empty(), ErrorKind::kBackend, "empty description from backend for '" + record.object_id + "'");
    if (counter.count(raw) <= limit) {
        return finish(std::move(raw), BudgetAction::kNone);
    }
    if (auto cut = truncate_to_sentences(raw, limit, counter)) {
        return finish(std::move(*cut), BudgetAction::kTruncated);
    }

    std::string retry = trim(backend.generate(record, prompt + " " + brevity_instruction(limit)));
    require(!retry.empty(), ErrorKind::kBackend, "empty description from backend for '" + record.object_id + "'");
    if (counter.count(retry) <= limit) {
        return finish(std::move(retry), BudgetAction::kReRequested);
    }
    if (auto cut = truncate_to_sentences(retry, limit, counter)) {
        return finish(std::move(*cut), BudgetAction::kReRequested);
    }
    fail(ErrorKind::kBackend, "description for '" + record.object_id + "' exceeds the " + std::to_string(limit) +
                                  "-" + counter.name() + "-token budget even after a brevity re-request");
}

BatchLabelResult batch_label(const DatasetCatalog& catalog, const PromptTemplate& tmpl, VlmBackend& backend,
                             double rate_limit, const LabelOptions& options) {
    require(rate_limit > 0.0, ErrorKind::kInvalidArgument, "rate_limit must be positive");
    catalog.validate();
    tmpl.validate();
    LabelOptions opts = options;
    if (!opts.clock) {
        opts.clock = system_clock();
    }
    const auto interval = std::chrono::nanoseconds(static_cast<std::int64_t>(std::llround(60e9 / rate_limit)));
    PacedBackend paced(backend, *opts.clock, interval);

    BatchLabelResult result;
    std::vector<Description> fresh;
    for (const auto& record : catalog.records()) {
        if (catalog.find_description(record.object_id, tmpl.kind) != nullptr) {
            ++result.skipped;
            continue;
        }
        try {
            fresh.push_back(request_description(record, tmpl, paced, opts));
            ++result.labeled;
        } catch (const Error& e) {
            result.failures.push_back({record.object_id, e.what()});
        }
    }
    result.backend_calls = paced.calls();
    result.catalog = catalog.with_descriptions(std::move(fresh));
    return result;
}

}  // namespace crossfind
