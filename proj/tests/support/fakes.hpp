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

// Scripted stand-ins for the HTTP transport and the VLM.

#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "crossfind/labeler.hpp"
#include "crossfind/transport.hpp"

namespace crossfind::fake {

struct RecordedRequest {
    std::string url;
    std::string body;
    Headers headers;
};

/// Replays queued responses; the last one repeats once the queue drains.
class ScriptedHttp final : public HttpClient {
 public:
    void push(HttpResponse r) { queue_.push_back(std::move(r)); }
    void push(int status, std::string body) { push(HttpResponse{status, std::move(body), std::nullopt}); }
    void push_transport_error(std::string what) { push(HttpResponse{0, "", std::move(what)}); }

    HttpResponse post(const std::string& url, const std::string& body, const Headers& headers,
                      std::chrono::milliseconds) override {
        requests.push_back({url, body, headers});
        if (queue_.size() > 1) {
            HttpResponse r = queue_.front();
            queue_.pop_front();
            return r;
        }
        return queue_.empty() ? HttpResponse{500, "", std::nullopt} : queue_.front();
    }

    std::vector<RecordedRequest> requests;

 private:
    std::deque<HttpResponse> queue_;
};

/// Answers from a function of (record, prompt) and counts calls.
class ScriptedVlm final : public VlmBackend {
 public:
    explicit ScriptedVlm(std::function<std::string(const ObjectRecord&, std::string_view)> fn) : fn_(std::move(fn)) {}
    std::string generate(const ObjectRecord& record, std::string_view prompt) override {
        ++calls;
        prompts.emplace_back(prompt);
        return fn_(record, prompt);
    }
    std::string id() const override { return "scripted"; }

    std::size_t calls = 0;
    std::vector<std::string> prompts;

 private:
    std::function<std::string(const ObjectRecord&, std::string_view)> fn_;
};

}  // namespace crossfind::fake
