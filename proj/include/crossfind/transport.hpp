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

// Seams between the engine and the outside world: an HTTP POST transport and
// a clock. Backends take both by shared_ptr so tests can substitute fakes and
// a virtual clock.

#include <chrono>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace crossfind {

using Headers = std::vector<std::pair<std::string, std::string>>;

struct HttpResponse {
    int status = 0;
    std::string body;
    std::optional<std::string> transport_error;  // set when no HTTP response arrived

    bool ok() const { return !transport_error && status >= 200 && status < 300; }
    /// Failures worth retrying: transport errors, 429 and 5xx.
    bool retryable() const { return transport_error.has_value() || status == 429 || status >= 500; }
};

class HttpClient {
 public:
    virtual ~HttpClient() = default;
    virtual HttpResponse post(const std::string& url, const std::string& body, const Headers& headers,
                              std::chrono::milliseconds timeout) = 0;
};

/// cpp-httplib backed client; supports http:// and https:// URLs.
std::shared_ptr<HttpClient> make_http_client();

class Clock {
 public:
    virtual ~Clock() = default;
    /// Time since the Unix epoch.
    virtual std::chrono::nanoseconds now() const = 0;
    virtual void sleep_for(std::chrono::nanoseconds duration) = 0;
};

std::shared_ptr<Clock> system_clock();

/// Clock that only moves when someone sleeps on it.
class VirtualClock final : public Clock {
 public:
    explicit VirtualClock(std::chrono::nanoseconds start = std::chrono::seconds(1'767'225'600)) : now_(start) {}

    std::chrono::nanoseconds now() const override {
        std::lock_guard lock(mu_);
        return now_;
    }
    void sleep_for(std::chrono::nanoseconds duration) override {
        std::lock_guard lock(mu_);
        if (duration.count() > 0) {
            now_ += duration;
            slept_ += duration;
        }
    }
    std::chrono::nanoseconds total_slept() const {
        std::lock_guard lock(mu_);
        return slept_;
    }

 private:
    mutable std::mutex mu_;
    std::chrono::nanoseconds now_;
    std::chrono::nanoseconds slept_{0};
};

/// "2026-01-01T00:00:00Z" style timestamp for `since_epoch`.
std::string iso8601_utc(std::chrono::nanoseconds since_epoch);

/// Exponential backoff delay before retry `attempt` (1-based): base * 2^(attempt-1).
inline std::chrono::milliseconds backoff_delay(int attempt, std::chrono::milliseconds base = std::chrono::milliseconds(200)) {
    return base * (1LL << (attempt - 1));
}

}  // namespace crossfind
