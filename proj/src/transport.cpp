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

#include "crossfind/transport.hpp"

#include <ctime>
#include <thread>

#include <httplib.h>

#include "crossfind/error.hpp"

namespace crossfind {

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    require(scheme_end != std::string::npos, ErrorKind::kInvalidArgument, "endpoint URL lacks a scheme: " + url);
    const auto path_at = url.find('/', scheme_end + 3);
    if (path_at == std::string::npos) {
        return {url, "/"};
    }
    return {url.substr(0, path_at), url.substr(path_at)};
}

class HttplibClient final : public HttpClient {
 public:
    HttpResponse post(const std::string& url, const std::string& body, const Headers& headers,
                      std::chrono::milliseconds timeout) override {
        const auto parts = split_url(url);
        httplib::Client client(parts.origin);
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
        const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
        client.set_connection_timeout(secs.count(), usecs.count());
        client.set_read_timeout(secs.count(), usecs.count());
        client.set_write_timeout(secs.count(), usecs.count());

        httplib::Headers hs;
        for (const auto& [k, v] : headers) {
            hs.emplace(k, v);
        }
        HttpResponse out;
        auto res = client.Post(parts.path, hs, body, "application/json");
        if (!res) {
            out.transport_error = httplib::to_string(res.error());
            return out;
        }
        out.status = res->status;
        out.body = res->body;
        return out;
    }
};

class SteadySystemClock final : public Clock {
 public:
    std::chrono::nanoseconds now() const override {
        return std::chrono::duration_cast<std::chrono::nanoseconds>(
            std::chrono::system_clock::now().time_since_epoch());
    }
    void sleep_for(std::chrono::nanoseconds duration) override {
        if (duration.count() > 0) {
            std::this_thread::sleep_for(duration);
        }
    }
};

}  // namespace

std::shared_ptr<HttpClient> make_http_client() { return std::make_shared<HttplibClient>(); }

std::shared_ptr<Clock> system_clock() {
    static auto clock = std::make_shared<SteadySystemClock>();
    return clock;
}

std::string iso8601_utc(std::chrono::nanoseconds since_epoch) {
    const std::time_t secs = std::chrono::duration_cast<std::chrono::seconds>(since_epoch).count();
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace crossfind
