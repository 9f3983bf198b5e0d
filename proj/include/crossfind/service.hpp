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

// JSON-over-HTTP front end for the search engine.
//
//   POST /api/search            {"query", "k" = 8, "visual_focus" = 0.5}
//   GET  /api/similar/{id}?k=8
//   GET  /api/objects/{id}
//   GET  /health
//   POST /admin/reload          re-reads index, heads and catalog from disk
//
// Every JSON body carries "api_version". Errors are
// {"api_version": 1, "error": {"code": ..., "message": ...}}. Out-of-range
// parameters are rejected with 400, never clamped. Handling time goes in
// the X-Elapsed-Ms header so bodies stay a pure function of the loaded
// artifacts and the request.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <thread>

#include "crossfind/associate.hpp"
#include "crossfind/catalog.hpp"
#include "crossfind/encoder.hpp"
#include "crossfind/index.hpp"

namespace httplib {
class Server;
}

namespace crossfind {

inline constexpr int kApiVersion = 1;
inline constexpr std::size_t kDefaultResults = 8;
inline constexpr double kDefaultVisualFocus = 0.5;

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::filesystem::path index_path;
    std::filesystem::path heads_path;
    std::filesystem::path catalog_path;
    EncoderBackendConfig encoder;
    std::string asset_base_url;
    std::size_t max_inflight_encodes = 4;
    bool log_requests = true;

    /// Field checks; with `check_paths` also that the artifact paths exist.
    void validate(bool check_paths) const;
    Json to_json() const;
    /// Relative paths resolve against `base_dir`.
    static ServiceConfig from_json(const Json& j, const std::filesystem::path& base_dir = {});
};

using EnvLookup = std::function<std::optional<std::string>(const char*)>;

/// Process environment lookup.
std::optional<std::string> process_env(const char* name);

/// Overrides from CROSSFIND_HOST, CROSSFIND_PORT, CROSSFIND_INDEX,
/// CROSSFIND_HEADS, CROSSFIND_CATALOG, CROSSFIND_ASSET_BASE_URL,
/// CROSSFIND_ENCODER_KIND, CROSSFIND_ENCODER_URL and
/// CROSSFIND_MAX_INFLIGHT_ENCODES.
ServiceConfig apply_env_overrides(ServiceConfig config, const EnvLookup& env = process_env);

/// Reads a JSON config file, then applies environment overrides.
ServiceConfig load_service_config(const std::filesystem::path& path, const EnvLookup& env = process_env);

/// base + "/" + ref; refs that already carry a scheme pass through.
std::string asset_url(std::string_view base, std::string_view ref);

/// Everything one generation of the service answers from.
struct ServiceSnapshot {
    SearchIndex index;
    ProjectionHeads heads;
    DatasetCatalog catalog;
};

/// Loads the three artifacts and checks they belong together.
std::shared_ptr<const ServiceSnapshot> load_snapshot(const ServiceConfig& config);

struct ApiRequest {
    std::string method;
    std::string path;
    std::map<std::string, std::string> params;
    std::string body;
};

struct ApiResponse {
    int status = 200;
    std::string body;
    std::map<std::string, std::string> headers;

    Json json() const { return Json::parse(body); }
};

class SearchService {
 public:
    explicit SearchService(ServiceConfig config, std::shared_ptr<const EncoderGateway> encoder = nullptr);

    /// Installs a snapshot atomically; in-flight requests finish on the old one.
    void install(std::shared_ptr<const ServiceSnapshot> snapshot);
    /// load_snapshot(config) then install. On failure the current snapshot stays.
    void reload();
    std::shared_ptr<const ServiceSnapshot> snapshot() const;

    /// Thread-safe; the HTTP adapter calls this from its worker threads.
    ApiResponse handle(const ApiRequest& request);

    ApiResponse search(std::string_view body) const;
    ApiResponse similar(std::string_view object_id, const std::optional<std::string>& k) const;
    ApiResponse object(std::string_view object_id) const;
    ApiResponse health() const;
    ApiResponse admin_reload();

    const ServiceConfig& config() const { return config_; }
    /// Receives one JSON line per handled request when log_requests is set.
    void set_logger(std::function<void(const std::string&)> logger);

 private:
    Json result_json(const ServiceSnapshot& snap, const RankedResult& r) const;
    Json object_links(const ObjectRecord& record) const;
    ApiResponse results_response(const ServiceSnapshot& snap, const std::vector<RankedResult>& results,
                                 Json extra) const;

    ServiceConfig config_;
    std::shared_ptr<const EncoderGateway> encoder_;
    mutable std::mutex mu_;
    std::shared_ptr<const ServiceSnapshot> snapshot_;
    std::unique_ptr<std::counting_semaphore<>> encode_slots_;
    std::function<void(const std::string&)> logger_;
};

ApiResponse error_response(int status, std::string_view code, std::string_view message);

/// cpp-httplib adapter around a SearchService.
class HttpServer {
 public:
    explicit HttpServer(SearchService& service);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds `port` (0 picks a free one) and returns the bound port.
    int bind(const std::string& host, int port);
    /// Serves on the calling thread until stop().
    void listen();
    /// Serves on a background thread.
    void start();
    void stop();

 private:
    SearchService& service_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
};

}  // namespace crossfind
