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


#include "crossfind/service.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <iostream>

#include <httplib.h>

namespace crossfind {

namespace {

using SteadyClock = std::chrono::steady_clock;

Json envelope() { return Json{{"api_version", kApiVersion}}; }

ApiResponse json_response(int status, const Json& body) { return {status, body.dump(), {}}; }

int status_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::kInvalidArgument:
        case ErrorKind::kParse:
            return 400;
        case ErrorKind::kNotFound:
            return 404;
        case ErrorKind::kBackend:
            return 502;
        case ErrorKind::kPrerequisite:
            return 503;
        default:
            return 500;
    }
}

std::string_view code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::kInvalidArgument:
        case ErrorKind::kParse:
            return "invalid_parameter";
        case ErrorKind::kNotFound:
            return "not_found";
        case ErrorKind::kBackend:
            return "encoder_failure";
        case ErrorKind::kPrerequisite:
            return "unavailable";
        default:
            return "internal";
    }
}

ApiResponse from_error(const Error& e) { return error_response(status_for(e.kind()), code_for(e.kind()), e.what()); }

ApiResponse not_loaded() { return error_response(503, "index_not_loaded", "no index is loaded"); }

std::optional<std::size_t> parse_k(const Json& v) {
    if (v.is_number_unsigned()) {
        return v.get<std::size_t>();
    }
    if (v.is_number_integer()) {
        const auto k = v.get<std::int64_t>();
        return k < 0 ? std::optional<std::size_t>(0) : std::optional<std::size_t>(static_cast<std::size_t>(k));
    }
    return std::nullopt;
}

std::string k_bound_message(const std::string& got) {
    return "k must be an integer in [1, " + std::to_string(kMaxResults) + "], got " + got;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    if (p.empty()) {
        return {};
    }
    const std::filesystem::path path(p);
    return (path.is_absolute() || base.empty() ? path : base / path).lexically_normal();
}

}  // namespace

void ServiceConfig::validate(bool check_paths) const {
    require(port >= 0 && port <= 65535, ErrorKind::kInvalidArgument, "port must be in [0, 65535]");
    require(max_inflight_encodes >= 1, ErrorKind::kInvalidArgument, "max_inflight_encodes must be at least 1");
    encoder.validate();
    require(!index_path.empty() && !heads_path.empty() && !catalog_path.empty(), ErrorKind::kInvalidArgument,
            "service config needs index, heads and catalog paths");
    if (check_paths) {
        for (const auto* p : {&index_path, &heads_path, &catalog_path}) {
            require(std::filesystem::exists(*p), ErrorKind::kPrerequisite, "artifact not found: " + p->string());
        }
    }
}

Json ServiceConfig::to_json() const {
    return {{"host", host},
            {"port", port},
            {"index", index_path.string()},
            {"heads", heads_path.string()},
            {"catalog", catalog_path.string()},
            {"encoder", encoder.to_json()},
            {"asset_base_url", asset_base_url},
            {"max_inflight_encodes", max_inflight_encodes},
            {"log_requests", log_requests}};
}

ServiceConfig ServiceConfig::from_json(const Json& j, const std::filesystem::path& base_dir) {
    ServiceConfig c;
    try {
        c.host = j.value("host", c.host);
        c.port = j.value("port", c.port);
        c.index_path = resolve(base_dir, j.value("index", ""));
        c.heads_path = resolve(base_dir, j.value("heads", ""));
        c.catalog_path = resolve(base_dir, j.value("catalog", ""));
        if (j.contains("encoder")) {
            c.encoder = EncoderBackendConfig::from_json(j["encoder"]);
            c.encoder.embedding_file = resolve(base_dir, c.encoder.embedding_file.string());
        }
        c.asset_base_url = j.value("asset_base_url", "");
        c.max_inflight_encodes = j.value("max_inflight_encodes", c.max_inflight_encodes);
        c.log_requests = j.value("log_requests", c.log_requests);
    } catch (const Json::exception& e) {
        fail(ErrorKind::kParse, std::string("malformed service config: ") + e.what());
    }
    return c;
}

std::optional<std::string> process_env(const char* name) {
    const char* v = std::getenv(name);
    if (v == nullptr) {
        return std::nullopt;
    }
    return std::string(v);
}

ServiceConfig apply_env_overrides(ServiceConfig c, const EnvLookup& env) {
    auto number = [](const std::string& name, const std::string& v) {
        long long out = 0;
        const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
        require(res.ec == std::errc() && res.ptr == v.data() + v.size() && out >= 0, ErrorKind::kInvalidArgument,
                name + " must be a non-negative integer, got '" + v + "'");
        return out;
    };
    if (auto v = env("CROSSFIND_HOST")) {
        c.host = *v;
    }
    if (auto v = env("CROSSFIND_PORT")) {
        c.port = static_cast<int>(number("CROSSFIND_PORT", *v));
    }
    if (auto v = env("CROSSFIND_INDEX")) {
        c.index_path = *v;
    }
    if (auto v = env("CROSSFIND_HEADS")) {
        c.heads_path = *v;
    }
    if (auto v = env("CROSSFIND_CATALOG")) {
        c.catalog_path = *v;
    }
    if (auto v = env("CROSSFIND_ASSET_BASE_URL")) {
        c.asset_base_url = *v;
    }
    if (auto v = env("CROSSFIND_ENCODER_KIND")) {
        c.encoder.kind = parse_encoder_kind(*v);
    }
    if (auto v = env("CROSSFIND_ENCODER_URL")) {
        c.encoder.endpoint_url = *v;
    }
    if (auto v = env("CROSSFIND_MAX_INFLIGHT_ENCODES")) {
        c.max_inflight_encodes = static_cast<std::size_t>(number("CROSSFIND_MAX_INFLIGHT_ENCODES", *v));
    }
    return c;
}

ServiceConfig load_service_config(const std::filesystem::path& path, const EnvLookup& env) {
    Json doc;
    try {
        doc = Json::parse(read_file(path));
    } catch (const Json::exception& e) {
        fail(ErrorKind::kParse, path.string() + ": " + e.what());
    }
    return apply_env_overrides(ServiceConfig::from_json(doc, path.parent_path()), env);
}

std::string asset_url(std::string_view base, std::string_view ref) {
    if (ref.find("://") != std::string_view::npos || base.empty()) {
        return std::string(ref);
    }
    while (!base.empty() && base.back() == '/') {
        base.remove_suffix(1);
    }
    while (!ref.empty() && ref.front() == '/') {
        ref.remove_prefix(1);
    }
    return std::string(base) + "/" + std::string(ref);
}

std::shared_ptr<const ServiceSnapshot> load_snapshot(const ServiceConfig& config) {
    auto snap = std::make_shared<ServiceSnapshot>();
    snap->index = SearchIndex::load(config.index_path);
    snap->heads = load_heads(config.heads_path);
    snap->catalog = load_catalog(config.catalog_path);
    require(snap->heads.version == snap->index.heads_version(), ErrorKind::kPrerequisite,
            "heads version " + snap->heads.version + " does not match the index (" + snap->index.heads_version() +
                ")");
    std::vector<std::string> unknown;
    for (const auto& id : snap->index.ids()) {
        if (!snap->catalog.contains(id)) {
            unknown.push_back(id);
        }
    }
    require(unknown.empty(), ErrorKind::kPrerequisite, "index ids missing from the catalog: " + join_ids(unknown));
    return snap;
}

ApiResponse error_response(int status, std::string_view code, std::string_view message) {
    Json body = envelope();
    body["error"] = {{"code", code}, {"message", message}};
    return json_response(status, body);
}

SearchService::SearchService(ServiceConfig config, std::shared_ptr<const EncoderGateway> encoder)
    : config_(std::move(config)), encoder_(std::move(encoder)) {
    require(config_.max_inflight_encodes >= 1, ErrorKind::kInvalidArgument, "max_inflight_encodes must be at least 1");
    if (!encoder_) {
        encoder_ = std::make_shared<const EncoderGateway>(config_.encoder);
    }
    encode_slots_ = std::make_unique<std::counting_semaphore<>>(static_cast<std::ptrdiff_t>(config_.max_inflight_encodes));
    if (config_.log_requests) {
        logger_ = [](const std::string& line) { std::cerr << line << '\n'; };
    }
}

void SearchService::install(std::shared_ptr<const ServiceSnapshot> snapshot) {
    std::lock_guard lock(mu_);
    snapshot_ = std::move(snapshot);
}

void SearchService::reload() { install(load_snapshot(config_)); }

std::shared_ptr<const ServiceSnapshot> SearchService::snapshot() const {
    std::lock_guard lock(mu_);
    return snapshot_;
}

void SearchService::set_logger(std::function<void(const std::string&)> logger) { logger_ = std::move(logger); }

Json SearchService::object_links(const ObjectRecord& record) const {
    return {{"image_url", asset_url(config_.asset_base_url, record.image_ref)},
            {"model_download_url", asset_url(config_.asset_base_url, record.model_ref)}};
}

Json SearchService::result_json(const ServiceSnapshot& snap, const RankedResult& r) const {
    Json j = {{"rank", r.rank},
              {"object_id", r.object_id},
              {"score", r.score},
              {"image_score", r.image_score},
              {"text_score", r.text_score}};
    j.update(object_links(snap.catalog.record(r.object_id)));
    const Description* d = snap.catalog.find_description(r.object_id, PromptKind::kTemplate);
    j["description"] = d != nullptr ? Json(d->text) : Json(nullptr);
    return j;
}

ApiResponse SearchService::results_response(const ServiceSnapshot& snap, const std::vector<RankedResult>& results,
                                            Json extra) const {
    Json body = envelope();
    body.update(extra);
    body["heads_version"] = snap.index.heads_version();
    Json list = Json::array();
    for (const auto& r : results) {
        list.push_back(result_json(snap, r));
    }
    body["results"] = std::move(list);
    return json_response(200, body);
}

ApiResponse SearchService::search(std::string_view body) const {
    const auto snap = snapshot();
    if (!snap) {
        return not_loaded();
    }
    Json req;
    try {
        req = Json::parse(body);
    } catch (const Json::exception&) {
        return error_response(400, "invalid_json", "request body is not valid JSON");
    }
    if (!req.is_object()) {
        return error_response(400, "invalid_json", "request body must be a JSON object");
    }
    SearchQuery q;
    if (!req.contains("query") || !req["query"].is_string() || req["query"].get<std::string>().empty()) {
        return error_response(400, "invalid_parameter", "query must be a non-empty string");
    }
    q.text = req["query"].get<std::string>();
    q.k = kDefaultResults;
    if (req.contains("k")) {
        const auto k = parse_k(req["k"]);
        if (!k || *k < 1 || *k > kMaxResults) {
            return error_response(400, "invalid_parameter", k_bound_message(req["k"].dump()));
        }
        q.k = *k;
    }
    q.visual_focus = kDefaultVisualFocus;
    if (req.contains("visual_focus")) {
        const auto& v = req["visual_focus"];
        if (!v.is_number() || v.get<double>() < 0.0 || v.get<double>() > 1.0) {
            return error_response(400, "invalid_parameter", "visual_focus must be a number in [0, 1], got " + v.dump());
        }
        q.visual_focus = v.get<double>();
    }
    if (!encode_slots_->try_acquire_for(config_.encoder.timeout)) {
        return error_response(503, "encoder_busy", "too many queries waiting for the encoder");
    }
    std::vector<RankedResult> results;
    try {
        results = search_text(snap->index, q, snap->heads, *encoder_);
    } catch (const Error& e) {
        encode_slots_->release();
        return from_error(e);
    }
    encode_slots_->release();
    return results_response(*snap, results, {{"query", q.text}, {"k", q.k}, {"visual_focus", q.visual_focus}});
}

ApiResponse SearchService::similar(std::string_view object_id, const std::optional<std::string>& k_param) const {
    const auto snap = snapshot();
    if (!snap) {
        return not_loaded();
    }
    std::size_t k = kDefaultResults;
    if (k_param) {
        const std::string& s = *k_param;
        unsigned long long v = 0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size() || v < 1 || v > kMaxResults) {
            return error_response(400, "invalid_parameter", k_bound_message("\"" + s + "\""));
        }
        k = static_cast<std::size_t>(v);
    }
    if (!snap->index.contains(object_id)) {
        return error_response(404, "not_found", "object '" + std::string(object_id) + "' is not in the index");
    }
    try {
        return results_response(*snap, search_similar(snap->index, object_id, k),
                                {{"object_id", object_id}, {"k", k}});
    } catch (const Error& e) {
        return from_error(e);
    }
}

ApiResponse SearchService::object(std::string_view object_id) const {
    const auto snap = snapshot();
    if (!snap) {
        return not_loaded();
    }
    if (!snap->catalog.contains(object_id)) {
        return error_response(404, "not_found", "object '" + std::string(object_id) + "' is not in the catalog");
    }
    const ObjectRecord& r = snap->catalog.record(object_id);
    Json record = {{"object_id", r.object_id}, {"image_ref", r.image_ref}, {"model_ref", r.model_ref},
                   {"category", r.category}};
    if (r.display_name) {
        record["display_name"] = *r.display_name;
    }
    Json descriptions = Json::array();
    try {
        for (const auto& d : describe(snap->catalog, object_id)) {
            descriptions.push_back({{"kind", to_string(d.kind)},
                                    {"text", d.text},
                                    {"token_count", d.token_count},
                                    {"backend_id", d.backend_id},
                                    {"created_at", d.created_at},
                                    {"budget_action", to_string(d.budget_action)}});
        }
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::kNotLabeled) {
            return from_error(e);
        }
    }
    Json body = envelope();
    body["object"] = std::move(record);
    body["descriptions"] = std::move(descriptions);
    body["indexed"] = snap->index.contains(object_id);
    body.update(object_links(r));
    return json_response(200, body);
}

ApiResponse SearchService::health() const {
    const auto snap = snapshot();
    if (!snap) {
        Json body = envelope();
        body["status"] = "unavailable";
        body["error"] = {{"code", "index_not_loaded"}, {"message", "no index is loaded"}};
        return json_response(503, body);
    }
    Json body = envelope();
    body["status"] = "ok";
    body["index_size"] = snap->index.size();
    body["heads_version"] = snap->index.heads_version();
    return json_response(200, body);
}

ApiResponse SearchService::admin_reload() {
    try {
        reload();
    } catch (const Error& e) {
        return error_response(500, "reload_failed", e.what());
    }
    const auto snap = snapshot();
    Json body = envelope();
    body["status"] = "reloaded";
    body["index_size"] = snap->index.size();
    body["heads_version"] = snap->index.heads_version();
    return json_response(200, body);
}

ApiResponse SearchService::handle(const ApiRequest& request) {
    const auto start = SteadyClock::now();
    auto with_id = [&](std::string_view prefix) -> std::optional<std::string> {
        if (request.path.size() > prefix.size() && request.path.compare(0, prefix.size(), prefix) == 0) {
            return request.path.substr(prefix.size());
        }
        return std::nullopt;
    };
    auto only = [&](const char* method) { return request.method == method; };
    ApiResponse res;
    if (request.path == "/health") {
        res = only("GET") ? health() : error_response(405, "method_not_allowed", "use GET");
    } else if (request.path == "/api/search") {
        res = only("POST") ? search(request.body) : error_response(405, "method_not_allowed", "use POST");
    } else if (request.path == "/admin/reload") {
        res = only("POST") ? admin_reload()
                           : error_response(405, "method_not_allowed", "use POST");
    } else if (auto id = with_id("/api/similar/")) {
        std::optional<std::string> k;
        if (auto it = request.params.find("k"); it != request.params.end()) {
            k = it->second;
        }
        res = only("GET") ? similar(*id, k) : error_response(405, "method_not_allowed", "use GET");
    } else if (auto id = with_id("/api/objects/")) {
        res = only("GET") ? object(*id) : error_response(405, "method_not_allowed", "use GET");
    } else {
        res = error_response(404, "not_found", "no route for " + request.path);
    }
    const double ms = std::chrono::duration<double, std::milli>(SteadyClock::now() - start).count();
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", ms);
    res.headers["X-Elapsed-Ms"] = buf;
    res.headers["Content-Type"] = "application/json";
    if (logger_) {
        logger_(Json{{"method", request.method}, {"path", request.path}, {"status", res.status}, {"elapsed_ms", ms}}
                    .dump());
    }
    return res;
}

HttpServer::HttpServer(SearchService& service) : service_(service), server_(std::make_unique<httplib::Server>()) {
    auto adapter = [this](const httplib::Request& req, httplib::Response& res) {
        ApiRequest api{req.method, req.path, {}, req.body};
        for (const auto& [k, v] : req.params) {
            api.params.emplace(k, v);
        }
        const ApiResponse out = service_.handle(api);
        res.status = out.status;
        for (const auto& [k, v] : out.headers) {
            if (k != "Content-Type") {
                res.set_header(k, v);
            }
        }
        res.set_content(out.body, "application/json");
    };
    server_->Get(".*", adapter);
    server_->Post(".*", adapter);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) {
        const int bound = server_->bind_to_any_port(host);
        require(bound > 0, ErrorKind::kIo, "could not bind " + host);
        return bound;
    }
    require(server_->bind_to_port(host, port), ErrorKind::kIo, "could not bind " + host + ":" + std::to_string(port));
    return port;
}

void HttpServer::listen() { server_->listen_after_bind(); }

void HttpServer::start() {
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
}

void HttpServer::stop() {
    if (server_) {
        server_->stop();
    }
    if (thread_.joinable()) {
        thread_.join();
    }
}

}  // namespace crossfind
