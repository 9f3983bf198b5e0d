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

#include "crossfind/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <span>

#include "crossfind/error.hpp"
#include "crossfind/rng.hpp"

namespace crossfind {

std::string_view to_string(PromptKind kind) {
    switch (kind) {
        case PromptKind::kDesignPurpose:
            return "design_purpose";
        case PromptKind::kStructure:
            return "structure";
        case PromptKind::kTemplate:
            return "template";
    }
    return "template";
}

PromptKind parse_prompt_kind(std::string_view name) {
    if (name == "design_purpose") return PromptKind::kDesignPurpose;
    if (name == "structure") return PromptKind::kStructure;
    if (name == "template") return PromptKind::kTemplate;
    fail(ErrorKind::kInvalidArgument,
         "unknown prompt kind '" + std::string(name) + "' (expected design_purpose, structure or template)");
}

std::string_view to_string(BudgetAction action) {
    switch (action) {
        case BudgetAction::kNone:
            return "none";
        case BudgetAction::kTruncated:
            return "truncated";
        case BudgetAction::kReRequested:
            return "re_requested";
    }
    return "none";
}

BudgetAction parse_budget_action(std::string_view name) {
    if (name == "none") return BudgetAction::kNone;
    if (name == "truncated") return BudgetAction::kTruncated;
    if (name == "re_requested") return BudgetAction::kReRequested;
    fail(ErrorKind::kParse, "unknown budget action '" + std::string(name) + "'");
}

std::string_view to_string(Split split) {
    switch (split) {
        case Split::kTrain:
            return "train";
        case Split::kValidation:
            return "validation";
        case Split::kHoldout:
            return "holdout";
    }
    return "train";
}

Split parse_split(std::string_view name) {
    if (name == "train") return Split::kTrain;
    if (name == "validation") return Split::kValidation;
    if (name == "holdout") return Split::kHoldout;
    fail(ErrorKind::kInvalidArgument, "unknown split '" + std::string(name) + "'");
}

// --- DatasetCatalog ---------------------------------------------------------

DatasetCatalog::DatasetCatalog(CaptureManifest manifest) : manifest_(std::move(manifest)) { reindex(); }

void DatasetCatalog::reindex() {
    position_.clear();
    position_.reserve(manifest_.records.size());
    for (std::size_t i = 0; i < manifest_.records.size(); ++i) {
        position_.emplace(manifest_.records[i].object_id, i);
    }
}

bool DatasetCatalog::contains(std::string_view object_id) const {
    return position_.find(std::string(object_id)) != position_.end();
}

const ObjectRecord& DatasetCatalog::record(std::string_view object_id) const {
    auto it = position_.find(std::string(object_id));
    if (it == position_.end()) {
        fail(ErrorKind::kNotFound, "unknown object id '" + std::string(object_id) + "'");
    }
    return manifest_.records[it->second];
}

const std::vector<Description>& DatasetCatalog::descriptions_of(std::string_view object_id) const {
    static const std::vector<Description> kEmpty;
    auto it = descriptions_.find(std::string(object_id));
    return it == descriptions_.end() ? kEmpty : it->second;
}

const Description* DatasetCatalog::find_description(std::string_view object_id, PromptKind kind) const {
    for (const auto& d : descriptions_of(object_id)) {
        if (d.kind == kind) {
            return &d;
        }
    }
    return nullptr;
}

std::optional<Split> DatasetCatalog::split_of(std::string_view object_id) const {
    auto it = splits_.find(std::string(object_id));
    if (it == splits_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::vector<std::string> DatasetCatalog::ids_in(Split split) const {
    std::vector<std::string> ids;
    for (const auto& [id, s] : splits_) {
        if (s == split) {
            ids.push_back(id);
        }
    }
    return ids;
}

DatasetCatalog DatasetCatalog::with_description(Description description) const {
    std::vector<Description> one;
    one.push_back(std::move(description));
    return with_descriptions(std::move(one));
}

DatasetCatalog DatasetCatalog::with_descriptions(std::vector<Description> descriptions) const {
    DatasetCatalog next = *this;
    for (auto& description : descriptions) {
        require(contains(description.object_id), ErrorKind::kNotFound,
                "cannot attach description to unknown object '" + description.object_id + "'");
        require(!description.text.empty(), ErrorKind::kInvalidArgument,
                "empty description for '" + description.object_id + "'");
        auto& list = next.descriptions_[description.object_id];
        auto same_kind =
            std::find_if(list.begin(), list.end(), [&](const Description& d) { return d.kind == description.kind; });
        if (same_kind != list.end()) {
            *same_kind = std::move(description);
        } else {
            list.push_back(std::move(description));
            std::sort(list.begin(), list.end(),
                      [](const Description& a, const Description& b) { return a.kind < b.kind; });
        }
    }
    return next;
}

DatasetCatalog DatasetCatalog::with_splits(std::map<std::string, Split> splits) const {
    for (const auto& [id, s] : splits) {
        require(contains(id), ErrorKind::kNotFound, "split assignment names unknown object '" + id + "'");
    }
    DatasetCatalog next = *this;
    next.splits_ = std::move(splits);
    return next;
}

void DatasetCatalog::validate() const {
    require(!manifest_.records.empty(), ErrorKind::kInvalidArgument, "catalog has no records");
    require(position_.size() == manifest_.records.size(), ErrorKind::kInvalidArgument,
            "catalog has duplicate object ids");
    for (const auto& r : manifest_.records) {
        require(!r.object_id.empty(), ErrorKind::kInvalidArgument, "record with empty object_id");
        require(!r.image_ref.empty(), ErrorKind::kInvalidArgument, "record '" + r.object_id + "' has empty image_ref");
    }
    for (const auto& [id, list] : descriptions_) {
        require(contains(id), ErrorKind::kInvalidArgument, "description attached to unknown object '" + id + "'");
        for (const auto& d : list) {
            require(d.object_id == id && !d.text.empty(), ErrorKind::kInvalidArgument,
                    "malformed description for '" + id + "'");
        }
    }
    for (const auto& [id, s] : splits_) {
        require(contains(id), ErrorKind::kInvalidArgument, "split assigned to unknown object '" + id + "'");
    }
}

std::string DatasetCatalog::digest() const { return sha256_hex(catalog_to_json(*this).dump()); }

// --- manifest ---------------------------------------------------------------

namespace {

Json record_to_json(const ObjectRecord& r) {
    Json j = {{"object_id", r.object_id}, {"image_ref", r.image_ref}, {"model_ref", r.model_ref}, {"category", r.category}};
    if (r.display_name) {
        j["display_name"] = *r.display_name;
    }
    return j;
}

ObjectRecord record_from_json(const Json& j) {
    if (!j.is_object()) {
        fail(ErrorKind::kParse, "record is not an object");
    }
    auto text = [&](const char* key, bool required) -> std::string {
        auto it = j.find(key);
        if (it == j.end() || it->is_null()) {
            if (required) {
                fail(ErrorKind::kParse, std::string("missing field '") + key + "'");
            }
            return {};
        }
        if (!it->is_string()) {
            fail(ErrorKind::kParse, std::string("field '") + key + "' must be a string");
        }
        return it->get<std::string>();
    };
    ObjectRecord r;
    r.object_id = text("object_id", true);
    r.image_ref = text("image_ref", true);
    r.model_ref = text("model_ref", false);
    r.category = text("category", false);
    if (j.contains("display_name") && !j["display_name"].is_null()) {
        r.display_name = text("display_name", false);
    }
    return r;
}

void check_records(const std::vector<ObjectRecord>& records) {
    require(!records.empty(), ErrorKind::kInvalidArgument, "manifest is empty");
    std::map<std::string, int> seen;
    for (const auto& r : records) {
        require(!r.object_id.empty(), ErrorKind::kInvalidArgument, "record with empty object_id");
        require(!r.image_ref.empty(), ErrorKind::kInvalidArgument, "record '" + r.object_id + "' has empty image_ref");
        ++seen[r.object_id];
    }
    std::vector<std::string> duplicates;
    for (const auto& [id, count] : seen) {
        if (count > 1) {
            duplicates.push_back(id);
        }
    }
    if (!duplicates.empty()) {
        fail(ErrorKind::kInvalidArgument, "duplicate object_id: " + join_ids(duplicates, duplicates.size()));
    }
}

}  // namespace

CaptureManifest ingest_manifest(std::string_view document) {
    CaptureManifest manifest;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool first_content = true;
    while (pos <= document.size()) {
        std::size_t end = document.find('\n', pos);
        if (end == std::string_view::npos) {
            end = document.size();
        }
        std::string_view line = document.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (line.find_first_not_of(" \t") == std::string_view::npos) {
            continue;
        }
        Json j;
        try {
            j = Json::parse(line);
        } catch (const Json::parse_error& e) {
            fail(ErrorKind::kParse, "manifest line " + std::to_string(line_no) + ": " + e.what());
        }
        if (first_content && j.is_object() && !j.contains("object_id") && j.contains("dataset_name")) {
            manifest.dataset_name = j.value("dataset_name", "");
            manifest.source_note = j.value("source_note", "");
            first_content = false;
            continue;
        }
        first_content = false;
        try {
            manifest.records.push_back(record_from_json(j));
        } catch (const Error& e) {
            fail(ErrorKind::kParse, "manifest line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    check_records(manifest.records);
    return manifest;
}

CaptureManifest ingest_manifest_file(const std::filesystem::path& path) { return ingest_manifest(read_file(path)); }

std::string serialize_manifest(const CaptureManifest& manifest) {
    std::string out = Json{{"dataset_name", manifest.dataset_name}, {"source_note", manifest.source_note}}.dump();
    out.push_back('\n');
    for (const auto& r : manifest.records) {
        out += record_to_json(r).dump();
        out.push_back('\n');
    }
    return out;
}

// --- splits -----------------------------------------------------------------

DatasetCatalog assign_splits(const DatasetCatalog& catalog, double train_fraction, std::uint64_t seed,
                             double holdout_fraction) {
    require(train_fraction > 0.0 && train_fraction <= 1.0, ErrorKind::kInvalidArgument,
            "train_fraction must lie in (0, 1], got " + std::to_string(train_fraction));
    require(holdout_fraction >= 0.0 && holdout_fraction < 1.0, ErrorKind::kInvalidArgument,
            "holdout_fraction must lie in [0, 1), got " + std::to_string(holdout_fraction));
    catalog.validate();

    std::vector<std::string> ids;
    ids.reserve(catalog.size());
    for (const auto& r : catalog.records()) {
        ids.push_back(r.object_id);
    }
    std::sort(ids.begin(), ids.end());
    Rng rng(seed);
    rng.shuffle(std::span<std::string>(ids));

    const auto n = ids.size();
    const auto holdout = static_cast<std::size_t>(std::llround(holdout_fraction * static_cast<double>(n)));
    const auto pool = n - holdout;
    const auto train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(pool)));

    std::map<std::string, Split> splits;
    for (std::size_t i = 0; i < n; ++i) {
        Split s = Split::kValidation;
        if (i < holdout) {
            s = Split::kHoldout;
        } else if (i < holdout + train) {
            s = Split::kTrain;
        }
        splits.emplace(ids[i], s);
    }
    return catalog.with_splits(std::move(splits));
}

// --- persistence ------------------------------------------------------------

Json catalog_to_json(const DatasetCatalog& catalog) {
    Json records = Json::array();
    for (const auto& r : catalog.records()) {
        records.push_back(record_to_json(r));
    }
    Json descriptions = Json::object();
    for (const auto& [id, list] : catalog.descriptions()) {
        Json arr = Json::array();
        for (const auto& d : list) {
            arr.push_back({{"kind", to_string(d.kind)},
                           {"text", d.text},
                           {"token_count", d.token_count},
                           {"backend_id", d.backend_id},
                           {"created_at", d.created_at},
                           {"budget_action", to_string(d.budget_action)}});
        }
        descriptions[id] = std::move(arr);
    }
    Json splits = Json::object();
    for (const auto& [id, s] : catalog.splits()) {
        splits[id] = to_string(s);
    }
    return {{"format", "crossfind-catalog"},
            {"version", 1},
            {"dataset_name", catalog.manifest().dataset_name},
            {"source_note", catalog.manifest().source_note},
            {"records", std::move(records)},
            {"descriptions", std::move(descriptions)},
            {"splits", std::move(splits)}};
}

DatasetCatalog catalog_from_json(const Json& doc) {
    try {
        require(doc.value("format", "") == "crossfind-catalog", ErrorKind::kParse, "not a crossfind catalog document");
        CaptureManifest manifest;
        manifest.dataset_name = doc.value("dataset_name", "");
        manifest.source_note = doc.value("source_note", "");
        for (const auto& r : doc.at("records")) {
            manifest.records.push_back(record_from_json(r));
        }
        check_records(manifest.records);
        DatasetCatalog catalog(std::move(manifest));
        if (doc.contains("descriptions")) {
            std::vector<Description> all;
            for (const auto& [id, list] : doc["descriptions"].items()) {
                for (const auto& d : list) {
                    Description desc;
                    desc.object_id = id;
                    desc.kind = parse_prompt_kind(d.at("kind").get<std::string>());
                    desc.text = d.at("text").get<std::string>();
                    desc.token_count = d.value("token_count", std::int64_t{0});
                    desc.backend_id = d.value("backend_id", "");
                    desc.created_at = d.value("created_at", "");
                    desc.budget_action = parse_budget_action(d.value("budget_action", "none"));
                    all.push_back(std::move(desc));
                }
            }
            catalog = catalog.with_descriptions(std::move(all));
        }
        if (doc.contains("splits")) {
            std::map<std::string, Split> splits;
            for (const auto& [id, s] : doc["splits"].items()) {
                splits.emplace(id, parse_split(s.get<std::string>()));
            }
            catalog = catalog.with_splits(std::move(splits));
        }
        catalog.validate();
        return catalog;
    } catch (const Json::exception& e) {
        fail(ErrorKind::kParse, std::string("catalog document: ") + e.what());
    }
}

void save_catalog(const std::filesystem::path& path, const DatasetCatalog& catalog) {
    write_file_atomic(path, catalog_to_json(catalog).dump(2) + "\n");
}

DatasetCatalog load_catalog(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::parse_error& e) {
        fail(ErrorKind::kParse, path.string() + ": " + e.what());
    }
    return catalog_from_json(doc);
}

}  // namespace crossfind
