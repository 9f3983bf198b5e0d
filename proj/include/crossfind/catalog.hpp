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

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "crossfind/io.hpp"

namespace crossfind {

/// The three description focuses a labeling prompt can take.
enum class PromptKind { kDesignPurpose, kStructure, kTemplate };

std::string_view to_string(PromptKind kind);
PromptKind parse_prompt_kind(std::string_view name);

/// What the labeler did to bring a raw response under the token budget.
enum class BudgetAction { kNone, kTruncated, kReRequested };

std::string_view to_string(BudgetAction action);
BudgetAction parse_budget_action(std::string_view name);

struct ObjectRecord {
    std::string object_id;
    std::string image_ref;
    std::string model_ref;
    std::string category;
    std::optional<std::string> display_name;

    bool operator==(const ObjectRecord&) const = default;
};

struct CaptureManifest {
    std::vector<ObjectRecord> records;
    std::string dataset_name;
    std::string source_note;

    bool operator==(const CaptureManifest&) const = default;
};

struct Description {
    std::string object_id;
    PromptKind kind = PromptKind::kTemplate;
    std::string text;
    std::int64_t token_count = 0;
    std::string backend_id;
    std::string created_at;  // ISO-8601 UTC
    BudgetAction budget_action = BudgetAction::kNone;

    bool operator==(const Description&) const = default;
};

enum class Split { kTrain, kValidation, kHoldout };

std::string_view to_string(Split split);
Split parse_split(std::string_view name);

/// Manifest plus everything later stages attach to it. Treated as an
/// immutable value: the with_* members return a new catalog.
class DatasetCatalog {
 public:
    DatasetCatalog() = default;
    explicit DatasetCatalog(CaptureManifest manifest);

    const CaptureManifest& manifest() const { return manifest_; }
    const std::vector<ObjectRecord>& records() const { return manifest_.records; }
    std::size_t size() const { return manifest_.records.size(); }

    bool contains(std::string_view object_id) const;
    const ObjectRecord& record(std::string_view object_id) const;

    const std::map<std::string, std::vector<Description>>& descriptions() const { return descriptions_; }
    const std::vector<Description>& descriptions_of(std::string_view object_id) const;
    const Description* find_description(std::string_view object_id, PromptKind kind) const;

    const std::map<std::string, Split>& splits() const { return splits_; }
    std::optional<Split> split_of(std::string_view object_id) const;
    std::vector<std::string> ids_in(Split split) const;

    /// Replaces any description of the same kind for the same object.
    DatasetCatalog with_description(Description description) const;
    DatasetCatalog with_descriptions(std::vector<Description> descriptions) const;
    DatasetCatalog with_splits(std::map<std::string, Split> splits) const;

    /// Checks every cross-reference invariant; throws on the first violation.
    void validate() const;

    /// Content digest over records, descriptions and splits.
    std::string digest() const;

    bool operator==(const DatasetCatalog& other) const {
        return manifest_ == other.manifest_ && descriptions_ == other.descriptions_ && splits_ == other.splits_;
    }

 private:
    void reindex();

    CaptureManifest manifest_;
    std::map<std::string, std::vector<Description>> descriptions_;
    std::map<std::string, Split> splits_;
    std::unordered_map<std::string, std::size_t> position_;
};

/// Parses a line-delimited manifest: one JSON object per line with
/// object_id, image_ref, model_ref, category and optional display_name. An
/// optional first line {"dataset_name": ..., "source_note": ...} carries
/// provenance. Blank lines are ignored.
CaptureManifest ingest_manifest(std::string_view document);
CaptureManifest ingest_manifest_file(const std::filesystem::path& path);

std::string serialize_manifest(const CaptureManifest& manifest);

/// Deterministic split: ids are sorted, shuffled with `seed`, the first
/// round(train_fraction * N) become train and the rest validation. A
/// non-zero holdout_fraction first reserves round(holdout_fraction * N) ids
/// as holdout and applies train_fraction to the remainder.
DatasetCatalog assign_splits(const DatasetCatalog& catalog, double train_fraction, std::uint64_t seed,
                             double holdout_fraction = 0.0);

Json catalog_to_json(const DatasetCatalog& catalog);
DatasetCatalog catalog_from_json(const Json& doc);

void save_catalog(const std::filesystem::path& path, const DatasetCatalog& catalog);
DatasetCatalog load_catalog(const std::filesystem::path& path);

}  // namespace crossfind
