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

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "crossfind/io.hpp"

namespace crossfind {

/// Encoder tower widths: vision tower output, text tower output, shared space.
inline constexpr std::size_t kImageDim = 768;
inline constexpr std::size_t kTextDim = 512;
inline constexpr std::size_t kSharedDim = 512;

struct BaseTextEmbedding {
    std::string id;  // object id, or a query id for ad-hoc text
    std::vector<float> vector;
};

struct BaseImageEmbedding {
    std::string object_id;
    std::vector<float> vector;
};

bool all_finite(std::span<const float> v);

/// Id-keyed table of fixed-width float vectors.
///
/// On disk this is a blob file with a single block "vectors" of shape
/// [count, dimension] and a header declaring dimension, count, ids and byte
/// order, plus whatever provenance the writer adds under "meta".
class EmbeddingTable {
 public:
    EmbeddingTable() = default;
    explicit EmbeddingTable(std::size_t dimension) : dimension_(dimension) {}

    std::size_t dimension() const { return dimension_; }
    std::size_t size() const { return ids_.size(); }
    const std::vector<std::string>& ids() const { return ids_; }

    /// Appends a row; rejects duplicates, wrong widths and non-finite values.
    void add(std::string id, std::span<const float> vector);

    bool contains(std::string_view id) const;
    std::optional<std::size_t> position(std::string_view id) const;
    std::span<const float> row(std::size_t position) const;
    /// Throws kNotFound naming the id.
    std::span<const float> at(std::string_view id) const;

    Json& meta() { return meta_; }
    const Json& meta() const { return meta_; }

    void save(const std::filesystem::path& path) const;
    static EmbeddingTable load(const std::filesystem::path& path);

    BlobFile to_blob() const;
    static EmbeddingTable from_blob(const BlobFile& blob);

 private:
    std::size_t dimension_ = 0;
    std::vector<std::string> ids_;
    std::vector<float> data_;
    std::unordered_map<std::string, std::size_t> position_;
    Json meta_ = Json::object();
};

}  // namespace crossfind
