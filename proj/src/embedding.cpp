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

#include "crossfind/embedding.hpp"

#include <algorithm>
#include <cmath>

#include "crossfind/error.hpp"

namespace crossfind {

bool all_finite(std::span<const float> v) {
    return std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); });
}

void EmbeddingTable::add(std::string id, std::span<const float> vector) {
    require(!id.empty(), ErrorKind::kInvalidArgument, "embedding id must be non-empty");
    require(vector.size() == dimension_, ErrorKind::kInvalidArgument,
            "embedding '" + id + "' has dimension " + std::to_string(vector.size()) + ", table expects " +
                std::to_string(dimension_));
    require(all_finite(vector), ErrorKind::kNumeric, "embedding '" + id + "' has non-finite components");
    require(!contains(id), ErrorKind::kInvalidArgument, "duplicate embedding id '" + id + "'");
    position_.emplace(id, ids_.size());
    ids_.push_back(std::move(id));
    data_.insert(data_.end(), vector.begin(), vector.end());
}

bool EmbeddingTable::contains(std::string_view id) const { return position_.count(std::string(id)) > 0; }

std::optional<std::size_t> EmbeddingTable::position(std::string_view id) const {
    auto it = position_.find(std::string(id));
    if (it == position_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::span<const float> EmbeddingTable::row(std::size_t pos) const {
    return std::span<const float>(data_).subspan(pos * dimension_, dimension_);
}

std::span<const float> EmbeddingTable::at(std::string_view id) const {
    auto pos = position(id);
    if (!pos) {
        fail(ErrorKind::kNotFound, "no embedding for id '" + std::string(id) + "'");
    }
    return row(*pos);
}

BlobFile EmbeddingTable::to_blob() const {
    BlobFile blob;
    blob.header = {{"format", "crossfind-embeddings"},
                   {"version", 1},
                   {"dimension", dimension_},
                   {"count", ids_.size()},
                   {"ids", ids_},
                   {"meta", meta_}};
    blob.blocks.push_back({"vectors", {ids_.size(), dimension_}, data_});
    return blob;
}

EmbeddingTable EmbeddingTable::from_blob(const BlobFile& blob) {
    const auto& h = blob.header;
    require(h.value("format", "") == "crossfind-embeddings", ErrorKind::kParse, "not an embedding file");
    const auto dim = h.at("dimension").get<std::size_t>();
    const auto count = h.at("count").get<std::size_t>();
    const auto ids = h.at("ids").get<std::vector<std::string>>();
    require(ids.size() == count, ErrorKind::kParse, "embedding header id list does not match count");
    const auto& vectors = blob.block("vectors");
    require(vectors.shape == std::vector<std::size_t>{count, dim}, ErrorKind::kParse,
            "embedding block shape does not match header");
    EmbeddingTable table(dim);
    for (std::size_t i = 0; i < count; ++i) {
        table.add(ids[i], std::span<const float>(vectors.data).subspan(i * dim, dim));
    }
    if (h.contains("meta")) {
        table.meta_ = h["meta"];
    }
    return table;
}

void EmbeddingTable::save(const std::filesystem::path& path) const { write_blob(path, to_blob()); }

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path) {
    try {
        return from_blob(read_blob(path));
    } catch (const Json::exception& e) {
        fail(ErrorKind::kParse, path.string() + ": " + e.what());
    }
}

}  // namespace crossfind
