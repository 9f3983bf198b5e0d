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


#include "crossfind/index.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace crossfind {

namespace {

constexpr double kUnitTolerance = 1e-6;

void check_unit(std::span<const float> v, const std::string& id, const char* which) {
    const double n = std::sqrt(dot_score(v, v));
    require(std::abs(n - 1.0) <= kUnitTolerance, ErrorKind::kNumeric,
            std::string(which) + " vector of '" + id + "' is not unit norm (" + std::to_string(n) + ")");
}

void append(std::vector<float>& dst, std::span<const float> src) { dst.insert(dst.end(), src.begin(), src.end()); }

std::span<const float> row_of(const std::vector<float>& data, std::size_t i, std::size_t dim) {
    return std::span<const float>(data).subspan(i * dim, dim);
}

/// Orders candidate positions by the tie rule and keeps the first k.
std::vector<RankedResult> top_k(const SearchIndex& index, std::vector<std::size_t> candidates,
                                const std::vector<double>& fused, const std::vector<double>& image,
                                const std::vector<double>& text, std::size_t k) {
    const auto& ids = index.ids();
    const std::size_t keep = std::min(k, candidates.size());
    auto before = [&](std::size_t a, std::size_t b) { return ranks_before(fused[a], ids[a], fused[b], ids[b]); };
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep), candidates.end(),
                      before);
    std::vector<RankedResult> out;
    out.reserve(keep);
    for (std::size_t r = 0; r < keep; ++r) {
        const std::size_t p = candidates[r];
        out.push_back({ids[p], fused[p], r + 1, image[p], text[p]});
    }
    return out;
}

void check_k(std::size_t k) { require(k >= 1, ErrorKind::kInvalidArgument, "k must be at least 1"); }

void check_heads(const SearchIndex& index, const ProjectionHeads& heads) {
    require(heads.version.empty() || heads.version == index.heads_version(), ErrorKind::kPrerequisite,
            "projection heads version " + heads.version + " does not match the index (built with " +
                index.heads_version() + ")");
}

}  // namespace

double dot_score(std::span<const float> a, std::span<const float> b) {
    require(a.size() == b.size(), ErrorKind::kInvalidArgument, "dot_score dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return acc;
}

SearchIndex SearchIndex::from_pairs(const std::vector<EmbeddingPair>& pairs, std::string heads_version) {
    SearchIndex index;
    index.heads_version_ = std::move(heads_version);
    if (!pairs.empty()) {
        index.image_dim_ = pairs.front().base_image.size();
        index.text_dim_ = pairs.front().base_text.size();
        index.shared_dim_ = pairs.front().shared_image.size();
    }
    std::vector<std::string> duplicates;
    for (const auto& p : pairs) {
        require(!p.object_id.empty(), ErrorKind::kInvalidArgument, "index entry with empty object id");
        require(p.base_image.size() == index.image_dim_ && p.base_text.size() == index.text_dim_ &&
                    p.shared_image.size() == index.shared_dim_ && p.shared_text.size() == index.shared_dim_,
                ErrorKind::kInvalidArgument, "index entry '" + p.object_id + "' has inconsistent widths");
        require(p.heads_version == index.heads_version_, ErrorKind::kInvalidArgument,
                "index entry '" + p.object_id + "' carries heads version '" + p.heads_version + "', index has '" +
                    index.heads_version_ + "'");
        check_unit(p.shared_image, p.object_id, "shared image");
        check_unit(p.shared_text, p.object_id, "shared text");
        if (!index.position_.emplace(p.object_id, index.ids_.size()).second) {
            duplicates.push_back(p.object_id);
            continue;
        }
        index.ids_.push_back(p.object_id);
        append(index.base_image_, p.base_image);
        append(index.base_text_, p.base_text);
        append(index.shared_image_, p.shared_image);
        append(index.shared_text_, p.shared_text);
    }
    require(duplicates.empty(), ErrorKind::kInvalidArgument, "duplicate index ids: " + join_ids(duplicates));
    return index;
}

bool SearchIndex::contains(std::string_view object_id) const { return position_.count(std::string(object_id)) > 0; }

std::size_t SearchIndex::position(std::string_view object_id) const {
    auto it = position_.find(std::string(object_id));
    if (it == position_.end()) {
        fail(ErrorKind::kNotFound, "object '" + std::string(object_id) + "' is not in the index");
    }
    return it->second;
}

std::span<const float> SearchIndex::base_image(std::size_t i) const { return row_of(base_image_, i, image_dim_); }
std::span<const float> SearchIndex::base_text(std::size_t i) const { return row_of(base_text_, i, text_dim_); }
std::span<const float> SearchIndex::shared_image(std::size_t i) const { return row_of(shared_image_, i, shared_dim_); }
std::span<const float> SearchIndex::shared_text(std::size_t i) const { return row_of(shared_text_, i, shared_dim_); }

EmbeddingPair SearchIndex::entry(std::size_t i) const {
    require(i < size(), ErrorKind::kInvalidArgument, "index position out of range");
    auto vec = [](std::span<const float> s) { return std::vector<float>(s.begin(), s.end()); };
    return {ids_[i], vec(base_image(i)), vec(base_text(i)), vec(shared_image(i)), vec(shared_text(i)),
            heads_version_};
}

BlobFile SearchIndex::to_blob() const {
    BlobFile blob;
    blob.header = {{"format", "crossfind-index"},
                   {"version", 1},
                   {"heads_version", heads_version_},
                   {"count", ids_.size()},
                   {"ids", ids_},
                   {"image_dim", image_dim_},
                   {"text_dim", text_dim_},
                   {"shared_dim", shared_dim_},
                   {"meta", meta_}};
    const std::size_t n = ids_.size();
    blob.blocks.push_back({"base_image", {n, image_dim_}, base_image_});
    blob.blocks.push_back({"base_text", {n, text_dim_}, base_text_});
    blob.blocks.push_back({"shared_image", {n, shared_dim_}, shared_image_});
    blob.blocks.push_back({"shared_text", {n, shared_dim_}, shared_text_});
    return blob;
}

SearchIndex SearchIndex::from_blob(const BlobFile& blob) {
    const auto& h = blob.header;
    require(h.value("format", "") == "crossfind-index", ErrorKind::kParse, "not a search index file");
    try {
        const auto ids = h.at("ids").get<std::vector<std::string>>();
        const auto n = h.at("count").get<std::size_t>();
        require(ids.size() == n, ErrorKind::kParse, "index header id list does not match count");
        const auto di = h.at("image_dim").get<std::size_t>();
        const auto dt = h.at("text_dim").get<std::size_t>();
        const auto ds = h.at("shared_dim").get<std::size_t>();
        const std::string version = h.at("heads_version").get<std::string>();
        auto take = [&](const char* name, std::size_t dim) -> const BlobBlock& {
            const auto& b = blob.block(name);
            require(b.shape == std::vector<std::size_t>{n, dim}, ErrorKind::kParse,
                    std::string("index block '") + name + "' has the wrong shape");
            return b;
        };
        const auto& bi = take("base_image", di);
        const auto& bt = take("base_text", dt);
        const auto& si = take("shared_image", ds);
        const auto& st = take("shared_text", ds);
        std::vector<EmbeddingPair> pairs;
        pairs.reserve(n);
        auto slice = [](const BlobBlock& b, std::size_t i, std::size_t dim) {
            return std::vector<float>(b.data.begin() + static_cast<std::ptrdiff_t>(i * dim),
                                      b.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim));
        };
        for (std::size_t i = 0; i < n; ++i) {
            pairs.push_back({ids[i], slice(bi, i, di), slice(bt, i, dt), slice(si, i, ds), slice(st, i, ds), version});
        }
        SearchIndex index = from_pairs(pairs, version);
        index.image_dim_ = di;
        index.text_dim_ = dt;
        index.shared_dim_ = ds;
        if (h.contains("meta")) {
            index.meta_ = h["meta"];
        }
        return index;
    } catch (const Json::exception& e) {
        fail(ErrorKind::kParse, std::string("malformed index header: ") + e.what());
    }
}

void SearchIndex::save(const std::filesystem::path& path) const { write_blob(path, to_blob()); }

SearchIndex SearchIndex::load(const std::filesystem::path& path) { return from_blob(read_blob(path)); }

SearchIndex build_index(const DatasetCatalog& catalog, const EmbeddingTable& images, const EmbeddingTable& texts,
                        const ProjectionHeads& heads) {
    heads.validate();
    require(images.dimension() == heads.image_dim() && texts.dimension() == heads.text_dim(),
            ErrorKind::kInvalidArgument, "embedding widths do not match the projection heads");
    std::vector<std::string> missing;
    for (const auto& r : catalog.records()) {
        if (!images.contains(r.object_id) || !texts.contains(r.object_id)) {
            missing.push_back(r.object_id);
        }
    }
    require(missing.empty(), ErrorKind::kPrerequisite, "missing base embeddings for: " + join_ids(missing));

    const std::string version = heads.version.empty() ? heads.content_version() : heads.version;
    std::vector<EmbeddingPair> pairs;
    pairs.reserve(catalog.size());
    std::vector<std::string> degenerate;
    for (const auto& r : catalog.records()) {
        const auto bi = images.at(r.object_id);
        const auto bt = texts.at(r.object_id);
        EmbeddingPair p{r.object_id, {bi.begin(), bi.end()}, {bt.begin(), bt.end()}, {}, {}, version};
        try {
            p.shared_image = project_image(bi, heads);
            p.shared_text = project_text(bt, heads);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::kNumeric) {
                throw;
            }
            degenerate.push_back(r.object_id);
            continue;
        }
        pairs.push_back(std::move(p));
    }
    require(degenerate.empty(), ErrorKind::kNumeric, "degenerate projection for: " + join_ids(degenerate));
    SearchIndex index = SearchIndex::from_pairs(pairs, version);
    index.meta()["catalog_digest"] = catalog.digest();
    return index;
}

void SearchQuery::validate() const {
    require(!text.empty(), ErrorKind::kInvalidArgument, "query text must be non-empty");
    require(k >= 1 && k <= kMaxResults, ErrorKind::kInvalidArgument,
            "k must be in [1, " + std::to_string(kMaxResults) + "], got " + std::to_string(k));
    require(visual_focus >= 0.0 && visual_focus <= 1.0, ErrorKind::kInvalidArgument,
            "visual_focus must be in [0, 1], got " + std::to_string(visual_focus));
}

std::vector<RankedResult> search_vector(const SearchIndex& index, std::span<const float> query, std::size_t k,
                                        double visual_focus) {
    check_k(k);
    require(visual_focus >= 0.0 && visual_focus <= 1.0, ErrorKind::kInvalidArgument,
            "visual_focus must be in [0, 1]");
    require(!index.empty(), ErrorKind::kPrerequisite, "search index is empty");
    require(query.size() == index.shared_dim(), ErrorKind::kInvalidArgument,
            "query has dimension " + std::to_string(query.size()) + ", index expects " +
                std::to_string(index.shared_dim()));
    const std::size_t n = index.size();
    std::vector<double> image(n);
    std::vector<double> text(n);
    std::vector<double> fused(n);
    for (std::size_t i = 0; i < n; ++i) {
        image[i] = dot_score(query, index.shared_image(i));
        text[i] = dot_score(query, index.shared_text(i));
        fused[i] = fuse_scores(visual_focus, image[i], text[i]);
    }
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    return top_k(index, std::move(all), fused, image, text, k);
}

std::vector<RankedResult> search_text(const SearchIndex& index, const SearchQuery& query, const ProjectionHeads& heads,
                                      const EncoderGateway& encoder) {
    query.validate();
    require(!index.empty(), ErrorKind::kPrerequisite, "search index is empty");
    check_heads(index, heads);
    const BaseTextEmbedding base = encoder.encode_text(query.text);
    const std::vector<float> q = project_text(base.vector, heads);
    return search_vector(index, q, query.k, query.visual_focus);
}

std::vector<RankedResult> search_text(const SearchIndex& index, const SearchQuery& query, const ProjectionHeads& heads,
                                      const EncoderBackendConfig& backend) {
    return search_text(index, query, heads, EncoderGateway(backend));
}

std::vector<RankedResult> search_similar(const SearchIndex& index, std::string_view object_id, std::size_t k) {
    check_k(k);
    const std::size_t self = index.position(object_id);
    const auto q = index.shared_image(self);
    const std::size_t n = index.size();
    std::vector<double> image(n);
    std::vector<double> text(n);
    std::vector<std::size_t> others;
    others.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (i == self) {
            continue;
        }
        image[i] = dot_score(q, index.shared_image(i));
        text[i] = dot_score(q, index.shared_text(i));
        others.push_back(i);
    }
    return top_k(index, std::move(others), image, image, text, k);
}

std::vector<Description> describe(const DatasetCatalog& catalog, std::string_view object_id) {
    require(catalog.contains(object_id), ErrorKind::kNotFound,
            "object '" + std::string(object_id) + "' is not in the catalog");
    std::vector<Description> out = catalog.descriptions_of(object_id);
    require(!out.empty(), ErrorKind::kNotLabeled, "object '" + std::string(object_id) + "' has no description");
    std::stable_sort(out.begin(), out.end(), [](const Description& a, const Description& b) { return a.kind < b.kind; });
    return out;
}

}  // namespace crossfind
