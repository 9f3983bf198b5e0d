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

// Exact cosine retrieval over projected embeddings.
//
// Every entry keeps its base vectors and both shared-space projections.
// Scores are dot products of unit float vectors accumulated in double, in
// component order, so a brute-force reimplementation reproduces them bit
// for bit. Results are ordered by score descending, then object id
// ascending.

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "crossfind/associate.hpp"
#include "crossfind/catalog.hpp"
#include "crossfind/embedding.hpp"
#include "crossfind/encoder.hpp"

namespace crossfind {

/// Largest k the service boundary accepts.
inline constexpr std::size_t kMaxResults = 10;

struct EmbeddingPair {
    std::string object_id;
    std::vector<float> base_image;
    std::vector<float> base_text;
    std::vector<float> shared_image;  // unit norm
    std::vector<float> shared_text;   // unit norm
    std::string heads_version;
};

/// Immutable after construction. Vectors live in contiguous row-major
/// arrays, one per space.
class SearchIndex {
 public:
    SearchIndex() = default;

    /// Validates unique ids, widths, unit norms (1e-6) and that every pair
    /// carries `heads_version`.
    static SearchIndex from_pairs(const std::vector<EmbeddingPair>& pairs, std::string heads_version);

    std::size_t size() const { return ids_.size(); }
    bool empty() const { return ids_.empty(); }
    const std::vector<std::string>& ids() const { return ids_; }
    const std::string& heads_version() const { return heads_version_; }
    std::size_t image_dim() const { return image_dim_; }
    std::size_t text_dim() const { return text_dim_; }
    std::size_t shared_dim() const { return shared_dim_; }

    bool contains(std::string_view object_id) const;
    /// Throws kNotFound naming the id.
    std::size_t position(std::string_view object_id) const;

    std::span<const float> base_image(std::size_t i) const;
    std::span<const float> base_text(std::size_t i) const;
    std::span<const float> shared_image(std::size_t i) const;
    std::span<const float> shared_text(std::size_t i) const;
    EmbeddingPair entry(std::size_t i) const;

    /// Provenance carried into the saved header (catalog digest and so on).
    Json& meta() { return meta_; }
    const Json& meta() const { return meta_; }

    BlobFile to_blob() const;
    static SearchIndex from_blob(const BlobFile& blob);
    void save(const std::filesystem::path& path) const;
    static SearchIndex load(const std::filesystem::path& path);

 private:
    std::vector<std::string> ids_;
    std::unordered_map<std::string, std::size_t> position_;
    std::string heads_version_;
    std::size_t image_dim_ = 0;
    std::size_t text_dim_ = 0;
    std::size_t shared_dim_ = 0;
    std::vector<float> base_image_;
    std::vector<float> base_text_;
    std::vector<float> shared_image_;
    std::vector<float> shared_text_;
    Json meta_ = Json::object();
};

/// Projects every catalog object. `texts` holds the text-tower output of
/// each object's description, keyed by object id.
SearchIndex build_index(const DatasetCatalog& catalog, const EmbeddingTable& images, const EmbeddingTable& texts,
                        const ProjectionHeads& heads);

struct SearchQuery {
    std::string text;
    std::size_t k = 8;
    double visual_focus = 0.5;  // weight of the image-space score

    /// k in [1, kMaxResults], visual_focus in [0, 1], non-empty text.
    void validate() const;
};

struct RankedResult {
    std::string object_id;
    double score = 0.0;
    std::size_t rank = 0;  // 1-based
    double image_score = 0.0;
    double text_score = 0.0;

    bool operator==(const RankedResult&) const = default;
};

/// Dot product of float vectors accumulated in double, in component order.
double dot_score(std::span<const float> a, std::span<const float> b);

/// visual_focus * image_score + (1 - visual_focus) * text_score.
inline double fuse_scores(double visual_focus, double image_score, double text_score) {
    return visual_focus * image_score + (1.0 - visual_focus) * text_score;
}

/// True when (score_a, id_a) ranks ahead of (score_b, id_b).
inline bool ranks_before(double score_a, std::string_view id_a, double score_b, std::string_view id_b) {
    return score_a > score_b || (score_a == score_b && id_a < id_b);
}

/// Library core: scores a shared-space query against both stored spaces and
/// returns the top min(k, N). Any k >= 1 is accepted.
std::vector<RankedResult> search_vector(const SearchIndex& index, std::span<const float> query, std::size_t k,
                                        double visual_focus);

/// Encodes the text, projects it with the text head and calls search_vector.
/// The query's k and visual_focus bounds are enforced.
std::vector<RankedResult> search_text(const SearchIndex& index, const SearchQuery& query, const ProjectionHeads& heads,
                                      const EncoderGateway& encoder);
std::vector<RankedResult> search_text(const SearchIndex& index, const SearchQuery& query, const ProjectionHeads& heads,
                                      const EncoderBackendConfig& backend);

/// Ranks every other entry's shared image against the object's own shared
/// image. text_score reports the same query against the stored text side.
std::vector<RankedResult> search_similar(const SearchIndex& index, std::string_view object_id, std::size_t k);

/// Stored descriptions of an object, in prompt-kind order. Throws kNotFound
/// for unknown ids and kNotLabeled when the object has none.
std::vector<Description> describe(const DatasetCatalog& catalog, std::string_view object_id);

}  // namespace crossfind
