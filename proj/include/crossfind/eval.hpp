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

// Retrieval metrics under the self-retrieval protocol: each object's own
// description is the query and the object's rank over the whole index is
// recorded.

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crossfind/associate.hpp"
#include "crossfind/catalog.hpp"
#include "crossfind/encoder.hpp"
#include "crossfind/index.hpp"

namespace crossfind {

/// test = validation plus holdout; complete = every catalog object.
enum class EvalSplit { kTrain, kTest, kComplete };

std::string_view to_string(EvalSplit split);
EvalSplit parse_eval_split(std::string_view name);

/// 1/rank of `true_id` in `results`, 0 when absent. `results` must be
/// non-empty.
double reciprocal_rank(const std::vector<std::string>& results, std::string_view true_id);

struct RankSummary {
    double mrr = 0.0;
    double top1_accuracy = 0.0;   // percent
    double top10_accuracy = 0.0;  // percent
};

/// Aggregates 1-based ranks; rank 0 marks an absent item (contributes 0).
RankSummary summarize_ranks(std::span<const std::size_t> ranks);

/// Rank the entry at `true_position` would get in search_vector(index, query,
/// N, visual_focus): one plus the entries ahead of it under the tie rule.
std::size_t rank_of(const SearchIndex& index, std::span<const float> query, std::size_t true_position,
                    double visual_focus);

struct MetricsReport {
    EvalSplit split = EvalSplit::kComplete;
    std::size_t n = 0;     // queries
    std::size_t pool = 0;  // index entries ranked against
    double mrr = 0.0;
    double top1_accuracy = 0.0;
    double top10_accuracy = 0.0;
    std::string model_tag;
    double visual_focus = 1.0;
    std::vector<std::string> object_ids;
    std::vector<std::size_t> ranks;  // aligned with object_ids

    Json to_json() const;
};

struct EvalOptions {
    /// 1 scores the description against stored image vectors only, which is
    /// what the contrastive objective trains.
    double visual_focus = 1.0;
    std::string model_tag = "model";
    /// Description used as the query when re-encoding.
    PromptKind kind = PromptKind::kTemplate;
};

/// Uses each object's stored shared_text as its query vector. Identical to
/// re-encoding the description when the index was built with the same
/// encoder and heads.
MetricsReport evaluate(const SearchIndex& index, const DatasetCatalog& catalog, EvalSplit split,
                       const EvalOptions& options = {});

/// Encodes each object's `options.kind` description with `encoder`, projects
/// it with `heads` and ranks it.
MetricsReport evaluate(const SearchIndex& index, const DatasetCatalog& catalog, EvalSplit split,
                       const ProjectionHeads& heads, const EncoderGateway& encoder, const EvalOptions& options = {});

/// Aligned console table with one row per report.
std::string format_metrics_table(const std::vector<MetricsReport>& reports);

struct SimilarityMatrix {
    std::vector<std::string> row_ids;  // texts
    std::vector<std::string> col_ids;  // images
    Matrix values;

    /// Mean diagonal minus mean off-diagonal; square, same ids, n >= 2.
    double diagonal_margin() const;
};

/// cos(shared_text_i, shared_image_j) over `ids` in sorted order. Empty
/// `ids` means the whole index.
SimilarityMatrix similarity_matrix(const SearchIndex& index, std::vector<std::string> ids = {});

struct HeatmapFiles {
    std::filesystem::path image;   // binary PGM
    std::filesystem::path values;  // JSON
};

/// Maps [-1, 1] affinely onto 0..255 and writes `<stem>.pgm` plus
/// `<stem>.json` holding ids and full-precision values.
HeatmapFiles export_heatmap(const SimilarityMatrix& matrix, const std::filesystem::path& stem);

/// Reads a value dump written by export_heatmap.
SimilarityMatrix load_heatmap_values(const std::filesystem::path& path);

/// Pixel intensity for a similarity value.
unsigned char heatmap_pixel(double value);

}  // namespace crossfind
