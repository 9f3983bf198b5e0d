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

// Filesystem-backed pipeline stages shared by the command-line tool and the
// Python module. Every stage reads its inputs from the paths in a
// PipelineRunConfig, writes its outputs atomically and records the digests
// of what it consumed, so a later stage can refuse stale inputs and a
// repeated stage can skip work that is already complete.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "crossfind/associate.hpp"
#include "crossfind/catalog.hpp"
#include "crossfind/encoder.hpp"
#include "crossfind/eval.hpp"
#include "crossfind/index.hpp"
#include "crossfind/labeler.hpp"
#include "crossfind/service.hpp"

namespace crossfind {

struct PipelinePaths {
    std::filesystem::path manifest;
    /// Optional JSON lines {"object_id", "text", "kind"?} merged in at ingest.
    std::filesystem::path descriptions;
    std::filesystem::path catalog;
    std::filesystem::path image_embeddings;
    std::filesystem::path text_embeddings;
    std::filesystem::path heads;
    std::filesystem::path history;
    std::filesystem::path index;
    std::filesystem::path metrics;
    std::filesystem::path heatmap;  // stem; .pgm and .json are appended

    /// Conventional file names under `dir`.
    static PipelinePaths under(const std::filesystem::path& dir);
};

struct PipelineRunConfig {
    PipelinePaths paths;
    VlmBackendConfig vlm;
    EncoderBackendConfig encoder;
    TrainConfig train;
    PromptKind label_kind = PromptKind::kTemplate;
    /// Description kind fed to the text tower and used as the eval query.
    PromptKind text_kind = PromptKind::kTemplate;
    double train_fraction = 0.8;
    double holdout_fraction = 0.0;
    std::uint64_t split_seed = 0;
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string asset_base_url;

    void validate() const;
    Json to_json() const;
    /// Unset paths default to PipelinePaths::under(work_dir); relative paths
    /// resolve against `base_dir`.
    static PipelineRunConfig from_json(const Json& j, const std::filesystem::path& base_dir = {});
    /// Applies the seed to the split and the trainer.
    void set_seed(std::uint64_t seed);
};

PipelineRunConfig load_pipeline_config(const std::filesystem::path& path);

struct StageOptions {
    bool dry_run = false;
    bool force = false;
    /// Progress and summary lines; silent when null.
    std::function<void(const std::string&)> log;
};

struct StageResult {
    bool skipped = false;  // outputs were already complete
    std::vector<std::filesystem::path> written;
    std::string summary;
};

/// manifest -> catalog.
StageResult run_ingest(const PipelineRunConfig& config, const StageOptions& options);
/// JSON lines {"object_id", "vector": [...]} -> the image or text
/// embedding table, for embeddings computed outside this tool.
StageResult run_import_embeddings(const PipelineRunConfig& config, const std::string& modality,
                                  const std::filesystem::path& jsonl, const StageOptions& options);
/// Assigns train / validation (/ holdout) splits in the catalog.
StageResult run_split(const PipelineRunConfig& config, const StageOptions& options);
/// Labels unlabeled records with the configured VLM. A non-null `backend`
/// replaces the one built from config.vlm.
StageResult run_label(const PipelineRunConfig& config, const StageOptions& options,
                      VlmBackend* backend = nullptr);
/// Base embeddings for every image and every `text_kind` description.
StageResult run_encode(const PipelineRunConfig& config, const StageOptions& options);
/// Trains projection heads. Assigns splits first when the catalog has none.
StageResult run_train(const PipelineRunConfig& config, const StageOptions& options);
/// Projects every object with the trained heads.
StageResult run_index(const PipelineRunConfig& config, const StageOptions& options);

struct EvalRequest {
    EvalSplit split = EvalSplit::kComplete;
    std::string model_tag = "model";
    double visual_focus = 1.0;
    /// "identity" or a checkpoint path. When set, a throwaway index is built
    /// from the base embeddings with these heads instead of reading the
    /// index file; this is how baseline rows are produced.
    std::optional<std::string> heads_override;
};

/// Evaluates and appends the report to the metrics file.
MetricsReport run_eval(const PipelineRunConfig& config, const EvalRequest& request, const StageOptions& options);

/// Similarity heatmap over the first `limit` ids (sorted); 0 means all.
HeatmapFiles run_heatmap(const PipelineRunConfig& config, std::size_t limit, const StageOptions& options);

std::vector<RankedResult> run_search(const PipelineRunConfig& config, const SearchQuery& query);
std::vector<RankedResult> run_search_similar(const PipelineRunConfig& config, const std::string& object_id,
                                             std::size_t k);

/// Service configuration pointing at this pipeline's artifacts.
ServiceConfig service_config(const PipelineRunConfig& config);

/// Digest of every description of `kind`; embeddings record it so later
/// stages notice relabeling.
std::string descriptions_digest(const DatasetCatalog& catalog, PromptKind kind);

/// Process exit code for an error kind: 2 validation, 3 backend, 4 missing
/// prerequisite, 1 anything else.
int exit_code_for(ErrorKind kind);

}  // namespace crossfind
