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

// Projection heads that map frozen image and text tower outputs into one
// shared space, and the symmetric in-batch contrastive objective that trains
// them:
//
//   L = -1/N * sum_i [ log softmax_j(s(x_i, y_j))[i] + log softmax_j(s(y_i, x_j))[i] ]
//
// where s is cosine similarity of the projected, L2-normalized vectors,
// divided by an optional fixed temperature (1 leaves the objective as is).

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "crossfind/catalog.hpp"
#include "crossfind/embedding.hpp"
#include "crossfind/error.hpp"

namespace crossfind {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Bias-free linear maps: shared = W^T * base. `image` is (image_dim x
/// shared_dim), `text` is (text_dim x shared_dim).
struct ProjectionHeads {
    Matrix image;
    Matrix text;
    std::string version;

    std::size_t image_dim() const { return static_cast<std::size_t>(image.rows()); }
    std::size_t text_dim() const { return static_cast<std::size_t>(text.rows()); }
    std::size_t shared_dim() const { return static_cast<std::size_t>(image.cols()); }

    /// Finite entries and matching shared widths.
    void validate() const;
    /// validate() plus the production shapes 768x512 and 512x512.
    void validate_standard() const;

    /// Content digest of the float32-rounded weights; stable across save/load.
    std::string content_version() const;
    /// Sets `version` to content_version().
    void stamp();

    /// Identity embedding: entry (i, i) = 1 for i < min(rows, cols).
    static ProjectionHeads identity(std::size_t image_dim = kImageDim, std::size_t text_dim = kTextDim,
                                    std::size_t shared_dim = kSharedDim);
    /// Seeded Gaussian entries scaled by 1/sqrt(input dimension).
    static ProjectionHeads random(std::uint64_t seed, std::size_t image_dim = kImageDim,
                                  std::size_t text_dim = kTextDim, std::size_t shared_dim = kSharedDim);
};

/// L2-normalized W_img^T v. Throws kNumeric on a (near) zero projection.
std::vector<float> project_image(std::span<const float> v, const ProjectionHeads& heads);
/// L2-normalized W_txt^T v.
std::vector<float> project_text(std::span<const float> v, const ProjectionHeads& heads);

/// Dot product of two unit vectors, accumulated in double.
double cosine_sim(std::span<const float> x, std::span<const float> y);
double cosine_sim(const Vector& x, const Vector& y);

/// Row i of `images` and row i of `texts` are the positive pair for
/// object_ids[i]; every other pairing in the batch is a negative.
struct TrainingBatch {
    Matrix images;
    Matrix texts;
    std::vector<std::string> object_ids;

    std::size_t size() const { return static_cast<std::size_t>(images.rows()); }
    void validate() const;
};

struct LossValue {
    double value = 0.0;
    std::size_t n = 0;
};

struct LossGradients {
    LossValue loss;
    Matrix image;  // dL/dW_img
    Matrix text;   // dL/dW_txt
};

/// Loss over an explicit N x N similarity matrix S (S(i, j) = s(x_i, y_j)),
/// already divided by any temperature. Row softmax gives the image->text
/// term, column softmax the text->image term.
double contrastive_loss_from_similarity(const Matrix& similarity);

LossValue contrastive_loss(const TrainingBatch& batch, const ProjectionHeads& heads, double temperature = 1.0);

/// Analytic gradient through softmax, cosine similarity, L2 normalization
/// and the linear projections.
LossGradients loss_gradients(const TrainingBatch& batch, const ProjectionHeads& heads, double temperature = 1.0);

struct TrainConfig {
    std::size_t batch_size = 32;
    std::size_t epochs = 5;
    double weight_decay = 0.01;
    std::size_t warmup_steps = 50;
    double peak_lr = 2e-5;
    std::string schedule = "cosine";
    std::uint64_t seed = 0;
    /// Similarities are divided by this before the softmax. 1 = plain cosine.
    double temperature = 1.0;

    void validate() const;
    Json to_json() const;
    static TrainConfig from_json(const Json& j);
    std::string digest() const;
};

/// Linear warmup 0 -> peak over warmup_steps, then half-cosine decay to 0 at
/// total_steps. Requires 0 <= step <= total_steps and total_steps > warmup_steps.
double lr_at_step(std::size_t step, const TrainConfig& config, std::size_t total_steps);

struct StepRecord {
    std::size_t step = 0;
    double learning_rate = 0.0;
    double train_loss = 0.0;

    bool operator==(const StepRecord&) const = default;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;  // mean step loss over the epoch
    std::optional<double> validation_loss;

    bool operator==(const EpochRecord&) const = default;
};

struct TrainingHistory {
    std::vector<StepRecord> steps;
    std::vector<EpochRecord> epochs;
    double initial_loss = 0.0;  // full pass over the train split before any update
    double final_loss = 0.0;    // same pass after the last update

    /// JSON lines: one {"type":"step",...} per step then {"type":"epoch",...}.
    std::string to_jsonl() const;
    bool operator==(const TrainingHistory&) const = default;
};

struct TrainResult {
    ProjectionHeads heads;       // after the last step
    ProjectionHeads best_train;  // epoch with the lowest mean train loss
    std::optional<ProjectionHeads> best_validation;
    TrainingHistory history;
};

/// Thrown when the loss turns non-finite; carries the last epoch-boundary
/// checkpoint.
class TrainingDiverged : public Error {
 public:
    TrainingDiverged(const std::string& message, ProjectionHeads last_good)
        : Error(ErrorKind::kNumeric, message), last_good_(std::move(last_good)) {}
    const ProjectionHeads& last_good() const { return last_good_; }

 private:
    ProjectionHeads last_good_;
};

/// Base embeddings keyed by object id: images from the vision tower, texts
/// from the text tower applied to each object's description.
struct BaseEmbeddings {
    const EmbeddingTable* images = nullptr;
    const EmbeddingTable* texts = nullptr;
};

/// Gradient descent with decoupled weight decay over the catalog's train
/// split. Batches come from a seeded shuffle each epoch; a trailing single
/// sample joins the previous batch. Starts from `initial` when given,
/// otherwise from ProjectionHeads::random(config.seed).
TrainResult train(const DatasetCatalog& catalog, const BaseEmbeddings& bases, const TrainConfig& config,
                  const std::optional<ProjectionHeads>& initial = std::nullopt);

/// Optimizer steps train() takes for `n_train` objects under `config`.
std::size_t planned_steps(std::size_t n_train, const TrainConfig& config);

/// Batches (in sorted-id order) the listed objects and averages the loss.
double mean_loss(const std::vector<std::string>& ids, const BaseEmbeddings& bases, const ProjectionHeads& heads,
                 std::size_t batch_size, double temperature);

TrainingBatch make_batch(const std::vector<std::string>& ids, const BaseEmbeddings& bases);

void save_heads(const std::filesystem::path& path, const ProjectionHeads& heads, const Json& extra = Json::object());
ProjectionHeads load_heads(const std::filesystem::path& path, Json* header = nullptr);

}  // namespace crossfind
