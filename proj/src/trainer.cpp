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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "crossfind/associate.hpp"
#include "crossfind/rng.hpp"

namespace crossfind {

void TrainConfig::validate() const {
    require(batch_size >= 2, ErrorKind::kInvalidArgument, "batch_size must be at least 2 (in-batch negatives)");
    require(epochs >= 1, ErrorKind::kInvalidArgument, "epochs must be at least 1");
    require(peak_lr > 0.0 && std::isfinite(peak_lr), ErrorKind::kInvalidArgument, "peak_lr must be positive");
    require(weight_decay >= 0.0 && std::isfinite(weight_decay), ErrorKind::kInvalidArgument,
            "weight_decay must be non-negative");
    require(schedule == "cosine", ErrorKind::kInvalidArgument, "only the cosine schedule is supported");
    require(temperature > 0.0 && std::isfinite(temperature), ErrorKind::kInvalidArgument,
            "temperature must be positive");
}

Json TrainConfig::to_json() const {
    return {{"batch_size", batch_size},   {"epochs", epochs},   {"weight_decay", weight_decay},
            {"warmup_steps", warmup_steps}, {"peak_lr", peak_lr}, {"schedule", schedule},
            {"seed", seed},               {"temperature", temperature}};
}

TrainConfig TrainConfig::from_json(const Json& j) {
    TrainConfig c;
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.warmup_steps = j.value("warmup_steps", c.warmup_steps);
    c.peak_lr = j.value("peak_lr", c.peak_lr);
    c.schedule = j.value("schedule", c.schedule);
    c.seed = j.value("seed", c.seed);
    c.temperature = j.value("temperature", c.temperature);
    return c;
}

std::string TrainConfig::digest() const { return sha256_hex(to_json().dump()).substr(0, 16); }

double lr_at_step(std::size_t step, const TrainConfig& config, std::size_t total_steps) {
    require(total_steps > config.warmup_steps, ErrorKind::kInvalidArgument,
            "total_steps (" + std::to_string(total_steps) + ") must exceed warmup_steps (" +
                std::to_string(config.warmup_steps) + ")");
    require(step <= total_steps, ErrorKind::kInvalidArgument,
            "step " + std::to_string(step) + " outside [0, " + std::to_string(total_steps) + "]");
    if (step < config.warmup_steps) {
        return config.peak_lr * static_cast<double>(step) / static_cast<double>(config.warmup_steps);
    }
    const double progress = static_cast<double>(step - config.warmup_steps) /
                            static_cast<double>(total_steps - config.warmup_steps);
    return config.peak_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

std::string TrainingHistory::to_jsonl() const {
    std::string out;
    for (const auto& s : steps) {
        out += Json{{"type", "step"}, {"step", s.step}, {"learning_rate", s.learning_rate}, {"train_loss", s.train_loss}}
                   .dump();
        out.push_back('\n');
    }
    for (const auto& e : epochs) {
        Json j = {{"type", "epoch"}, {"epoch", e.epoch}, {"train_loss", e.train_loss}};
        j["validation_loss"] = e.validation_loss ? Json(*e.validation_loss) : Json(nullptr);
        out += j.dump();
        out.push_back('\n');
    }
    out += Json{{"type", "summary"}, {"initial_loss", initial_loss}, {"final_loss", final_loss}}.dump();
    out.push_back('\n');
    return out;
}

TrainingBatch make_batch(const std::vector<std::string>& ids, const BaseEmbeddings& bases) {
    require(bases.images != nullptr && bases.texts != nullptr, ErrorKind::kInvalidArgument,
            "base embedding tables not provided");
    const auto n = static_cast<Eigen::Index>(ids.size());
    TrainingBatch batch;
    batch.images.resize(n, static_cast<Eigen::Index>(bases.images->dimension()));
    batch.texts.resize(n, static_cast<Eigen::Index>(bases.texts->dimension()));
    batch.object_ids = ids;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto img = bases.images->at(ids[static_cast<std::size_t>(i)]);
        const auto txt = bases.texts->at(ids[static_cast<std::size_t>(i)]);
        for (std::size_t k = 0; k < img.size(); ++k) {
            batch.images(i, static_cast<Eigen::Index>(k)) = img[k];
        }
        for (std::size_t k = 0; k < txt.size(); ++k) {
            batch.texts(i, static_cast<Eigen::Index>(k)) = txt[k];
        }
    }
    return batch;
}

namespace {

/// Consecutive chunks of `batch_size`; a trailing single id joins the previous chunk.
std::vector<std::vector<std::string>> chunk(const std::vector<std::string>& ids, std::size_t batch_size) {
    std::vector<std::vector<std::string>> out;
    for (std::size_t start = 0; start < ids.size(); start += batch_size) {
        const std::size_t end = std::min(ids.size(), start + batch_size);
        if (end - start == 1 && !out.empty()) {
            out.back().push_back(ids[start]);
        } else {
            out.emplace_back(ids.begin() + static_cast<std::ptrdiff_t>(start),
                             ids.begin() + static_cast<std::ptrdiff_t>(end));
        }
    }
    return out;
}

std::size_t batches_per_epoch(std::size_t n, std::size_t batch_size) {
    const std::size_t full = n / batch_size;
    const std::size_t rest = n % batch_size;
    if (rest >= 2 || full == 0) {
        return full + 1;
    }
    return full;
}

}  // namespace

std::size_t planned_steps(std::size_t n_train, const TrainConfig& config) {
    return batches_per_epoch(n_train, config.batch_size) * config.epochs;
}

double mean_loss(const std::vector<std::string>& ids, const BaseEmbeddings& bases, const ProjectionHeads& heads,
                 std::size_t batch_size, double temperature) {
    std::vector<std::string> sorted = ids;
    std::sort(sorted.begin(), sorted.end());
    const auto batches = chunk(sorted, batch_size);
    double total = 0.0;
    for (const auto& b : batches) {
        total += contrastive_loss(make_batch(b, bases), heads, temperature).value;
    }
    return total / static_cast<double>(batches.size());
}

TrainResult train(const DatasetCatalog& catalog, const BaseEmbeddings& bases, const TrainConfig& config,
                  const std::optional<ProjectionHeads>& initial) {
    config.validate();
    require(bases.images != nullptr && bases.texts != nullptr, ErrorKind::kInvalidArgument,
            "base embedding tables not provided");
    require(!catalog.splits().empty(), ErrorKind::kPrerequisite, "catalog has no split assignment");

    std::vector<std::string> train_ids = catalog.ids_in(Split::kTrain);
    std::vector<std::string> val_ids = catalog.ids_in(Split::kValidation);
    require(train_ids.size() >= 2, ErrorKind::kInvalidArgument, "train split needs at least 2 objects");

    std::vector<std::string> missing;
    for (const auto* ids : {&train_ids, &val_ids}) {
        for (const auto& id : *ids) {
            if (!bases.images->contains(id) || !bases.texts->contains(id)) {
                missing.push_back(id);
            }
        }
    }
    require(missing.empty(), ErrorKind::kPrerequisite, "missing base embeddings for: " + join_ids(missing));

    ProjectionHeads heads = initial ? *initial
                                    : ProjectionHeads::random(config.seed, bases.images->dimension(),
                                                              bases.texts->dimension(), kSharedDim);
    heads.validate();
    require(heads.image_dim() == bases.images->dimension() && heads.text_dim() == bases.texts->dimension(),
            ErrorKind::kInvalidArgument, "initial heads do not match the base embedding widths");

    const std::size_t total_steps = planned_steps(train_ids.size(), config);
    require(total_steps > config.warmup_steps, ErrorKind::kInvalidArgument,
            std::to_string(train_ids.size()) + " train objects at batch size " + std::to_string(config.batch_size) +
                " give " + std::to_string(total_steps) + " optimizer steps over " + std::to_string(config.epochs) +
                " epochs, not more than the " + std::to_string(config.warmup_steps) + " warmup steps");

    TrainResult result;
    TrainingHistory& history = result.history;
    history.initial_loss = mean_loss(train_ids, bases, heads, config.batch_size, config.temperature);

    const bool has_validation = val_ids.size() >= 2;
    double best_train = std::numeric_limits<double>::infinity();
    double best_val = std::numeric_limits<double>::infinity();
    ProjectionHeads last_good = heads;
    Rng rng(config.seed ^ 0x5eedba7c4e5ULL);
    std::sort(train_ids.begin(), train_ids.end());

    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::vector<std::string> order = train_ids;
        rng.shuffle(std::span<std::string>(order));
        double epoch_loss = 0.0;
        const auto batches = chunk(order, config.batch_size);
        for (const auto& ids : batches) {
            const double lr = lr_at_step(step, config, total_steps);
            LossGradients g;
            try {
                g = loss_gradients(make_batch(ids, bases), heads, config.temperature);
            } catch (const Error& e) {
                if (e.kind() == ErrorKind::kNumeric) {
                    throw TrainingDiverged("training diverged at step " + std::to_string(step) + ": " + e.what(),
                                           last_good);
                }
                throw;
            }
            if (!std::isfinite(g.loss.value) || !g.image.allFinite() || !g.text.allFinite()) {
                throw TrainingDiverged("training diverged at step " + std::to_string(step) + " (non-finite loss)",
                                       last_good);
            }
            history.steps.push_back({step, lr, g.loss.value});
            epoch_loss += g.loss.value;

            // Decoupled weight decay, then the gradient step.
            heads.image = heads.image * (1.0 - lr * config.weight_decay) - lr * g.image;
            heads.text = heads.text * (1.0 - lr * config.weight_decay) - lr * g.text;
            ++step;
        }
        if (!heads.image.allFinite() || !heads.text.allFinite()) {
            throw TrainingDiverged("training diverged in epoch " + std::to_string(epoch), last_good);
        }
        heads.stamp();
        last_good = heads;

        EpochRecord record{epoch, epoch_loss / static_cast<double>(batches.size()), std::nullopt};
        if (has_validation) {
            record.validation_loss = mean_loss(val_ids, bases, heads, config.batch_size, config.temperature);
            if (*record.validation_loss < best_val) {
                best_val = *record.validation_loss;
                result.best_validation = heads;
            }
        }
        if (record.train_loss < best_train) {
            best_train = record.train_loss;
            result.best_train = heads;
        }
        history.epochs.push_back(record);
    }

    history.final_loss = mean_loss(train_ids, bases, heads, config.batch_size, config.temperature);
    result.heads = std::move(heads);
    return result;
}

}  // namespace crossfind
