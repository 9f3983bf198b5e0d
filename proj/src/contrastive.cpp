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

#include <cmath>

#include "crossfind/associate.hpp"

namespace crossfind {

namespace {

struct Normalized {
    Matrix unit;    // rows scaled to unit length
    Vector norms;   // original row norms
};

Normalized normalize_rows(const Matrix& m, const std::vector<std::string>& ids, const char* which) {
    Normalized out{m, Vector(m.rows())};
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const double n = m.row(i).norm();
        if (!(std::isfinite(n) && n > 1e-12)) {
            const std::string id = static_cast<std::size_t>(i) < ids.size() ? ids[static_cast<std::size_t>(i)]
                                                                             : std::to_string(i);
            fail(ErrorKind::kNumeric, std::string(which) + " projection of '" + id + "' is degenerate (norm " +
                                          std::to_string(n) + ")");
        }
        out.norms[i] = n;
        out.unit.row(i) /= n;
    }
    return out;
}

struct Forward {
    Normalized images;
    Normalized texts;
    Matrix similarity;  // already divided by the temperature
};

Forward forward(const TrainingBatch& batch, const ProjectionHeads& heads, double temperature) {
    batch.validate();
    heads.validate();
    require(temperature > 0.0 && std::isfinite(temperature), ErrorKind::kInvalidArgument,
            "temperature must be positive");
    require(static_cast<std::size_t>(batch.images.cols()) == heads.image_dim() &&
                static_cast<std::size_t>(batch.texts.cols()) == heads.text_dim(),
            ErrorKind::kInvalidArgument, "batch widths do not match the projection heads");
    Forward f{normalize_rows(batch.images * heads.image, batch.object_ids, "image"),
              normalize_rows(batch.texts * heads.text, batch.object_ids, "text"), Matrix()};
    f.similarity = (f.images.unit * f.texts.unit.transpose()) / temperature;
    for (Eigen::Index i = 0; i < f.similarity.rows(); ++i) {
        for (Eigen::Index j = 0; j < f.similarity.cols(); ++j) {
            if (!std::isfinite(f.similarity(i, j))) {
                fail(ErrorKind::kNumeric, "non-finite similarity at pair (" + std::to_string(i) + ", " +
                                              std::to_string(j) + ")");
            }
        }
    }
    return f;
}

/// log-sum-exp of each row and of each column, with max subtraction.
void log_partition(const Matrix& s, Vector& rows, Vector& cols) {
    const auto n = s.rows();
    rows.resize(n);
    cols.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double m = s.row(i).maxCoeff();
        rows[i] = m + std::log((s.row(i).array() - m).exp().sum());
    }
    for (Eigen::Index j = 0; j < n; ++j) {
        const double m = s.col(j).maxCoeff();
        cols[j] = m + std::log((s.col(j).array() - m).exp().sum());
    }
}

}  // namespace

void TrainingBatch::validate() const {
    require(images.rows() == texts.rows(), ErrorKind::kInvalidArgument, "batch image and text counts differ");
    require(object_ids.empty() || object_ids.size() == static_cast<std::size_t>(images.rows()),
            ErrorKind::kInvalidArgument, "batch id list does not align with its vectors");
    require(images.rows() >= 2, ErrorKind::kInvalidArgument,
            "contrastive batches need at least 2 pairs (in-batch negatives)");
}

double contrastive_loss_from_similarity(const Matrix& s) {
    require(s.rows() == s.cols() && s.rows() >= 2, ErrorKind::kInvalidArgument,
            "similarity matrix must be square with N >= 2");
    Vector rows;
    Vector cols;
    log_partition(s, rows, cols);
    double total = 0.0;
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
        total += (rows[i] - s(i, i)) + (cols[i] - s(i, i));
    }
    return total / static_cast<double>(s.rows());
}

LossValue contrastive_loss(const TrainingBatch& batch, const ProjectionHeads& heads, double temperature) {
    const Forward f = forward(batch, heads, temperature);
    return {contrastive_loss_from_similarity(f.similarity), batch.size()};
}

LossGradients loss_gradients(const TrainingBatch& batch, const ProjectionHeads& heads, double temperature) {
    const Forward f = forward(batch, heads, temperature);
    const Matrix& s = f.similarity;
    const auto n = s.rows();
    const double inv_n = 1.0 / static_cast<double>(n);

    Vector rows;
    Vector cols;
    log_partition(s, rows, cols);

    // dL/dS(i, j) = (softmax_row(i)[j] + softmax_col(j)[i] - 2 [i == j]) / N
    Matrix g(n, n);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        total += (rows[i] - s(i, i)) + (cols[i] - s(i, i));
        for (Eigen::Index j = 0; j < n; ++j) {
            g(i, j) = (std::exp(s(i, j) - rows[i]) + std::exp(s(i, j) - cols[j]) - (i == j ? 2.0 : 0.0)) * inv_n;
        }
    }

    // S = U_hat V_hat^T / t
    Matrix d_img_unit = (g * f.texts.unit) / temperature;
    Matrix d_txt_unit = (g.transpose() * f.images.unit) / temperature;

    // Through u_hat = u / |u|: du = (du_hat - (du_hat . u_hat) u_hat) / |u|
    auto through_norm = [](Matrix& d, const Normalized& nz) {
        for (Eigen::Index i = 0; i < d.rows(); ++i) {
            const double along = d.row(i).dot(nz.unit.row(i));
            d.row(i) = (d.row(i) - along * nz.unit.row(i)) / nz.norms[i];
        }
    };
    through_norm(d_img_unit, f.images);
    through_norm(d_txt_unit, f.texts);

    LossGradients out;
    out.loss = {total * inv_n, static_cast<std::size_t>(n)};
    out.image = batch.images.transpose() * d_img_unit;
    out.text = batch.texts.transpose() * d_txt_unit;
    return out;
}

}  // namespace crossfind
