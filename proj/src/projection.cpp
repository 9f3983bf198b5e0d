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
#include "crossfind/rng.hpp"

namespace crossfind {

namespace {

// Below this norm a projection is treated as the zero vector.
constexpr double kDegenerateNorm = 1e-12;

std::vector<float> to_float32(const Matrix& m) {
    std::vector<float> out(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        out[static_cast<std::size_t>(i)] = static_cast<float>(m.data()[i]);
    }
    return out;
}

Matrix from_float32(const BlobBlock& block) {
    require(block.shape.size() == 2, ErrorKind::kParse, "projection block '" + block.name + "' is not 2-D");
    Matrix m(static_cast<Eigen::Index>(block.shape[0]), static_cast<Eigen::Index>(block.shape[1]));
    for (std::size_t i = 0; i < block.data.size(); ++i) {
        m.data()[i] = static_cast<double>(block.data[i]);
    }
    return m;
}

std::vector<float> project(std::span<const float> v, const Matrix& w, const char* which) {
    require(v.size() == static_cast<std::size_t>(w.rows()), ErrorKind::kInvalidArgument,
            std::string(which) + " projection expects " + std::to_string(w.rows()) + "-d input, got " +
                std::to_string(v.size()));
    Vector in(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
        require(std::isfinite(v[i]), ErrorKind::kNumeric, std::string(which) + " input has non-finite components");
        in[static_cast<Eigen::Index>(i)] = v[i];
    }
    const Vector z = w.transpose() * in;
    const double norm = z.norm();
    require(std::isfinite(norm) && norm > kDegenerateNorm, ErrorKind::kNumeric,
            std::string(which) + " projection is degenerate (zero vector)");
    std::vector<float> out(static_cast<std::size_t>(z.size()));
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        out[static_cast<std::size_t>(i)] = static_cast<float>(z[i] / norm);
    }
    return out;
}

}  // namespace

void ProjectionHeads::validate() const {
    require(image.size() > 0 && text.size() > 0, ErrorKind::kInvalidArgument, "projection heads are empty");
    require(image.cols() == text.cols(), ErrorKind::kInvalidArgument,
            "image and text heads disagree on the shared dimension");
    require(image.allFinite() && text.allFinite(), ErrorKind::kNumeric, "projection heads hold non-finite entries");
}

void ProjectionHeads::validate_standard() const {
    validate();
    require(image_dim() == kImageDim && text_dim() == kTextDim && shared_dim() == kSharedDim,
            ErrorKind::kInvalidArgument,
            "projection heads must be 768x512 (image) and 512x512 (text), got " + std::to_string(image.rows()) + "x" +
                std::to_string(image.cols()) + " and " + std::to_string(text.rows()) + "x" +
                std::to_string(text.cols()));
}

std::string ProjectionHeads::content_version() const {
    const auto a = to_float32(image);
    const auto b = to_float32(text);
    std::string bytes;
    bytes.append(reinterpret_cast<const char*>(a.data()), a.size() * sizeof(float));
    bytes.append(reinterpret_cast<const char*>(b.data()), b.size() * sizeof(float));
    bytes += std::to_string(image.rows()) + "x" + std::to_string(image.cols()) + "/" + std::to_string(text.rows());
    return sha256_hex(bytes).substr(0, 16);
}

void ProjectionHeads::stamp() { version = content_version(); }

ProjectionHeads ProjectionHeads::identity(std::size_t image_dim, std::size_t text_dim, std::size_t shared_dim) {
    ProjectionHeads h;
    h.image = Matrix::Identity(static_cast<Eigen::Index>(image_dim), static_cast<Eigen::Index>(shared_dim));
    h.text = Matrix::Identity(static_cast<Eigen::Index>(text_dim), static_cast<Eigen::Index>(shared_dim));
    h.stamp();
    return h;
}

ProjectionHeads ProjectionHeads::random(std::uint64_t seed, std::size_t image_dim, std::size_t text_dim,
                                        std::size_t shared_dim) {
    Rng rng(seed);
    auto fill = [&](std::size_t rows) {
        Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(shared_dim));
        const double scale = 1.0 / std::sqrt(static_cast<double>(rows));
        for (Eigen::Index i = 0; i < m.size(); ++i) {
            m.data()[i] = rng.normal() * scale;
        }
        return m;
    };
    ProjectionHeads h;
    h.image = fill(image_dim);
    h.text = fill(text_dim);
    h.stamp();
    return h;
}

std::vector<float> project_image(std::span<const float> v, const ProjectionHeads& heads) {
    return project(v, heads.image, "image");
}

std::vector<float> project_text(std::span<const float> v, const ProjectionHeads& heads) {
    return project(v, heads.text, "text");
}

double cosine_sim(std::span<const float> x, std::span<const float> y) {
    require(x.size() == y.size(), ErrorKind::kInvalidArgument,
            "cosine_sim dimension mismatch: " + std::to_string(x.size()) + " vs " + std::to_string(y.size()));
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        acc += static_cast<double>(x[i]) * static_cast<double>(y[i]);
    }
    return acc;
}

double cosine_sim(const Vector& x, const Vector& y) {
    require(x.size() == y.size(), ErrorKind::kInvalidArgument, "cosine_sim dimension mismatch");
    return x.dot(y);
}

void save_heads(const std::filesystem::path& path, const ProjectionHeads& heads, const Json& extra) {
    heads.validate();
    BlobFile blob;
    blob.header = extra;
    blob.header["format"] = "crossfind-heads";
    blob.header["version"] = heads.version.empty() ? heads.content_version() : heads.version;
    blob.header["shapes"] = {{"image_projection", {heads.image.rows(), heads.image.cols()}},
                             {"text_projection", {heads.text.rows(), heads.text.cols()}}};
    blob.blocks.push_back({"image_projection",
                           {static_cast<std::size_t>(heads.image.rows()), static_cast<std::size_t>(heads.image.cols())},
                           to_float32(heads.image)});
    blob.blocks.push_back({"text_projection",
                           {static_cast<std::size_t>(heads.text.rows()), static_cast<std::size_t>(heads.text.cols())},
                           to_float32(heads.text)});
    write_blob(path, blob);
}

ProjectionHeads load_heads(const std::filesystem::path& path, Json* header) {
    const BlobFile blob = read_blob(path);
    require(blob.header.value("format", "") == "crossfind-heads", ErrorKind::kParse,
            path.string() + " is not a projection-heads checkpoint");
    ProjectionHeads heads;
    heads.image = from_float32(blob.block("image_projection"));
    heads.text = from_float32(blob.block("text_projection"));
    heads.version = blob.header.value("version", "");
    heads.validate();
    if (header != nullptr) {
        *header = blob.header;
    }
    return heads;
}

}  // namespace crossfind
