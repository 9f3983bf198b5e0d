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


#include "crossfind/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace crossfind {

namespace {

std::vector<std::string> split_ids(const DatasetCatalog& catalog, EvalSplit split) {
    std::vector<std::string> ids;
    if (split == EvalSplit::kComplete) {
        for (const auto& r : catalog.records()) {
            ids.push_back(r.object_id);
        }
    } else {
        require(!catalog.splits().empty(), ErrorKind::kPrerequisite,
                "catalog has no split assignment; run split or evaluate the complete set");
        if (split == EvalSplit::kTrain) {
            ids = catalog.ids_in(Split::kTrain);
        } else {
            ids = catalog.ids_in(Split::kValidation);
            const auto holdout = catalog.ids_in(Split::kHoldout);
            ids.insert(ids.end(), holdout.begin(), holdout.end());
        }
    }
    std::sort(ids.begin(), ids.end());
    require(!ids.empty(), ErrorKind::kInvalidArgument, "split '" + std::string(to_string(split)) + "' is empty");
    return ids;
}

void check_ready(const SearchIndex& index, const DatasetCatalog& catalog, const std::vector<std::string>& ids,
                 const EvalOptions& options, bool need_kind) {
    require(options.visual_focus >= 0.0 && options.visual_focus <= 1.0, ErrorKind::kInvalidArgument,
            "visual_focus must be in [0, 1]");
    std::vector<std::string> unlabeled;
    std::vector<std::string> unindexed;
    for (const auto& id : ids) {
        const bool labeled = need_kind ? catalog.find_description(id, options.kind) != nullptr
                                       : !catalog.descriptions_of(id).empty();
        if (!labeled) {
            unlabeled.push_back(id);
        }
        if (!index.contains(id)) {
            unindexed.push_back(id);
        }
    }
    require(unlabeled.empty(), ErrorKind::kNotLabeled, "objects without descriptions: " + join_ids(unlabeled));
    require(unindexed.empty(), ErrorKind::kPrerequisite, "objects missing from the index: " + join_ids(unindexed));
}

MetricsReport finish(EvalSplit split, const SearchIndex& index, const EvalOptions& options,
                     std::vector<std::string> ids, std::vector<std::size_t> ranks) {
    const RankSummary s = summarize_ranks(ranks);
    MetricsReport r;
    r.split = split;
    r.n = ids.size();
    r.pool = index.size();
    r.mrr = s.mrr;
    r.top1_accuracy = s.top1_accuracy;
    r.top10_accuracy = s.top10_accuracy;
    r.model_tag = options.model_tag;
    r.visual_focus = options.visual_focus;
    r.object_ids = std::move(ids);
    r.ranks = std::move(ranks);
    return r;
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

}  // namespace

std::string_view to_string(EvalSplit split) {
    switch (split) {
        case EvalSplit::kTrain:
            return "train";
        case EvalSplit::kTest:
            return "test";
        case EvalSplit::kComplete:
            return "complete";
    }
    return "complete";
}

EvalSplit parse_eval_split(std::string_view name) {
    if (name == "train") {
        return EvalSplit::kTrain;
    }
    if (name == "test") {
        return EvalSplit::kTest;
    }
    if (name == "complete") {
        return EvalSplit::kComplete;
    }
    fail(ErrorKind::kInvalidArgument, "unknown split '" + std::string(name) + "' (train, test, complete)");
}

double reciprocal_rank(const std::vector<std::string>& results, std::string_view true_id) {
    require(!results.empty(), ErrorKind::kInvalidArgument, "reciprocal_rank needs a non-empty result list");
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (results[i] == true_id) {
            return 1.0 / static_cast<double>(i + 1);
        }
    }
    return 0.0;
}

RankSummary summarize_ranks(std::span<const std::size_t> ranks) {
    require(!ranks.empty(), ErrorKind::kInvalidArgument, "no ranks to summarize");
    double rr = 0.0;
    std::size_t top1 = 0;
    std::size_t top10 = 0;
    for (const std::size_t r : ranks) {
        if (r == 0) {
            continue;
        }
        rr += 1.0 / static_cast<double>(r);
        top1 += r == 1 ? 1 : 0;
        top10 += r <= 10 ? 1 : 0;
    }
    const auto n = static_cast<double>(ranks.size());
    return {rr / n, 100.0 * static_cast<double>(top1) / n, 100.0 * static_cast<double>(top10) / n};
}

std::size_t rank_of(const SearchIndex& index, std::span<const float> query, std::size_t true_position,
                    double visual_focus) {
    require(true_position < index.size(), ErrorKind::kInvalidArgument, "true position outside the index");
    require(query.size() == index.shared_dim(), ErrorKind::kInvalidArgument, "query width does not match the index");
    const auto& ids = index.ids();
    auto fused = [&](std::size_t i) {
        return fuse_scores(visual_focus, dot_score(query, index.shared_image(i)),
                           dot_score(query, index.shared_text(i)));
    };
    const double target = fused(true_position);
    std::size_t ahead = 0;
    for (std::size_t i = 0; i < index.size(); ++i) {
        if (i != true_position && ranks_before(fused(i), ids[i], target, ids[true_position])) {
            ++ahead;
        }
    }
    return ahead + 1;
}

Json MetricsReport::to_json() const {
    return {{"split", to_string(split)},
            {"n", n},
            {"pool", pool},
            {"mrr", mrr},
            {"top1_accuracy", top1_accuracy},
            {"top10_accuracy", top10_accuracy},
            {"model_tag", model_tag},
            {"visual_focus", visual_focus}};
}

MetricsReport evaluate(const SearchIndex& index, const DatasetCatalog& catalog, EvalSplit split,
                       const EvalOptions& options) {
    auto ids = split_ids(catalog, split);
    check_ready(index, catalog, ids, options, false);
    std::vector<std::size_t> ranks;
    ranks.reserve(ids.size());
    for (const auto& id : ids) {
        const std::size_t p = index.position(id);
        ranks.push_back(rank_of(index, index.shared_text(p), p, options.visual_focus));
    }
    return finish(split, index, options, std::move(ids), std::move(ranks));
}

MetricsReport evaluate(const SearchIndex& index, const DatasetCatalog& catalog, EvalSplit split,
                       const ProjectionHeads& heads, const EncoderGateway& encoder, const EvalOptions& options) {
    auto ids = split_ids(catalog, split);
    check_ready(index, catalog, ids, options, true);
    require(heads.version.empty() || heads.version == index.heads_version(), ErrorKind::kPrerequisite,
            "projection heads do not match the index");
    std::vector<std::size_t> ranks;
    ranks.reserve(ids.size());
    for (const auto& id : ids) {
        const Description* d = catalog.find_description(id, options.kind);
        const auto base = encoder.encode_text(d->text, id);
        const auto q = project_text(base.vector, heads);
        ranks.push_back(rank_of(index, q, index.position(id), options.visual_focus));
    }
    return finish(split, index, options, std::move(ids), std::move(ranks));
}

std::string format_metrics_table(const std::vector<MetricsReport>& reports) {
    const std::vector<std::string> head = {"Split", "Size", "Model", "MRR (0-1)", "Top-1 Acc (%)", "Top-10 Acc (%)"};
    std::vector<std::vector<std::string>> rows = {head};
    for (const auto& r : reports) {
        rows.push_back({std::string(to_string(r.split)), std::to_string(r.n), r.model_tag, fixed(r.mrr, 2),
                        fixed(r.top1_accuracy, 2), fixed(r.top10_accuracy, 2)});
    }
    std::vector<std::size_t> width(head.size(), 0);
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            width[c] = std::max(width[c], row[c].size());
        }
    }
    std::ostringstream out;
    auto rule = [&] {
        for (std::size_t c = 0; c < width.size(); ++c) {
            out << (c == 0 ? "" : "-+-") << std::string(width[c], '-');
        }
        out << '\n';
    };
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t c = 0; c < rows[i].size(); ++c) {
            const std::string& cell = rows[i][c];
            const std::string pad(width[c] - cell.size(), ' ');
            out << (c == 0 ? "" : " | ") << (c < 3 ? cell + pad : pad + cell);
        }
        out << '\n';
        if (i == 0) {
            rule();
        }
    }
    return out.str();
}

double SimilarityMatrix::diagonal_margin() const {
    const auto n = values.rows();
    require(n >= 2 && values.cols() == n && row_ids == col_ids, ErrorKind::kInvalidArgument,
            "diagonal margin needs a square matrix over the same ids with n >= 2");
    const double diag = values.diagonal().sum();
    const double off = values.sum() - diag;
    return diag / static_cast<double>(n) - off / static_cast<double>(n * (n - 1));
}

SimilarityMatrix similarity_matrix(const SearchIndex& index, std::vector<std::string> ids) {
    if (ids.empty()) {
        ids = index.ids();
    }
    std::sort(ids.begin(), ids.end());
    std::vector<std::string> unknown;
    for (const auto& id : ids) {
        if (!index.contains(id)) {
            unknown.push_back(id);
        }
    }
    require(unknown.empty(), ErrorKind::kNotFound, "ids not in the index: " + join_ids(unknown));
    const auto n = static_cast<Eigen::Index>(ids.size());
    SimilarityMatrix m{ids, ids, Matrix(n, n)};
    std::vector<std::size_t> pos;
    for (const auto& id : ids) {
        pos.push_back(index.position(id));
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            m.values(i, j) = dot_score(index.shared_text(pos[static_cast<std::size_t>(i)]),
                                       index.shared_image(pos[static_cast<std::size_t>(j)]));
        }
    }
    return m;
}

unsigned char heatmap_pixel(double value) {
    const double clamped = std::clamp(value, -1.0, 1.0);
    return static_cast<unsigned char>(std::lround((clamped + 1.0) * 0.5 * 255.0));
}

HeatmapFiles export_heatmap(const SimilarityMatrix& matrix, const std::filesystem::path& stem) {
    const auto rows = matrix.values.rows();
    const auto cols = matrix.values.cols();
    require(rows > 0 && cols > 0 && matrix.row_ids.size() == static_cast<std::size_t>(rows) &&
                matrix.col_ids.size() == static_cast<std::size_t>(cols),
            ErrorKind::kInvalidArgument, "similarity matrix shape does not match its ids");
    require(matrix.values.allFinite(), ErrorKind::kNumeric, "similarity matrix has non-finite values");

    HeatmapFiles files{stem, stem};
    files.image += ".pgm";
    files.values += ".json";

    std::string pgm = "P5\n" + std::to_string(cols) + " " + std::to_string(rows) + "\n255\n";
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            pgm.push_back(static_cast<char>(heatmap_pixel(matrix.values(i, j))));
        }
    }
    Json values = Json::array();
    for (Eigen::Index i = 0; i < rows; ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < cols; ++j) {
            row.push_back(matrix.values(i, j));
        }
        values.push_back(std::move(row));
    }
    const Json dump = {{"format", "crossfind-similarity"},
                       {"row_ids", matrix.row_ids},
                       {"col_ids", matrix.col_ids},
                       {"values", values}};
    write_file_atomic(files.image, pgm);
    write_file_atomic(files.values, dump.dump());
    return files;
}

SimilarityMatrix load_heatmap_values(const std::filesystem::path& path) {
    try {
        const Json doc = Json::parse(read_file(path));
        require(doc.value("format", "") == "crossfind-similarity", ErrorKind::kParse,
                path.string() + " is not a similarity dump");
        SimilarityMatrix m;
        m.row_ids = doc.at("row_ids").get<std::vector<std::string>>();
        m.col_ids = doc.at("col_ids").get<std::vector<std::string>>();
        const auto& v = doc.at("values");
        m.values.resize(static_cast<Eigen::Index>(m.row_ids.size()), static_cast<Eigen::Index>(m.col_ids.size()));
        require(v.size() == m.row_ids.size(), ErrorKind::kParse, "similarity dump row count mismatch");
        for (std::size_t i = 0; i < v.size(); ++i) {
            require(v[i].size() == m.col_ids.size(), ErrorKind::kParse, "similarity dump column count mismatch");
            for (std::size_t j = 0; j < v[i].size(); ++j) {
                m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[i][j].get<double>();
            }
        }
        return m;
    } catch (const Json::exception& e) {
        fail(ErrorKind::kParse, path.string() + ": " + e.what());
    }
}

}  // namespace crossfind
