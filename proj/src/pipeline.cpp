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


#include "crossfind/pipeline.hpp"

#include <algorithm>
#include <sstream>

namespace crossfind {

namespace fs = std::filesystem;

namespace {

void say(const StageOptions& o, const std::string& line) {
    if (o.log) {
        o.log(line);
    }
}

void need_file(const fs::path& path, const std::string& what, const std::string& stage) {
    require(!path.empty(), ErrorKind::kInvalidArgument, "no path configured for " + what);
    require(fs::exists(path), ErrorKind::kPrerequisite,
            "missing " + what + " (" + path.string() + "); run `crossfind " + stage + "` first");
}

fs::path resolve(const fs::path& base, const std::string& p) {
    if (p.empty()) {
        return {};
    }
    const fs::path path(p);
    return (path.is_absolute() || base.empty() ? path : base / path).lexically_normal();
}

fs::path sibling(const fs::path& path, const std::string& tag) {
    fs::path out = path;
    out.replace_filename(path.stem().string() + "." + tag + path.extension().string());
    return out;
}

DatasetCatalog load_catalog_for(const PipelineRunConfig& c) {
    need_file(c.paths.catalog, "catalog", "ingest");
    return load_catalog(c.paths.catalog);
}

void require_labeled(const DatasetCatalog& catalog, PromptKind kind) {
    std::vector<std::string> missing;
    for (const auto& r : catalog.records()) {
        if (catalog.find_description(r.object_id, kind) == nullptr) {
            missing.push_back(r.object_id);
        }
    }
    require(missing.empty(), ErrorKind::kPrerequisite,
            std::to_string(missing.size()) + " catalog objects lack a " + std::string(to_string(kind)) +
                " description (run `crossfind label`): " + join_ids(missing));
}

struct Bases {
    EmbeddingTable images;
    EmbeddingTable texts;
};

/// Loads both tables and refuses text embeddings made from other descriptions.
Bases load_bases(const PipelineRunConfig& c, const DatasetCatalog& catalog) {
    need_file(c.paths.image_embeddings, "image embeddings", "encode");
    need_file(c.paths.text_embeddings, "text embeddings", "encode");
    Bases b{EmbeddingTable::load(c.paths.image_embeddings), EmbeddingTable::load(c.paths.text_embeddings)};
    const Json& meta = b.texts.meta();
    if (meta.contains("descriptions_digest")) {
        const auto kind = parse_prompt_kind(meta.value("kind", "template"));
        require(meta["descriptions_digest"] == descriptions_digest(catalog, kind), ErrorKind::kPrerequisite,
                "text embeddings were computed from different descriptions; run `crossfind encode --force`");
    }
    return b;
}

/// Identifies the exact embedding inputs a checkpoint was trained on.
std::string bases_digest(const Bases& b) {
    return sha256_hex(encode_blob(b.images.to_blob()) + encode_blob(b.texts.to_blob())).substr(0, 16);
}

ProjectionHeads load_heads_for(const PipelineRunConfig& c) {
    need_file(c.paths.heads, "projection heads", "train");
    return load_heads(c.paths.heads);
}

ProjectionHeads resolve_heads(const std::string& spec, const Bases& b) {
    if (spec == "identity") {
        return ProjectionHeads::identity(b.images.dimension(), b.texts.dimension(), kSharedDim);
    }
    need_file(spec, "projection heads", "train");
    return load_heads(spec);
}

SearchIndex load_index_for(const PipelineRunConfig& c) {
    need_file(c.paths.index, "search index", "index");
    return SearchIndex::load(c.paths.index);
}

void check_pair(const SearchIndex& index, const ProjectionHeads& heads) {
    require(index.heads_version() == heads.version, ErrorKind::kPrerequisite,
            "index was built with heads " + index.heads_version() + " but the heads file is " + heads.version +
                "; run `crossfind index --force`");
}

}  // namespace

PipelinePaths PipelinePaths::under(const fs::path& dir) {
    PipelinePaths p;
    p.manifest = dir / "manifest.jsonl";
    p.catalog = dir / "catalog.json";
    p.image_embeddings = dir / "images.xfb";
    p.text_embeddings = dir / "texts.xfb";
    p.heads = dir / "heads.xfb";
    p.history = dir / "train_history.jsonl";
    p.index = dir / "index.xfb";
    p.metrics = dir / "metrics.json";
    p.heatmap = dir / "heatmap";
    return p;
}

void PipelineRunConfig::validate() const {
    vlm.validate();
    encoder.validate();
    train.validate();
    require(train_fraction > 0.0 && train_fraction <= 1.0, ErrorKind::kInvalidArgument,
            "train_fraction must be in (0, 1]");
    require(holdout_fraction >= 0.0 && holdout_fraction < 1.0, ErrorKind::kInvalidArgument,
            "holdout_fraction must be in [0, 1)");
    require(port >= 0 && port <= 65535, ErrorKind::kInvalidArgument, "port must be in [0, 65535]");
}

Json PipelineRunConfig::to_json() const {
    return {{"paths",
             {{"manifest", paths.manifest.string()},
              {"descriptions", paths.descriptions.string()},
              {"catalog", paths.catalog.string()},
              {"image_embeddings", paths.image_embeddings.string()},
              {"text_embeddings", paths.text_embeddings.string()},
              {"heads", paths.heads.string()},
              {"history", paths.history.string()},
              {"index", paths.index.string()},
              {"metrics", paths.metrics.string()},
              {"heatmap", paths.heatmap.string()}}},
            {"vlm", vlm.to_json()},
            {"encoder", encoder.to_json()},
            {"train", train.to_json()},
            {"label_kind", to_string(label_kind)},
            {"text_kind", to_string(text_kind)},
            {"train_fraction", train_fraction},
            {"holdout_fraction", holdout_fraction},
            {"split_seed", split_seed},
            {"host", host},
            {"port", port},
            {"asset_base_url", asset_base_url}};
}

PipelineRunConfig PipelineRunConfig::from_json(const Json& j, const fs::path& base_dir) {
    PipelineRunConfig c;
    try {
        const fs::path work = resolve(base_dir, j.value("work_dir", "."));
        c.paths = PipelinePaths::under(work);
        if (j.contains("paths")) {
            const Json& p = j["paths"];
            auto set = [&](const char* key, fs::path& dst) {
                if (p.contains(key) && !p[key].get<std::string>().empty()) {
                    dst = resolve(base_dir, p[key].get<std::string>());
                }
            };
            set("manifest", c.paths.manifest);
            set("descriptions", c.paths.descriptions);
            set("catalog", c.paths.catalog);
            set("image_embeddings", c.paths.image_embeddings);
            set("text_embeddings", c.paths.text_embeddings);
            set("heads", c.paths.heads);
            set("history", c.paths.history);
            set("index", c.paths.index);
            set("metrics", c.paths.metrics);
            set("heatmap", c.paths.heatmap);
        }
        if (j.contains("vlm")) {
            c.vlm = VlmBackendConfig::from_json(j["vlm"]);
        }
        if (j.contains("encoder")) {
            c.encoder = EncoderBackendConfig::from_json(j["encoder"]);
            c.encoder.embedding_file = resolve(base_dir, c.encoder.embedding_file.string());
        }
        if (j.contains("train")) {
            c.train = TrainConfig::from_json(j["train"]);
        }
        c.label_kind = parse_prompt_kind(j.value("label_kind", "template"));
        c.text_kind = parse_prompt_kind(j.value("text_kind", "template"));
        c.train_fraction = j.value("train_fraction", c.train_fraction);
        c.holdout_fraction = j.value("holdout_fraction", c.holdout_fraction);
        c.split_seed = j.value("split_seed", c.split_seed);
        c.host = j.value("host", c.host);
        c.port = j.value("port", c.port);
        c.asset_base_url = j.value("asset_base_url", "");
        if (j.contains("seed")) {
            c.set_seed(j["seed"].get<std::uint64_t>());
        }
    } catch (const Json::exception& e) {
        fail(ErrorKind::kParse, std::string("malformed pipeline config: ") + e.what());
    }
    return c;
}

void PipelineRunConfig::set_seed(std::uint64_t seed) {
    split_seed = seed;
    train.seed = seed;
}

PipelineRunConfig load_pipeline_config(const fs::path& path) {
    Json doc;
    try {
        doc = Json::parse(read_file(path));
    } catch (const Json::exception& e) {
        fail(ErrorKind::kParse, path.string() + ": " + e.what());
    }
    return PipelineRunConfig::from_json(doc, path.parent_path());
}

std::string descriptions_digest(const DatasetCatalog& catalog, PromptKind kind) {
    Json all = Json::array();
    for (const auto& r : catalog.records()) {
        const Description* d = catalog.find_description(r.object_id, kind);
        all.push_back({r.object_id, d != nullptr ? Json(d->text) : Json(nullptr)});
    }
    return sha256_hex(all.dump()).substr(0, 16);
}

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::kInvalidArgument:
        case ErrorKind::kParse:
        case ErrorKind::kNotFound:
            return 2;
        case ErrorKind::kBackend:
            return 3;
        case ErrorKind::kPrerequisite:
        case ErrorKind::kNotLabeled:
            return 4;
        default:
            return 1;
    }
}

// --- stages -----------------------------------------------------------------

StageResult run_ingest(const PipelineRunConfig& c, const StageOptions& o) {
    need_file(c.paths.manifest, "capture manifest", "ingest");
    const CaptureManifest manifest = ingest_manifest_file(c.paths.manifest);
    DatasetCatalog catalog(manifest);

    if (!c.paths.descriptions.empty()) {
        need_file(c.paths.descriptions, "description import file", "ingest");
        std::istringstream lines(read_file(c.paths.descriptions));
        std::string line;
        std::vector<Description> imported;
        std::size_t lineno = 0;
        while (std::getline(lines, line)) {
            ++lineno;
            if (line.find_first_not_of(" \t\r") == std::string::npos) {
                continue;
            }
            try {
                const Json j = Json::parse(line);
                Description d;
                d.object_id = j.at("object_id").get<std::string>();
                d.text = j.at("text").get<std::string>();
                d.kind = parse_prompt_kind(j.value("kind", "template"));
                d.token_count = count_tokens(d.text);
                d.backend_id = j.value("backend_id", "import");
                d.created_at = j.value("created_at", "");
                require(catalog.contains(d.object_id), ErrorKind::kInvalidArgument,
                        "description for unknown object '" + d.object_id + "'");
                imported.push_back(std::move(d));
            } catch (const Json::exception& e) {
                fail(ErrorKind::kParse, c.paths.descriptions.string() + ":" + std::to_string(lineno) + ": " + e.what());
            }
        }
        catalog = catalog.with_descriptions(std::move(imported));
    }
    catalog.validate();

    if (fs::exists(c.paths.catalog) && !o.force) {
        const DatasetCatalog existing = load_catalog(c.paths.catalog);
        if (existing.manifest() == catalog.manifest()) {
            say(o, "catalog already holds this manifest (" + std::to_string(existing.size()) + " objects)");
            return {true, {}, "up to date"};
        }
        fail(ErrorKind::kPrerequisite, c.paths.catalog.string() +
                                           " was ingested from a different manifest; use --force to rebuild it "
                                           "(drops existing labels and splits)");
    }
    const std::string summary = "ingested " + std::to_string(catalog.size()) + " objects";
    if (o.dry_run) {
        return {false, {}, "dry run: " + summary};
    }
    save_catalog(c.paths.catalog, catalog);
    say(o, summary);
    return {false, {c.paths.catalog}, summary};
}

StageResult run_split(const PipelineRunConfig& c, const StageOptions& o) {
    c.validate();
    const DatasetCatalog catalog = load_catalog_for(c);
    if (!catalog.splits().empty() && !o.force) {
        return {true, {}, "splits already assigned"};
    }
    const DatasetCatalog out = assign_splits(catalog, c.train_fraction, c.split_seed, c.holdout_fraction);
    const std::string summary = "train " + std::to_string(out.ids_in(Split::kTrain).size()) + ", validation " +
                                std::to_string(out.ids_in(Split::kValidation).size()) + ", holdout " +
                                std::to_string(out.ids_in(Split::kHoldout).size());
    if (o.dry_run) {
        return {false, {}, "dry run: " + summary};
    }
    save_catalog(c.paths.catalog, out);
    say(o, summary);
    return {false, {c.paths.catalog}, summary};
}

StageResult run_label(const PipelineRunConfig& c, const StageOptions& o, VlmBackend* backend) {
    c.validate();
    DatasetCatalog catalog = load_catalog_for(c);
    if (o.force) {
        // Drop existing descriptions of this kind so every record is asked again.
        DatasetCatalog fresh(catalog.manifest());
        std::vector<Description> keep;
        for (const auto& [id, list] : catalog.descriptions()) {
            for (const auto& d : list) {
                if (d.kind != c.label_kind) {
                    keep.push_back(d);
                }
            }
        }
        catalog = fresh.with_descriptions(std::move(keep)).with_splits(catalog.splits());
    }
    std::size_t pending = 0;
    for (const auto& r : catalog.records()) {
        pending += catalog.find_description(r.object_id, c.label_kind) == nullptr ? 1 : 0;
    }
    if (pending == 0) {
        return {true, {}, "every object already has a " + std::string(to_string(c.label_kind)) + " description"};
    }
    if (o.dry_run) {
        return {false, {}, "dry run: " + std::to_string(pending) + " objects to label"};
    }

    std::unique_ptr<VlmBackend> owned;
    LabelOptions lo;
    if (backend == nullptr) {
        owned = make_vlm_backend(c.vlm);
        backend = owned.get();
    }
    if (c.vlm.kind == VlmKind::kMock) {
        // Pacing protects a remote service; the mock needs none.
        lo.clock = std::make_shared<VirtualClock>();
    }
    const BatchLabelResult res = batch_label(catalog, builtin_template(c.label_kind), *backend, c.vlm.rate_limit, lo);
    save_catalog(c.paths.catalog, res.catalog);
    const std::string summary = "labeled " + std::to_string(res.labeled) + ", already labeled " +
                                std::to_string(res.skipped) + ", failed " + std::to_string(res.failures.size());
    say(o, summary);
    if (!res.failures.empty()) {
        std::vector<std::string> ids;
        for (const auto& f : res.failures) {
            ids.push_back(f.object_id);
            say(o, "  " + f.object_id + ": " + f.message);
        }
        fail(ErrorKind::kBackend, "labeling failed for " + join_ids(ids) + " (progress saved; re-run to retry)");
    }
    return {false, {c.paths.catalog}, summary};
}

StageResult run_import_embeddings(const PipelineRunConfig& c, const std::string& modality, const fs::path& jsonl,
                                  const StageOptions& o) {
    require(modality == "image" || modality == "text", ErrorKind::kInvalidArgument,
            "modality must be image or text, got '" + modality + "'");
    need_file(jsonl, "embedding import file", "import-embeddings");
    const fs::path& out = modality == "image" ? c.paths.image_embeddings : c.paths.text_embeddings;
    if (fs::exists(out) && !o.force) {
        return {true, {}, out.string() + " exists; use --force to replace it"};
    }
    std::istringstream lines(read_file(jsonl));
    std::string line;
    std::optional<EmbeddingTable> table;
    std::size_t lineno = 0;
    while (std::getline(lines, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            const Json j = Json::parse(line);
            const auto v = j.at("vector").get<std::vector<float>>();
            if (!table) {
                table.emplace(v.size());
            }
            table->add(j.at("object_id").get<std::string>(), v);
        } catch (const Json::exception& e) {
            fail(ErrorKind::kParse, jsonl.string() + ":" + std::to_string(lineno) + ": " + e.what());
        } catch (const Error& e) {
            fail(e.kind(), jsonl.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    require(table.has_value(), ErrorKind::kInvalidArgument, jsonl.string() + " holds no embeddings");
    table->meta() = {{"modality", modality}, {"backend_id", "import:" + jsonl.filename().string()}};
    const std::string summary = "imported " + std::to_string(table->size()) + " " + modality + " embeddings of width " +
                                std::to_string(table->dimension());
    if (o.dry_run) {
        return {false, {}, "dry run: " + summary};
    }
    table->save(out);
    say(o, summary);
    return {false, {out}, summary};
}

StageResult run_encode(const PipelineRunConfig& c, const StageOptions& o) {
    c.validate();
    const DatasetCatalog catalog = load_catalog_for(c);
    require_labeled(catalog, c.text_kind);
    const EncoderGateway gateway(c.encoder);
    const std::string text_digest = descriptions_digest(catalog, c.text_kind);

    if (!o.force && fs::exists(c.paths.image_embeddings) && fs::exists(c.paths.text_embeddings)) {
        const auto images = EmbeddingTable::load(c.paths.image_embeddings);
        const auto texts = EmbeddingTable::load(c.paths.text_embeddings);
        bool complete = images.meta().value("backend_id", "") == gateway.backend_id() &&
                        texts.meta().value("backend_id", "") == gateway.backend_id() &&
                        texts.meta().value("descriptions_digest", "") == text_digest;
        for (const auto& r : catalog.records()) {
            complete = complete && images.contains(r.object_id) && texts.contains(r.object_id);
        }
        if (complete) {
            return {true, {}, "embeddings are up to date"};
        }
    }
    if (o.dry_run) {
        return {false, {}, "dry run: would encode " + std::to_string(catalog.size()) + " objects"};
    }

    EmbeddingTable images(kImageDim);
    EmbeddingTable texts(kTextDim);
    for (const auto& r : catalog.records()) {
        images.add(r.object_id, gateway.encode_image(r.image_ref, r.object_id).vector);
        const Description* d = catalog.find_description(r.object_id, c.text_kind);
        texts.add(r.object_id, gateway.encode_text(d->text, r.object_id).vector);
    }
    images.meta() = {{"modality", "image"}, {"backend_id", gateway.backend_id()}};
    texts.meta() = {{"modality", "text"},
                    {"backend_id", gateway.backend_id()},
                    {"kind", to_string(c.text_kind)},
                    {"descriptions_digest", text_digest}};
    images.save(c.paths.image_embeddings);
    try {
        texts.save(c.paths.text_embeddings);
    } catch (...) {
        std::error_code ignored;
        fs::remove(c.paths.image_embeddings, ignored);
        throw;
    }
    const std::string summary = "encoded " + std::to_string(catalog.size()) + " objects with " + gateway.backend_id();
    say(o, summary);
    return {false, {c.paths.image_embeddings, c.paths.text_embeddings}, summary};
}

StageResult run_train(const PipelineRunConfig& c, const StageOptions& o) {
    c.validate();
    DatasetCatalog catalog = load_catalog_for(c);
    require_labeled(catalog, c.text_kind);
    const Bases bases = load_bases(c, catalog);
    const std::string inputs = bases_digest(bases);

    if (!o.force && fs::exists(c.paths.heads)) {
        Json header;
        load_heads(c.paths.heads, &header);
        if (header.value("train_config_digest", "") == c.train.digest() &&
            header.value("inputs_digest", "") == inputs) {
            return {true, {}, "heads already trained with this config and these embeddings"};
        }
    }
    std::vector<fs::path> written;
    if (catalog.splits().empty()) {
        catalog = assign_splits(catalog, c.train_fraction, c.split_seed, c.holdout_fraction);
        say(o, "no split assignment found; assigned one with train_fraction " + std::to_string(c.train_fraction));
        if (!o.dry_run) {
            save_catalog(c.paths.catalog, catalog);
            written.push_back(c.paths.catalog);
        }
    }
    if (o.dry_run) {
        const std::size_t n = catalog.ids_in(Split::kTrain).size();
        const std::size_t steps = planned_steps(n, c.train);
        require(steps > c.train.warmup_steps, ErrorKind::kInvalidArgument,
                std::to_string(steps) + " optimizer steps do not exceed " + std::to_string(c.train.warmup_steps) +
                    " warmup steps");
        return {false, {}, "dry run: would train " + std::to_string(steps) + " steps on " + std::to_string(n) +
                               " objects"};
    }

    const BaseEmbeddings refs{&bases.images, &bases.texts};
    TrainResult result;
    try {
        result = train(catalog, refs, c.train);
    } catch (const TrainingDiverged& e) {
        save_heads(sibling(c.paths.heads, "last_good"), e.last_good(), {{"diverged", e.what()}});
        throw;
    }
    const Json header = {{"train_config", c.train.to_json()},
                         {"train_config_digest", c.train.digest()},
                         {"inputs_digest", inputs},
                         {"initial_loss", result.history.initial_loss},
                         {"final_loss", result.history.final_loss}};
    save_heads(c.paths.heads, result.heads, header);
    save_heads(sibling(c.paths.heads, "best_train"), result.best_train, header);
    written.push_back(c.paths.heads);
    written.push_back(sibling(c.paths.heads, "best_train"));
    if (result.best_validation) {
        save_heads(sibling(c.paths.heads, "best_val"), *result.best_validation, header);
        written.push_back(sibling(c.paths.heads, "best_val"));
    }
    write_file_atomic(c.paths.history, result.history.to_jsonl());
    written.push_back(c.paths.history);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "trained %zu steps: loss %.4f -> %.4f", result.history.steps.size(),
                  result.history.initial_loss, result.history.final_loss);
    say(o, buf);
    return {false, written, buf};
}

StageResult run_index(const PipelineRunConfig& c, const StageOptions& o) {
    const DatasetCatalog catalog = load_catalog_for(c);
    const Bases bases = load_bases(c, catalog);
    const ProjectionHeads heads = load_heads_for(c);
    const std::string inputs = bases_digest(bases);
    if (!o.force && fs::exists(c.paths.index)) {
        const SearchIndex existing = SearchIndex::load(c.paths.index);
        if (existing.heads_version() == heads.version && existing.meta().value("inputs_digest", "") == inputs &&
            existing.size() == catalog.size()) {
            return {true, {}, "index is up to date"};
        }
    }
    SearchIndex index = build_index(catalog, bases.images, bases.texts, heads);
    index.meta()["inputs_digest"] = inputs;
    const std::string summary = "indexed " + std::to_string(index.size()) + " objects (heads " + heads.version + ")";
    if (o.dry_run) {
        return {false, {}, "dry run: " + summary};
    }
    index.save(c.paths.index);
    say(o, summary);
    return {false, {c.paths.index}, summary};
}

MetricsReport run_eval(const PipelineRunConfig& c, const EvalRequest& request, const StageOptions& o) {
    const DatasetCatalog catalog = load_catalog_for(c);
    SearchIndex index;
    if (request.heads_override) {
        const Bases bases = load_bases(c, catalog);
        index = build_index(catalog, bases.images, bases.texts, resolve_heads(*request.heads_override, bases));
    } else {
        index = load_index_for(c);
        if (fs::exists(c.paths.heads)) {
            check_pair(index, load_heads(c.paths.heads));
        }
    }
    EvalOptions eo;
    eo.visual_focus = request.visual_focus;
    eo.model_tag = request.model_tag;
    eo.kind = c.text_kind;
    const MetricsReport report = evaluate(index, catalog, request.split, eo);
    say(o, format_metrics_table({report}));
    if (o.dry_run) {
        return report;
    }
    Json all = Json::array();
    if (fs::exists(c.paths.metrics)) {
        try {
            all = Json::parse(read_file(c.paths.metrics));
        } catch (const Json::exception& e) {
            fail(ErrorKind::kParse, c.paths.metrics.string() + ": " + e.what());
        }
        require(all.is_array(), ErrorKind::kParse, c.paths.metrics.string() + " is not a JSON array");
    }
    Json entry = report.to_json();
    entry["heads_version"] = index.heads_version();
    auto same = [&](const Json& e) {
        return e.value("split", "") == entry["split"] && e.value("model_tag", "") == entry["model_tag"];
    };
    all.erase(std::remove_if(all.begin(), all.end(), same), all.end());
    all.push_back(entry);
    write_file_atomic(c.paths.metrics, all.dump(2) + "\n");
    return report;
}

HeatmapFiles run_heatmap(const PipelineRunConfig& c, std::size_t limit, const StageOptions& o) {
    const SearchIndex index = load_index_for(c);
    std::vector<std::string> ids = index.ids();
    std::sort(ids.begin(), ids.end());
    if (limit > 0 && ids.size() > limit) {
        ids.resize(limit);
    }
    const SimilarityMatrix m = similarity_matrix(index, ids);
    if (o.dry_run) {
        return {};
    }
    HeatmapFiles files = export_heatmap(m, c.paths.heatmap);
    if (ids.size() >= 2) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "diagonal margin %.4f over %zu objects", m.diagonal_margin(), ids.size());
        say(o, buf);
    }
    return files;
}

std::vector<RankedResult> run_search(const PipelineRunConfig& c, const SearchQuery& query) {
    query.validate();
    const SearchIndex index = load_index_for(c);
    const ProjectionHeads heads = load_heads_for(c);
    check_pair(index, heads);
    return search_text(index, query, heads, EncoderGateway(c.encoder));
}

std::vector<RankedResult> run_search_similar(const PipelineRunConfig& c, const std::string& object_id,
                                             std::size_t k) {
    require(k >= 1 && k <= kMaxResults, ErrorKind::kInvalidArgument,
            "k must be in [1, " + std::to_string(kMaxResults) + "]");
    return search_similar(load_index_for(c), object_id, k);
}

ServiceConfig service_config(const PipelineRunConfig& c) {
    ServiceConfig s;
    s.host = c.host;
    s.port = c.port;
    s.index_path = c.paths.index;
    s.heads_path = c.paths.heads;
    s.catalog_path = c.paths.catalog;
    s.encoder = c.encoder;
    s.asset_base_url = c.asset_base_url;
    return s;
}

}  // namespace crossfind
