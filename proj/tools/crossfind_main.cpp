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


// crossfind: command-line driver for the capture/label/associate/search
// pipeline. Exit codes: 0 success, 1 unexpected failure, 2 invalid input,
// 3 backend failure, 4 missing prerequisite.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "crossfind/pipeline.hpp"
#include "crossfind/service.hpp"

namespace {

using namespace crossfind;

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

struct Globals {
    std::string config;
    std::string work_dir = ".";
    std::optional<std::uint64_t> seed;
    bool dry_run = false;
    bool force = false;
    bool quiet = false;
};

void print_results(const std::vector<RankedResult>& results, bool as_json) {
    if (as_json) {
        Json out = Json::array();
        for (const auto& r : results) {
            out.push_back({{"rank", r.rank},
                           {"object_id", r.object_id},
                           {"score", r.score},
                           {"image_score", r.image_score},
                           {"text_score", r.text_score}});
        }
        std::cout << out.dump() << '\n';
        return;
    }
    for (const auto& r : results) {
        std::printf("%2zu  %-24s  %.6f  (image %.6f, text %.6f)\n", r.rank, r.object_id.c_str(), r.score,
                    r.image_score, r.text_score);
    }
}

/// Completed stages already logged their summary; only skips and dry runs
/// need a line here.
void report(const StageResult& r, const Globals& g) {
    if (!g.quiet && (r.skipped || g.dry_run)) {
        std::cout << (r.skipped ? "skipped: " : "") << r.summary << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"crossfind: text-to-object retrieval over a captured, labeled catalog"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config, "pipeline config (JSON)")->check(CLI::ExistingFile);
    app.add_option("--work-dir", g.work_dir, "artifact directory when no config is given");
    app.add_option("--seed", g.seed, "seed for splitting and training");
    app.add_flag("--dry-run", g.dry_run, "validate inputs without writing artifacts");
    app.add_flag("--force", g.force, "redo stages whose outputs are already complete");
    app.add_flag("-q,--quiet", g.quiet, "only print results and errors");

    std::string manifest;
    std::string descriptions;
    auto* ingest = app.add_subcommand("ingest", "capture manifest -> catalog");
    ingest->add_option("--manifest", manifest, "JSON lines capture manifest");
    ingest->add_option("--descriptions", descriptions, "JSON lines descriptions to import");

    std::optional<double> train_fraction;
    std::optional<double> holdout_fraction;
    auto* split = app.add_subcommand("split", "assign train / validation / holdout splits");
    split->add_option("--train-fraction", train_fraction)->check(CLI::Range(0.0, 1.0));
    split->add_option("--holdout-fraction", holdout_fraction)->check(CLI::Range(0.0, 1.0));

    std::string label_kind;
    auto* label = app.add_subcommand("label", "describe every object with the vision-language model");
    label->add_option("--kind", label_kind, "design_purpose, structure or template");

    std::string modality;
    std::string import_input;
    auto* import = app.add_subcommand("import-embeddings", "load externally computed embeddings");
    import->add_option("--modality", modality, "image or text")->required();
    import->add_option("--input", import_input, "JSON lines {object_id, vector}")->required();

    auto* encode = app.add_subcommand("encode", "base embeddings for images and descriptions");

    std::optional<std::size_t> epochs;
    std::optional<std::size_t> batch_size;
    std::optional<std::size_t> warmup;
    std::optional<double> peak_lr;
    std::optional<double> weight_decay;
    std::optional<double> temperature;
    auto* train_cmd = app.add_subcommand("train", "fit the projection heads");
    train_cmd->add_option("--epochs", epochs);
    train_cmd->add_option("--batch-size", batch_size);
    train_cmd->add_option("--warmup-steps", warmup);
    train_cmd->add_option("--peak-lr", peak_lr);
    train_cmd->add_option("--weight-decay", weight_decay);
    train_cmd->add_option("--temperature", temperature);

    auto* index_cmd = app.add_subcommand("index", "project every object into the search index");

    std::string eval_split = "complete";
    std::string model_tag = "model";
    double eval_focus = 1.0;
    std::string eval_heads;
    bool eval_json = false;
    auto* eval_cmd = app.add_subcommand("eval", "self-retrieval MRR and top-k accuracy");
    eval_cmd->add_option("--split", eval_split, "train, test or complete");
    eval_cmd->add_option("--model-tag", model_tag, "row label, e.g. baseline, best-train, close-set");
    eval_cmd->add_option("--visual-focus", eval_focus, "weight of the image-space score")->check(CLI::Range(0.0, 1.0));
    eval_cmd->add_option("--heads", eval_heads, "identity or a checkpoint; rebuilds the index in memory");
    eval_cmd->add_flag("--json", eval_json, "print the report as JSON");

    std::size_t heatmap_limit = 100;
    auto* heatmap = app.add_subcommand("heatmap", "text-image similarity matrix as PGM + JSON");
    heatmap->add_option("--limit", heatmap_limit, "first N ids in sorted order (0 = all)");

    SearchQuery query;
    bool search_json = false;
    auto* search = app.add_subcommand("search", "one-shot text query");
    search->add_option("--query", query.text)->required();
    search->add_option("--k", query.k);
    search->add_option("--visual-focus", query.visual_focus);
    search->add_flag("--json", search_json);

    std::string similar_id;
    std::size_t similar_k = kDefaultResults;
    bool similar_json = false;
    auto* similar = app.add_subcommand("search-similar", "objects nearest to a given object's image");
    similar->add_option("--id", similar_id)->required();
    similar->add_option("--k", similar_k);
    similar->add_flag("--json", similar_json);

    std::string service_file;
    std::optional<std::string> host;
    std::optional<int> port;
    std::string port_file;
    auto* serve = app.add_subcommand("serve", "HTTP API over the index");
    serve->add_option("--service-config", service_file, "service config (JSON); default derives from --config");
    serve->add_option("--host", host);
    serve->add_option("--port", port, "0 picks a free port");
    serve->add_option("--port-file", port_file, "write the bound port here once listening");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        PipelineRunConfig cfg;
        if (!g.config.empty()) {
            cfg = load_pipeline_config(g.config);
        } else {
            cfg.paths = PipelinePaths::under(g.work_dir);
        }
        if (g.seed) {
            cfg.set_seed(*g.seed);
        }
        StageOptions so;
        so.dry_run = g.dry_run;
        so.force = g.force;
        if (!g.quiet) {
            so.log = [](const std::string& line) { std::cerr << line << '\n'; };
        }

        if (*ingest) {
            if (!manifest.empty()) {
                cfg.paths.manifest = manifest;
            }
            if (!descriptions.empty()) {
                cfg.paths.descriptions = descriptions;
            }
            report(run_ingest(cfg, so), g);
        } else if (*split) {
            if (train_fraction) {
                cfg.train_fraction = *train_fraction;
            }
            if (holdout_fraction) {
                cfg.holdout_fraction = *holdout_fraction;
            }
            report(run_split(cfg, so), g);
        } else if (*label) {
            if (!label_kind.empty()) {
                cfg.label_kind = parse_prompt_kind(label_kind);
            }
            report(run_label(cfg, so), g);
        } else if (*import) {
            report(run_import_embeddings(cfg, modality, import_input, so), g);
        } else if (*encode) {
            report(run_encode(cfg, so), g);
        } else if (*train_cmd) {
            if (epochs) {
                cfg.train.epochs = *epochs;
            }
            if (batch_size) {
                cfg.train.batch_size = *batch_size;
            }
            if (warmup) {
                cfg.train.warmup_steps = *warmup;
            }
            if (peak_lr) {
                cfg.train.peak_lr = *peak_lr;
            }
            if (weight_decay) {
                cfg.train.weight_decay = *weight_decay;
            }
            if (temperature) {
                cfg.train.temperature = *temperature;
            }
            report(run_train(cfg, so), g);
        } else if (*index_cmd) {
            report(run_index(cfg, so), g);
        } else if (*eval_cmd) {
            EvalRequest req;
            req.split = parse_eval_split(eval_split);
            req.model_tag = model_tag;
            req.visual_focus = eval_focus;
            if (!eval_heads.empty()) {
                req.heads_override = eval_heads;
            }
            StageOptions quiet_eval = so;
            quiet_eval.log = nullptr;
            const MetricsReport r = run_eval(cfg, req, quiet_eval);
            std::cout << (eval_json ? r.to_json().dump(2) + "\n" : format_metrics_table({r}));
        } else if (*heatmap) {
            const HeatmapFiles files = run_heatmap(cfg, heatmap_limit, so);
            if (!g.dry_run && !g.quiet) {
                std::cout << files.image.string() << '\n' << files.values.string() << '\n';
            }
        } else if (*search) {
            print_results(run_search(cfg, query), search_json);
        } else if (*similar) {
            print_results(run_search_similar(cfg, similar_id, similar_k), similar_json);
        } else if (*serve) {
            ServiceConfig sc = service_file.empty() ? apply_env_overrides(service_config(cfg))
                                                    : load_service_config(service_file);
            if (host) {
                sc.host = *host;
            }
            if (port) {
                sc.port = *port;
            }
            sc.validate(true);
            SearchService service(sc);
            service.reload();
            if (g.dry_run) {
                std::cout << "dry run: service config and artifacts are valid\n";
                return 0;
            }
            HttpServer server(service);
            const int bound = server.bind(sc.host, sc.port);
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            server.start();
            std::cout << "listening on http://" << sc.host << ":" << bound << std::endl;
            if (!port_file.empty()) {
                write_file_atomic(port_file, std::to_string(bound) + "\n");
            }
            while (!g_stop) {
                std::this_thread::sleep_for(std::chrono::milliseconds(50));
            }
            server.stop();
        }
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.kind()) << "]: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
