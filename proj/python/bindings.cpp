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


#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "crossfind/associate.hpp"
#include "crossfind/encoder.hpp"
#include "crossfind/eval.hpp"
#include "crossfind/index.hpp"
#include "crossfind/pipeline.hpp"
#include "crossfind/service.hpp"

namespace py = pybind11;
using namespace crossfind;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

std::vector<float> to_vector(const FloatArray& a) {
    require(a.ndim() == 1, ErrorKind::kInvalidArgument, "expected a 1-D array");
    return {a.data(), a.data() + a.size()};
}

FloatArray to_array(std::span<const float> v) {
    FloatArray out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

py::dict result_dict(const RankedResult& r) {
    py::dict d;
    d["rank"] = r.rank;
    d["object_id"] = r.object_id;
    d["score"] = r.score;
    d["image_score"] = r.image_score;
    d["text_score"] = r.text_score;
    return d;
}

py::list results_list(const std::vector<RankedResult>& rs) {
    py::list out;
    for (const auto& r : rs) out.append(result_dict(r));
    return out;
}

py::object json_to_py(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

/// Pipeline bound to one config file or artifact directory.
class Pipeline {
 public:
    static Pipeline from_config(const std::filesystem::path& path) { return Pipeline(load_pipeline_config(path)); }
    static Pipeline in_directory(const std::filesystem::path& dir, const std::filesystem::path& manifest) {
        PipelineRunConfig c;
        c.paths = PipelinePaths::under(dir);
        if (!manifest.empty()) c.paths.manifest = manifest;
        return Pipeline(std::move(c));
    }

    std::string run(const std::string& stage, bool force, bool dry_run) {
        StageOptions o;
        o.force = force;
        o.dry_run = dry_run;
        StageResult r;
        if (stage == "ingest") {
            r = run_ingest(config_, o);
        } else if (stage == "split") {
            r = run_split(config_, o);
        } else if (stage == "label") {
            r = run_label(config_, o);
        } else if (stage == "encode") {
            r = run_encode(config_, o);
        } else if (stage == "train") {
            r = run_train(config_, o);
        } else if (stage == "index") {
            r = run_index(config_, o);
        } else {
            fail(ErrorKind::kInvalidArgument, "unknown stage '" + stage + "'");
        }
        return r.summary;
    }

    std::string import_embeddings(const std::string& modality, const std::filesystem::path& jsonl) {
        return run_import_embeddings(config_, modality, jsonl, {}).summary;
    }

    MetricsReport eval(const std::string& split, const std::string& tag, double focus,
                       const std::optional<std::string>& heads) {
        EvalRequest req;
        req.split = parse_eval_split(split);
        req.model_tag = tag;
        req.visual_focus = focus;
        req.heads_override = heads;
        return run_eval(config_, req, {});
    }

    std::vector<RankedResult> search(const std::string& text, std::size_t k, double focus) {
        return run_search(config_, {text, k, focus});
    }

    std::vector<RankedResult> similar(const std::string& id, std::size_t k) {
        return run_search_similar(config_, id, k);
    }

    HeatmapFiles heatmap(std::size_t limit) { return run_heatmap(config_, limit, {}); }

    PipelineRunConfig config_;

 private:
    explicit Pipeline(PipelineRunConfig c) : config_(std::move(c)) {}
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "crossfind core: contrastive projection heads, exact search and retrieval metrics";
    m.attr("IMAGE_DIM") = kImageDim;
    m.attr("TEXT_DIM") = kTextDim;
    m.attr("SHARED_DIM") = kSharedDim;
    m.attr("MAX_RESULTS") = kMaxResults;
    m.attr("API_VERSION") = kApiVersion;

    // Module-lifetime references; never released at static destruction.
    static const py::handle base = py::exception<Error>(m, "CrossfindError", PyExc_RuntimeError).release();
    static const py::handle not_found = py::exception<Error>(m, "NotFoundError", base).release();
    static const py::handle invalid = py::exception<Error>(m, "InvalidArgumentError", base).release();
    static const py::handle prerequisite = py::exception<Error>(m, "PrerequisiteError", base).release();
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            switch (e.kind()) {
                case ErrorKind::kNotFound:
                    py::set_error(not_found, e.what());
                    break;
                case ErrorKind::kInvalidArgument:
                case ErrorKind::kParse:
                    py::set_error(invalid, e.what());
                    break;
                case ErrorKind::kPrerequisite:
                case ErrorKind::kNotLabeled:
                    py::set_error(prerequisite, e.what());
                    break;
                default:
                    py::set_error(base, e.what());
            }
        }
    });

    // --- associate ---
    py::class_<ProjectionHeads>(m, "ProjectionHeads")
        .def_static("identity", &ProjectionHeads::identity, py::arg("image_dim") = kImageDim,
                    py::arg("text_dim") = kTextDim, py::arg("shared_dim") = kSharedDim)
        .def_static("random", &ProjectionHeads::random, py::arg("seed"), py::arg("image_dim") = kImageDim,
                    py::arg("text_dim") = kTextDim, py::arg("shared_dim") = kSharedDim)
        .def_static("load", [](const std::filesystem::path& p) { return load_heads(p); })
        .def("save", [](const ProjectionHeads& h, const std::filesystem::path& p) { save_heads(p, h); })
        .def_readwrite("image", &ProjectionHeads::image)
        .def_readwrite("text", &ProjectionHeads::text)
        .def_readwrite("version", &ProjectionHeads::version)
        .def_property_readonly("shared_dim", &ProjectionHeads::shared_dim)
        .def("stamp", &ProjectionHeads::stamp)
        .def("project_image", [](const ProjectionHeads& h, const FloatArray& v) {
            return to_array(project_image(to_vector(v), h));
        })
        .def("project_text", [](const ProjectionHeads& h, const FloatArray& v) {
            return to_array(project_text(to_vector(v), h));
        });

    m.def("contrastive_loss_from_similarity", &contrastive_loss_from_similarity, py::arg("similarity"),
          "Symmetric in-batch loss for an N x N similarity matrix (already temperature-scaled).");
    m.def(
        "loss_and_gradients",
        [](const Matrix& images, const Matrix& texts, const ProjectionHeads& heads, double temperature) {
            const LossGradients g = loss_gradients({images, texts, {}}, heads, temperature);
            return py::make_tuple(g.loss.value, g.image, g.text);
        },
        py::arg("images"), py::arg("texts"), py::arg("heads"), py::arg("temperature") = 1.0);
    m.def("lr_at_step", [](std::size_t step, std::size_t warmup, double peak, std::size_t total) {
        TrainConfig c;
        c.warmup_steps = warmup;
        c.peak_lr = peak;
        return lr_at_step(step, c, total);
    });

    // --- encoder ---
    m.def(
        "mock_embedding",
        [](const std::string& modality, const std::string& input, std::size_t dim, std::uint64_t seed) {
            return to_array(mock_embedding(modality, input, dim, seed));
        },
        py::arg("modality"), py::arg("input"), py::arg("dimension"), py::arg("seed") = 0);

    // --- index ---
    py::class_<SearchIndex>(m, "SearchIndex")
        .def_static("load", &SearchIndex::load)
        .def("__len__", &SearchIndex::size)
        .def_property_readonly("ids", &SearchIndex::ids)
        .def_property_readonly("heads_version", &SearchIndex::heads_version)
        .def_property_readonly("shared_dim", &SearchIndex::shared_dim)
        .def("shared_image", [](const SearchIndex& ix, std::size_t i) { return to_array(ix.shared_image(i)); })
        .def("shared_text", [](const SearchIndex& ix, std::size_t i) { return to_array(ix.shared_text(i)); })
        .def(
            "search_vector",
            [](const SearchIndex& ix, const FloatArray& q, std::size_t k, double focus) {
                return results_list(search_vector(ix, to_vector(q), k, focus));
            },
            py::arg("query"), py::arg("k") = kMaxResults, py::arg("visual_focus") = kDefaultVisualFocus)
        .def(
            "search_similar",
            [](const SearchIndex& ix, const std::string& id, std::size_t k) {
                return results_list(search_similar(ix, id, k));
            },
            py::arg("object_id"), py::arg("k") = kMaxResults);

    // --- eval ---
    m.def("reciprocal_rank", &reciprocal_rank, py::arg("results"), py::arg("true_id"));
    m.def("summarize_ranks", [](const std::vector<std::size_t>& ranks) {
        const RankSummary s = summarize_ranks(ranks);
        py::dict d;
        d["mrr"] = s.mrr;
        d["top1_accuracy"] = s.top1_accuracy;
        d["top10_accuracy"] = s.top10_accuracy;
        return d;
    });

    py::class_<MetricsReport>(m, "MetricsReport")
        .def_property_readonly("split", [](const MetricsReport& r) { return std::string(to_string(r.split)); })
        .def_readonly("n", &MetricsReport::n)
        .def_readonly("pool", &MetricsReport::pool)
        .def_readonly("mrr", &MetricsReport::mrr)
        .def_readonly("top1_accuracy", &MetricsReport::top1_accuracy)
        .def_readonly("top10_accuracy", &MetricsReport::top10_accuracy)
        .def_readonly("model_tag", &MetricsReport::model_tag)
        .def_readonly("ranks", &MetricsReport::ranks)
        .def_readonly("object_ids", &MetricsReport::object_ids)
        .def("to_dict", [](const MetricsReport& r) { return json_to_py(r.to_json()); })
        .def("__repr__", [](const MetricsReport& r) { return format_metrics_table({r}); });

    // --- pipeline ---
    py::class_<Pipeline>(m, "Pipeline")
        .def_static("from_config", &Pipeline::from_config, py::arg("path"))
        .def_static("in_directory", &Pipeline::in_directory, py::arg("work_dir"),
                    py::arg("manifest") = std::filesystem::path())
        .def("run", &Pipeline::run, py::arg("stage"), py::arg("force") = false, py::arg("dry_run") = false,
             py::call_guard<py::gil_scoped_release>())
        .def("import_embeddings", &Pipeline::import_embeddings, py::arg("modality"), py::arg("path"))
        .def("eval", &Pipeline::eval, py::arg("split") = "complete", py::arg("model_tag") = "model",
             py::arg("visual_focus") = 1.0, py::arg("heads") = std::nullopt,
             py::call_guard<py::gil_scoped_release>())
        .def(
            "search",
            [](Pipeline& p, const std::string& text, std::size_t k, double focus) {
                return results_list(p.search(text, k, focus));
            },
            py::arg("query"), py::arg("k") = kDefaultResults, py::arg("visual_focus") = kDefaultVisualFocus)
        .def(
            "search_similar",
            [](Pipeline& p, const std::string& id, std::size_t k) { return results_list(p.similar(id, k)); },
            py::arg("object_id"), py::arg("k") = kDefaultResults)
        .def(
            "heatmap",
            [](Pipeline& p, std::size_t limit) {
                const HeatmapFiles f = p.heatmap(limit);
                return py::make_tuple(f.image, f.values);
            },
            py::arg("limit") = 0)
        .def_property_readonly("config", [](const Pipeline& p) { return json_to_py(p.config_.to_json()); });

    // --- service (the JSON contract the web UI talks to) ---
    py::class_<SearchService>(m, "SearchService")
        .def(py::init([](const std::filesystem::path& config) {
                 auto s = std::make_unique<SearchService>(load_service_config(config));
                 s->reload();
                 return s;
             }),
             py::arg("config"))
        .def(
            "handle",
            [](SearchService& s, const std::string& method, const std::string& path, const std::string& body,
               const std::map<std::string, std::string>& params) {
                ApiResponse r;
                {
                    py::gil_scoped_release release;
                    r = s.handle({method, path, params, body});
                }
                return py::make_tuple(r.status, json_to_py(r.json()));
            },
            py::arg("method"), py::arg("path"), py::arg("body") = "",
            py::arg("params") = std::map<std::string, std::string>{})
        .def("reload", &SearchService::reload, py::call_guard<py::gil_scoped_release>());
}
