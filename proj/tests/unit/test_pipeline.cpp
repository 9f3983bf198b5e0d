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


#include <doctest.h>

#include <fstream>

#include "crossfind/error.hpp"
#include "crossfind/pipeline.hpp"
#include "oracles.hpp"
#include "subprocess.hpp"

using namespace crossfind;

namespace {

const std::filesystem::path kFixture = std::filesystem::path(CROSSFIND_FIXTURES_DIR) / "chairs20";

/// Private copy of the 20-chair fixture.
struct Workspace {
    oracle::TempDir dir{"pipeline"};
    std::filesystem::path config_file;
    PipelineRunConfig config;

    Workspace() {
        for (const char* f : {"manifest.jsonl", "pipeline.json"}) {
            std::filesystem::copy_file(kFixture / f, dir.path() / f);
        }
        config_file = dir.path() / "pipeline.json";
        config = load_pipeline_config(config_file);
    }

    oracle::CommandResult cli(std::vector<std::string> args) const {
        args.insert(args.begin(), {"--config", config_file.string()});
        return oracle::run_command(CROSSFIND_CLI, args, dir.path() / "stderr.txt");
    }

    void through_index() const {
        const StageOptions o;
        run_ingest(config, o);
        run_label(config, o);
        run_encode(config, o);
        run_train(config, o);
        run_index(config, o);
    }
};

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::kIo;
}

}  // namespace

TEST_CASE("config resolves default artifact paths under the work dir") {
    Workspace w;
    CHECK(w.config.paths.catalog == w.dir.path() / "catalog.json");
    CHECK(w.config.paths.index == w.dir.path() / "index.xfb");
    CHECK(w.config.train.batch_size == 8);
    CHECK(w.config.train_fraction == 1.0);
    const auto back = PipelineRunConfig::from_json(w.config.to_json());
    CHECK(back.paths.heads == w.config.paths.heads);
    CHECK(back.train.digest() == w.config.train.digest());
}

TEST_CASE("stages run in order and reach 100% top-1 on the fixture") {
    Workspace w;
    w.through_index();
    const auto r = run_eval(w.config, {EvalSplit::kComplete, "close-set", 1.0, std::nullopt}, {});
    CHECK(r.n == 20);
    CHECK(r.top1_accuracy == 100.0);
    CHECK(r.mrr == 1.0);
    const Json metrics = Json::parse(read_file(w.config.paths.metrics));
    REQUIRE(metrics.is_array());
    CHECK(metrics.size() == 1);
    // a second report with the same split and tag replaces the first
    run_eval(w.config, {EvalSplit::kComplete, "close-set", 1.0, std::nullopt}, {});
    run_eval(w.config, {EvalSplit::kComplete, "baseline", 1.0, std::string("identity")}, {});
    CHECK(Json::parse(read_file(w.config.paths.metrics)).size() == 2);
    const Json header = [&] {
        Json h;
        load_heads(w.config.paths.heads, &h);
        return h;
    }();
    CHECK(header.at("final_loss").get<double>() < header.at("initial_loss").get<double>());
    CHECK(std::filesystem::exists(w.config.paths.history));
}

TEST_CASE("repeated stages skip, --force redoes them") {
    Workspace w;
    w.through_index();
    const StageOptions o;
    CHECK(run_ingest(w.config, o).skipped);
    CHECK(run_label(w.config, o).skipped);
    CHECK(run_encode(w.config, o).skipped);
    CHECK(run_train(w.config, o).skipped);
    CHECK(run_index(w.config, o).skipped);
    const auto before = read_file(w.config.paths.index);
    StageOptions force;
    force.force = true;
    CHECK_FALSE(run_index(w.config, force).skipped);
    CHECK(read_file(w.config.paths.index) == before);
}

TEST_CASE("dry runs validate without writing") {
    Workspace w;
    StageOptions dry;
    dry.dry_run = true;
    const auto r = run_ingest(w.config, dry);
    CHECK(r.written.empty());
    CHECK_FALSE(std::filesystem::exists(w.config.paths.catalog));
    run_ingest(w.config, {});
    run_label(w.config, {});
    const auto catalog_bytes = read_file(w.config.paths.catalog);
    run_encode(w.config, dry);
    CHECK_FALSE(std::filesystem::exists(w.config.paths.image_embeddings));
    CHECK(read_file(w.config.paths.catalog) == catalog_bytes);
}

TEST_CASE("training before labeling names the missing descriptions") {
    Workspace w;
    run_ingest(w.config, {});
    try {
        run_train(w.config, {});
        FAIL("expected prerequisite error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::kPrerequisite);
        CHECK(std::string(e.what()).find("description") != std::string::npos);
        CHECK(std::string(e.what()).find("chair-0001") != std::string::npos);
    }
    CHECK(kind_of([&] { run_index(w.config, {}); }) == ErrorKind::kPrerequisite);
}

TEST_CASE("embeddings from stale descriptions are refused") {
    Workspace w;
    run_ingest(w.config, {});
    run_label(w.config, {});
    run_encode(w.config, {});
    auto catalog = load_catalog(w.config.paths.catalog);
    Description d = *catalog.find_description("chair-0003", PromptKind::kTemplate);
    d.text = "A completely different chair.";
    save_catalog(w.config.paths.catalog, catalog.with_description(d));
    try {
        run_train(w.config, {});
        FAIL("expected stale refusal");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::kPrerequisite);
        CHECK(std::string(e.what()).find("encode --force") != std::string::npos);
    }
    StageOptions force;
    force.force = true;
    run_encode(w.config, force);
    CHECK_FALSE(run_train(w.config, {}).skipped);
}

TEST_CASE("exit codes by error kind") {
    CHECK(exit_code_for(ErrorKind::kInvalidArgument) == 2);
    CHECK(exit_code_for(ErrorKind::kParse) == 2);
    CHECK(exit_code_for(ErrorKind::kNotFound) == 2);
    CHECK(exit_code_for(ErrorKind::kBackend) == 3);
    CHECK(exit_code_for(ErrorKind::kPrerequisite) == 4);
    CHECK(exit_code_for(ErrorKind::kNotLabeled) == 4);
    CHECK(exit_code_for(ErrorKind::kIo) == 1);
    CHECK(exit_code_for(ErrorKind::kNumeric) == 1);
}

#ifdef CROSSFIND_CLI
TEST_CASE("cli: train before label exits 4 and names the gap") {
    Workspace w;
    CHECK(w.cli({"ingest"}).exit_code == 0);
    const auto r = w.cli({"train"});
    CHECK(r.exit_code == 4);
    CHECK(r.err.find("description") != std::string::npos);
}

TEST_CASE("cli: bad arguments exit 2") {
    Workspace w;
    CHECK(w.cli({"split", "--train-fraction", "2"}).exit_code == 2);
    CHECK(w.cli({"no-such-command"}).exit_code == 2);
    w.cli({"ingest"});
    CHECK(w.cli({"label", "--kind", "poem"}).exit_code == 2);
}

TEST_CASE("cli: search and search-similar print what the library returns") {
    Workspace w;
    for (const char* stage : {"ingest", "label", "encode", "train", "index"}) {
        const auto r = w.cli({"-q", stage});
        REQUIRE_MESSAGE(r.exit_code == 0, stage << ": " << r.err);
    }
    const auto sim = w.cli({"search-similar", "--id", "chair-0004", "--k", "5", "--json"});
    REQUIRE(sim.exit_code == 0);
    const Json printed = Json::parse(sim.out);
    const auto lib = run_search_similar(w.config, "chair-0004", 5);
    REQUIRE(printed.size() == lib.size());
    for (std::size_t i = 0; i < lib.size(); ++i) {
        CHECK(printed[i].at("object_id") == lib[i].object_id);
        CHECK(printed[i].at("score").get<double>() == lib[i].score);
        CHECK(printed[i].at("rank") == lib[i].rank);
    }
    const auto search = w.cli({"search", "--query", "a chair for office work", "--k", "3", "--json"});
    REQUIRE(search.exit_code == 0);
    const auto lib_search = run_search(w.config, {"a chair for office work", 3, 0.5});
    CHECK(Json::parse(search.out).at(0).at("object_id") == lib_search.at(0).object_id);
    CHECK(w.cli({"search", "--query", "x", "--k", "0"}).exit_code == 2);
    CHECK(w.cli({"search-similar", "--id", "ghost"}).exit_code == 2);

    const auto table = w.cli({"eval", "--split", "complete", "--model-tag", "close-set"});
    CHECK(table.exit_code == 0);
    CHECK(table.out.find("MRR (0-1)") != std::string::npos);
    CHECK(table.out.find("100.00") != std::string::npos);
}

TEST_CASE("cli: dry run leaves no artifacts behind") {
    Workspace w;
    const auto r = w.cli({"--dry-run", "ingest"});
    CHECK(r.exit_code == 0);
    CHECK_FALSE(std::filesystem::exists(w.config.paths.catalog));
}
#endif

TEST_CASE("external embeddings and descriptions evaluate against identity heads") {
    Workspace w;
    // descriptions and base vectors computed elsewhere
    const auto m = ingest_manifest_file(w.config.paths.manifest);
    std::ofstream desc(w.dir.path() / "descriptions.jsonl");
    std::ofstream images(w.dir.path() / "images.jsonl");
    std::ofstream texts(w.dir.path() / "texts.jsonl");
    for (const auto& r : m.records) {
        desc << Json{{"object_id", r.object_id}, {"text", "A " + *r.display_name + "."}}.dump() << '\n';
        images << Json{{"object_id", r.object_id}, {"vector", mock_embedding("image", r.object_id, kImageDim, 5)}}.dump()
               << '\n';
        texts << Json{{"object_id", r.object_id}, {"vector", mock_embedding("text", r.object_id, kTextDim, 5)}}.dump()
              << '\n';
    }
    desc.close();
    images.close();
    texts.close();

    PipelineRunConfig c = w.config;
    c.paths.descriptions = w.dir.path() / "descriptions.jsonl";
    run_ingest(c, {});
    CHECK(load_catalog(c.paths.catalog).find_description("chair-0002", PromptKind::kTemplate)->text ==
          "A office chair.");
    run_import_embeddings(c, "image", w.dir.path() / "images.jsonl", {});
    run_import_embeddings(c, "text", w.dir.path() / "texts.jsonl", {});
    CHECK(kind_of([&] { run_import_embeddings(c, "audio", w.dir.path() / "texts.jsonl", {}); }) ==
          ErrorKind::kInvalidArgument);
    const auto r = run_eval(c, {EvalSplit::kComplete, "baseline", 1.0, std::string("identity")}, {});
    CHECK(r.n == 20);
    CHECK(r.mrr > 0.0);
    CHECK(r.mrr <= 1.0);
    CHECK(format_metrics_table({r}).find("baseline") != std::string::npos);
}
