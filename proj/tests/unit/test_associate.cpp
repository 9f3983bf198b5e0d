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

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <numbers>
#include <random>

#include "crossfind/associate.hpp"
#include "crossfind/synthetic.hpp"
#include "oracles.hpp"

using namespace crossfind;

namespace {

Matrix gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> d;
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = d(rng);
    return m;
}

TrainingBatch random_batch(std::mt19937_64& rng, Eigen::Index n, Eigen::Index di, Eigen::Index dt) {
    TrainingBatch b{gaussian(rng, n, di), gaussian(rng, n, dt), {}};
    for (Eigen::Index i = 0; i < n; ++i) b.object_ids.push_back("o" + std::to_string(i));
    return b;
}

ProjectionHeads random_heads(std::mt19937_64& rng, Eigen::Index di, Eigen::Index dt, Eigen::Index ds) {
    ProjectionHeads h;
    h.image = gaussian(rng, di, ds);
    h.text = gaussian(rng, dt, ds);
    return h;
}

ProjectionHeads identity2() { return ProjectionHeads::identity(2, 2, 2); }

TrainingBatch batch2(std::initializer_list<std::array<double, 2>> img, std::initializer_list<std::array<double, 2>> txt) {
    TrainingBatch b;
    b.images.resize(static_cast<Eigen::Index>(img.size()), 2);
    b.texts.resize(static_cast<Eigen::Index>(txt.size()), 2);
    Eigen::Index i = 0;
    for (const auto& r : img) {
        b.images(i, 0) = r[0];
        b.images(i++, 1) = r[1];
    }
    i = 0;
    for (const auto& r : txt) {
        b.texts(i, 0) = r[0];
        b.texts(i++, 1) = r[1];
    }
    return b;
}

struct Corpus {
    SyntheticCorpus data;
    BaseEmbeddings bases() const { return {&data.images, &data.texts}; }
};

Corpus small_corpus(std::size_t n, std::size_t di = 24, std::size_t dt = 16) {
    SyntheticOptions o;
    o.count = n;
    o.image_dim = di;
    o.text_dim = dt;
    o.seed = 3;
    Corpus c{make_synthetic_corpus(o)};
    c.data.catalog = assign_splits(c.data.catalog, 0.75, 1);
    return c;
}

}  // namespace

TEST_CASE("projection normalizes: (3, 4) -> (0.6, 0.8), scale invariant") {
    const std::vector<float> v = {3.0f, 4.0f};
    const auto p = project_image(v, identity2());
    CHECK(p[0] == doctest::Approx(0.6).epsilon(1e-7));
    CHECK(p[1] == doctest::Approx(0.8).epsilon(1e-7));
    const std::vector<float> big = {30.0f, 40.0f};
    CHECK(project_text(big, identity2()) == p);
    const std::vector<float> zero = {0.0f, 0.0f};
    try {
        project_image(zero, identity2());
        FAIL("expected degenerate");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::kNumeric);
    }
    const std::vector<float> wide = {1.0f, 2.0f, 3.0f};
    CHECK_THROWS_AS(project_image(wide, identity2()), Error);
}

TEST_CASE("projected vectors have unit norm for random heads") {
    std::mt19937_64 rng(5);
    const auto h = ProjectionHeads::random(11, 40, 30, 20);
    for (int t = 0; t < 20; ++t) {
        const auto x = oracle::random_unit(rng, 40);
        double s = 0.0;
        for (float f : project_image(x, h)) s += static_cast<double>(f) * f;
        CHECK(std::sqrt(s) == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("cosine of unit vectors") {
    const std::vector<float> a = {1.0f, 0.0f};
    const std::vector<float> b = {0.0f, 1.0f};
    const std::vector<float> c = {-1.0f, 0.0f};
    CHECK(cosine_sim(a, a) == 1.0);
    CHECK(cosine_sim(a, b) == 0.0);
    CHECK(cosine_sim(a, c) == -1.0);
    const std::vector<float> d = {0.6f, 0.8f};
    CHECK(cosine_sim(a, d) == doctest::Approx(0.6).epsilon(1e-7));
    const std::vector<float> three = {1.0f, 0.0f, 0.0f};
    CHECK_THROWS_AS(cosine_sim(a, three), Error);
}

TEST_CASE("uniform similarity gives 2 ln N") {
    for (Eigen::Index n : {2, 4, 32}) {
        const Matrix s = Matrix::Constant(n, n, 0.37);
        CHECK(std::abs(contrastive_loss_from_similarity(s) - 2.0 * std::log(static_cast<double>(n))) < 1e-9);
    }
    // identical rows through the full path
    TrainingBatch b = batch2({{1, 1}, {1, 1}, {1, 1}, {1, 1}}, {{2, 0}, {2, 0}, {2, 0}, {2, 0}});
    CHECK(std::abs(contrastive_loss(b, identity2()).value - 2.0 * std::log(4.0)) < 1e-9);
}

TEST_CASE("perfect separation at N=2") {
    const double expected = 2.0 * (std::log(std::numbers::e + 1.0 / std::numbers::e) - 1.0);
    CHECK(expected == doctest::Approx(0.253856).epsilon(1e-6));
    const TrainingBatch b = batch2({{1, 0}, {-1, 0}}, {{1, 0}, {-1, 0}});
    CHECK(std::abs(contrastive_loss(b, identity2()).value - expected) < 1e-12);
    CHECK(std::abs(oracle::loss(b, identity2()) - expected) < 1e-12);
}

TEST_CASE("temperature divides the similarities") {
    const TrainingBatch b = batch2({{1, 0}, {-1, 0}}, {{1, 0}, {-1, 0}});
    const double t = 0.5;
    const double expected = 2.0 * (std::log(std::exp(2.0) + std::exp(-2.0)) - 2.0);
    CHECK(contrastive_loss(b, identity2(), t).value == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("N=32 random batch matches the scalar oracle") {
    std::mt19937_64 rng(32);
    const auto b = random_batch(rng, 32, 24, 16);
    const auto h = random_heads(rng, 24, 16, 8);
    CHECK(std::abs(contrastive_loss(b, h).value - oracle::loss(b, h)) < 1e-10);
    CHECK(std::abs(loss_gradients(b, h).loss.value - oracle::loss(b, h)) < 1e-10);
    CHECK(std::abs(contrastive_loss(b, h, 0.07).value - oracle::loss(b, h, 0.07)) < 1e-10);
}

TEST_CASE("analytic gradients match central differences over 24 seeds") {
    int seed = 0;
    for (Eigen::Index n : {2, 4, 8}) {
        for (int rep = 0; rep < 8; ++rep, ++seed) {
            std::mt19937_64 rng(1000 + static_cast<std::uint64_t>(seed));
            const auto b = random_batch(rng, n, 6, 5);
            const auto h = random_heads(rng, 6, 5, 4);
            const auto g = loss_gradients(b, h);
            CHECK(oracle::max_relative_error(g.image, oracle::finite_difference(b, h, 0, 1e-4), 1e-3) < 1e-4);
            CHECK(oracle::max_relative_error(g.text, oracle::finite_difference(b, h, 1, 1e-4), 1e-3) < 1e-4);
        }
    }
}

TEST_CASE("gradients with a temperature match central differences") {
    std::mt19937_64 rng(77);
    const auto b = random_batch(rng, 4, 6, 5);
    const auto h = random_heads(rng, 6, 5, 4);
    const auto g = loss_gradients(b, h, 0.3);
    CHECK(oracle::max_relative_error(g.image, oracle::finite_difference(b, h, 0, 1e-5, 0.3), 1e-3) < 1e-4);
    CHECK(oracle::max_relative_error(g.text, oracle::finite_difference(b, h, 1, 1e-5, 0.3), 1e-3) < 1e-4);
}

TEST_CASE("a batch of identical pairs is stationary") {
    const TrainingBatch b = batch2({{1, 2}, {1, 2}, {1, 2}}, {{3, -1}, {3, -1}, {3, -1}});
    const auto h = ProjectionHeads::random(4, 2, 2, 3);
    const auto g = loss_gradients(b, h);
    CHECK(g.image.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(g.text.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(g.loss.value == doctest::Approx(2.0 * std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("duplicating every pair adds 2 ln 2 and leaves the gradient unchanged") {
    std::mt19937_64 rng(9);
    const auto b = random_batch(rng, 5, 6, 5);
    const auto h = random_heads(rng, 6, 5, 4);
    TrainingBatch d;
    d.images.resize(10, 6);
    d.texts.resize(10, 5);
    d.images << b.images, b.images;
    d.texts << b.texts, b.texts;
    const auto gb = loss_gradients(b, h);
    const auto gd = loss_gradients(d, h);
    CHECK(std::abs(gd.loss.value - (gb.loss.value + 2.0 * std::log(2.0))) < 1e-12);
    CHECK((gd.image - gb.image).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((gd.text - gb.text).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("loss is invariant to permuting the batch") {
    std::mt19937_64 rng(21);
    const auto b = random_batch(rng, 8, 6, 5);
    const auto h = random_heads(rng, 6, 5, 4);
    std::vector<int> perm(8);
    std::iota(perm.begin(), perm.end(), 0);
    for (int t = 0; t < 10; ++t) {
        std::shuffle(perm.begin(), perm.end(), rng);
        TrainingBatch p = b;
        for (int i = 0; i < 8; ++i) {
            p.images.row(i) = b.images.row(perm[static_cast<std::size_t>(i)]);
            p.texts.row(i) = b.texts.row(perm[static_cast<std::size_t>(i)]);
        }
        CHECK(std::abs(contrastive_loss(p, h).value - contrastive_loss(b, h).value) < 1e-12);
    }
}

TEST_CASE("a small gradient step does not increase the loss") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        std::mt19937_64 rng(seed);
        const auto b = random_batch(rng, 8, 6, 5);
        ProjectionHeads h = random_heads(rng, 6, 5, 4);
        const auto g = loss_gradients(b, h);
        const double before = g.loss.value;
        h.image -= 1e-3 * g.image;
        h.text -= 1e-3 * g.text;
        CHECK(contrastive_loss(b, h).value <= before);
    }
}

TEST_CASE("batches need two pairs and finite, non-degenerate projections") {
    std::mt19937_64 rng(1);
    const auto h = random_heads(rng, 2, 2, 2);
    CHECK_THROWS_AS(contrastive_loss(batch2({{1, 0}}, {{1, 0}}), h), Error);
    CHECK_THROWS_AS(contrastive_loss(batch2({{1, 0}, {0, 1}}, {{1, 0}}), h), Error);
    try {
        contrastive_loss(batch2({{0, 0}, {0, 1}}, {{1, 0}, {0, 1}}), h);
        FAIL("expected degenerate");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::kNumeric);
    }
    CHECK_THROWS_AS(contrastive_loss(batch2({{1, 0}, {0, 1}}, {{1, 0}, {0, 1}}), h, 0.0), Error);
}

TEST_CASE("learning rate schedule: warmup then cosine to zero") {
    TrainConfig c;
    c.peak_lr = 1.0;
    c.warmup_steps = 10;
    CHECK(lr_at_step(0, c, 110) == 0.0);
    CHECK(lr_at_step(5, c, 110) == doctest::Approx(0.5));
    CHECK(lr_at_step(10, c, 110) == 1.0);
    CHECK(lr_at_step(60, c, 110) == doctest::Approx(0.5));
    CHECK(lr_at_step(110, c, 110) == doctest::Approx(0.0).epsilon(1e-15));
    double prev = 2.0;
    for (std::size_t s = 10; s <= 110; ++s) {
        const double lr = lr_at_step(s, c, 110);
        CHECK(lr <= prev);
        prev = lr;
    }
    CHECK_THROWS_AS(lr_at_step(0, c, 10), Error);
    CHECK_THROWS_AS(lr_at_step(111, c, 110), Error);
    c.warmup_steps = 0;
    CHECK(lr_at_step(0, c, 5) == 1.0);
}

TEST_CASE("planned steps merge a trailing single sample") {
    TrainConfig c;
    c.batch_size = 32;
    c.epochs = 5;
    CHECK(planned_steps(200, c) == 35);
    CHECK(planned_steps(160, c) == 25);
    CHECK(planned_steps(33, c) == 5);
    CHECK(planned_steps(34, c) == 10);
    CHECK(planned_steps(5, c) == 5);
}

TEST_CASE("the default config is rejected for 200 objects: fewer steps than warmup") {
    auto c = small_corpus(200);
    c.data.catalog = assign_splits(c.data.catalog, 1.0, 1);
    try {
        train(c.data.catalog, c.bases(), TrainConfig{});
        FAIL("expected rejection");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::kInvalidArgument);
        CHECK(std::string(e.what()).find("35") != std::string::npos);
        CHECK(std::string(e.what()).find("50") != std::string::npos);
    }
}

TEST_CASE("training lowers the loss and is deterministic") {
    const auto c = small_corpus(48);
    TrainConfig cfg;
    cfg.batch_size = 8;
    cfg.epochs = 6;
    cfg.warmup_steps = 4;
    cfg.peak_lr = 0.5;
    cfg.temperature = 0.1;
    const auto a = train(c.data.catalog, c.bases(), cfg, ProjectionHeads::random(2, 24, 16, 8));
    const auto b = train(c.data.catalog, c.bases(), cfg, ProjectionHeads::random(2, 24, 16, 8));
    CHECK(a.history == b.history);
    CHECK(a.heads.image == b.heads.image);
    CHECK(a.history.final_loss < a.history.initial_loss);
    CHECK(a.history.steps.size() == planned_steps(36, cfg));
    CHECK(a.history.epochs.size() == 6);
    CHECK(a.best_validation.has_value());
    CHECK(a.history.epochs.back().validation_loss.has_value());
    CHECK(a.heads.version == a.heads.content_version());
    CHECK(a.history.steps.front().learning_rate == 0.0);

    const std::string jsonl = a.history.to_jsonl();
    CHECK(std::count(jsonl.begin(), jsonl.end(), '\n') ==
          static_cast<std::ptrdiff_t>(a.history.steps.size() + a.history.epochs.size() + 1));

    cfg.seed = 1;
    const auto other = train(c.data.catalog, c.bases(), cfg, ProjectionHeads::random(2, 24, 16, 8));
    CHECK_FALSE(other.history == a.history);
}

TEST_CASE("a diverging run raises TrainingDiverged carrying a finite checkpoint") {
    const auto c = small_corpus(24);
    TrainConfig cfg;
    cfg.batch_size = 6;
    cfg.epochs = 3;
    cfg.warmup_steps = 0;
    cfg.peak_lr = 1e300;
    bool thrown = false;
    try {
        train(c.data.catalog, c.bases(), cfg, ProjectionHeads::random(2, 24, 16, 8));
    } catch (const TrainingDiverged& e) {
        thrown = true;
        CHECK(e.kind() == ErrorKind::kNumeric);
        CHECK(e.last_good().image.allFinite());
        CHECK(e.last_good().text.allFinite());
    }
    CHECK(thrown);
}

TEST_CASE("training needs splits and embeddings for every split member") {
    auto c = small_corpus(12);
    SyntheticOptions o;
    o.count = 12;
    o.image_dim = 24;
    o.text_dim = 16;
    const auto plain = make_synthetic_corpus(o);
    TrainConfig cfg;
    cfg.batch_size = 4;
    cfg.warmup_steps = 0;
    CHECK_THROWS_AS(train(plain.catalog, {&plain.images, &plain.texts}, cfg), Error);

    EmbeddingTable partial(16);
    for (const auto& id : c.data.texts.ids()) {
        if (id != synthetic_id(3)) partial.add(id, c.data.texts.at(id));
    }
    try {
        train(c.data.catalog, {&c.data.images, &partial}, cfg, ProjectionHeads::random(2, 24, 16, 8));
        FAIL("expected missing embeddings");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::kPrerequisite);
        CHECK(std::string(e.what()).find(synthetic_id(3)) != std::string::npos);
    }
}

TEST_CASE("config validation and round trip") {
    TrainConfig c;
    CHECK(TrainConfig::from_json(c.to_json()).digest() == c.digest());
    c.batch_size = 1;
    CHECK_THROWS_AS(c.validate(), Error);
    c = TrainConfig{};
    c.schedule = "linear";
    CHECK_THROWS_AS(c.validate(), Error);
    c = TrainConfig{};
    c.temperature = -1;
    CHECK_THROWS_AS(c.validate(), Error);
    TrainConfig d;
    d.peak_lr = 1e-3;
    CHECK(d.digest() != TrainConfig{}.digest());
}

TEST_CASE("heads persist with their version and standard shapes") {
    oracle::TempDir dir("heads");
    const auto h = ProjectionHeads::random(5);
    h.validate_standard();
    save_heads(dir.path() / "h.xfb", h, {{"note", "x"}});
    Json header;
    const auto back = load_heads(dir.path() / "h.xfb", &header);
    CHECK(back.version == h.version);
    CHECK(back.content_version() == h.version);
    CHECK(header.at("note") == "x");
    CHECK(back.image.rows() == 768);
    CHECK(back.text.rows() == 512);
    CHECK((back.image - h.image).cwiseAbs().maxCoeff() < 1e-6);
    CHECK_THROWS_AS(ProjectionHeads::random(5, 10, 512, 512).validate_standard(), Error);
    const auto id = ProjectionHeads::identity();
    CHECK(id.image(3, 3) == 1.0);
    CHECK(id.image(600, 0) == 0.0);
}
