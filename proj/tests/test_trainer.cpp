#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "core/trainer.hpp"
#include "oracles.hpp"

using cdc::ChannelKind;
using cdc::EmbeddingDataset;
using cdc::EvalReport;
using cdc::FusedPrediction;
using cdc::Rng;
using cdc::ScmConfig;
using cdc::Split;
using cdc::TemplateBank;
using cdc::TrainConfig;
using cdc::TrainResult;
using cdc::Vec;

namespace {

ScmConfig small_scm() {
    ScmConfig cfg;
    cfg.dim = 32;
    cfg.base_classes = 3;
    cfg.new_classes = 2;
    cfg.relevant_factors = 10;
    cfg.irrelevant_factors = 6;
    cfg.noise_sigma = 0.08;
    cfg.irrelevant_energy = 0.5;
    cfg.shots = 12;
    cfg.test_per_class = 25;
    cfg.seed = 3;
    return cfg;
}

TrainConfig small_train() {
    TrainConfig cfg;
    cfg.num_templates = 3;
    cfg.epochs = 30;
    cfg.batch_size = 4;
    cfg.param_dim = 8;
    cfg.seed = 3;
    return cfg;
}

}  // namespace

TEST_CASE("default channel assignment cycles through the catalog") {
    TrainConfig cfg;
    cfg.num_templates = 6;
    CHECK(cfg.channel_for(0).kind == ChannelKind::identity);
    CHECK(cfg.channel_for(1).kind == ChannelKind::gaussian_jitter);
    CHECK(cfg.channel_for(2).kind == ChannelKind::coordinate_mask);
    CHECK(cfg.channel_for(3).kind == ChannelKind::subspace_rotation);
    CHECK(cfg.channel_for(4).kind == ChannelKind::scale_jitter);
    CHECK(cfg.channel_for(5).kind == ChannelKind::identity);
    CHECK_THROWS_AS(cfg.channel_for(6), cdc::Error);

    cfg.vsd_image = false;
    for (int m = 0; m < 6; ++m) {
        CHECK(cfg.channel_for(m).kind == ChannelKind::identity);
    }

    cfg.vsd_image = true;
    cfg.num_templates = 2;
    cfg.channels = {cdc::AugmentationChannel::parse("scale:0.1"),
                    cdc::AugmentationChannel::parse("identity")};
    CHECK(cfg.channel_for(0).kind == ChannelKind::scale_jitter);
    CHECK(cfg.channel_for(1).kind == ChannelKind::identity);
}

TEST_CASE("config validation rejects bad settings") {
    TrainConfig cfg;
    cfg.num_templates = 0;
    CHECK_THROWS_AS(cfg.validate(), cdc::Error);

    cfg = TrainConfig{};
    cfg.tau = 0.0;
    CHECK_THROWS_AS(cfg.validate(), cdc::Error);

    cfg = TrainConfig{};
    cfg.learning_rate = -1.0;
    CHECK_THROWS_AS(cfg.validate(), cdc::Error);

    cfg = TrainConfig{};
    cfg.beta = -0.1;
    CHECK_THROWS_AS(cfg.validate(), cdc::Error);

    cfg = TrainConfig{};
    cfg.channels = {cdc::AugmentationChannel{}};
    CHECK_THROWS_AS(cfg.validate(), cdc::Error);  // one channel for four templates

    cfg = TrainConfig{};
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("zero epochs returns the initialized bank and empty history") {
    const EmbeddingDataset ds = cdc::generate_scm_dataset(small_scm());
    TrainConfig cfg = small_train();
    cfg.epochs = 0;
    const TrainResult result = cdc::train(ds, cfg);
    CHECK(result.history.epochs.empty());

    const TemplateBank fresh = cdc::init_bank(ds, cfg.num_templates, cfg.param_dim, cfg.seed);
    CHECK(result.bank.theta == fresh.theta);
    CHECK(result.bank.projection == fresh.projection);
    CHECK(result.bank.anchors == fresh.anchors);
}

TEST_CASE("zero learning rate leaves parameters untouched but logs losses") {
    const EmbeddingDataset ds = cdc::generate_scm_dataset(small_scm());
    TrainConfig cfg = small_train();
    cfg.epochs = 3;
    cfg.learning_rate = 0.0;
    const TrainResult result = cdc::train(ds, cfg);

    const TemplateBank fresh = cdc::init_bank(ds, cfg.num_templates, cfg.param_dim, cfg.seed);
    CHECK(result.bank.theta == fresh.theta);
    REQUIRE(result.history.epochs.size() == 3u);
    // Same parameters, same per-sample augmentations per epoch stream: the
    // only epoch-to-epoch variation is the shuffle, which cannot change the
    // epoch mean of per-sample terms by much. The terms must stay finite.
    for (const cdc::LossBreakdown& row : result.history.epochs) {
        CHECK(std::isfinite(row.total));
    }
}

TEST_CASE("training runs are reproducible bit for bit") {
    const EmbeddingDataset ds = cdc::generate_scm_dataset(small_scm());
    TrainConfig cfg = small_train();
    cfg.epochs = 5;
    const TrainResult a = cdc::train(ds, cfg);
    const TrainResult b = cdc::train(ds, cfg);
    CHECK(a.bank.theta == b.bank.theta);
    REQUIRE(a.history.epochs.size() == b.history.epochs.size());
    for (std::size_t i = 0; i < a.history.epochs.size(); ++i) {
        CHECK(a.history.epochs[i].total == b.history.epochs[i].total);
    }

    TrainConfig other = cfg;
    other.seed = cfg.seed + 1;
    const TrainResult c = cdc::train(ds, other);
    CHECK(a.bank.theta != c.bank.theta);
}

TEST_CASE("a single template trains without a decoupling term") {
    const EmbeddingDataset ds = cdc::generate_scm_dataset(small_scm());
    TrainConfig cfg = small_train();
    cfg.num_templates = 1;
    cfg.epochs = 3;
    const TrainResult result = cdc::train(ds, cfg);
    for (const cdc::LossBreakdown& row : result.history.epochs) {
        CHECK(row.decoupling == 0.0);
        CHECK(row.consistency != 0.0);
    }
}

TEST_CASE("loss trends downward across epochs") {
    const EmbeddingDataset ds = cdc::generate_scm_dataset(small_scm());
    TrainConfig cfg = small_train();
    const TrainResult result = cdc::train(ds, cfg);
    REQUIRE(result.history.epochs.size() == 30u);

    int decreasing = 0;
    for (std::size_t i = 1; i < result.history.epochs.size(); ++i) {
        if (result.history.epochs[i].total < result.history.epochs[i - 1].total) ++decreasing;
    }
    CHECK(decreasing >= 23);  // at least ~80 percent of consecutive pairs
    CHECK(result.history.epochs.back().total < result.history.epochs.front().total);
}

TEST_CASE("trained bank beats chance on both partitions") {
    const EmbeddingDataset ds = cdc::generate_scm_dataset(small_scm());
    const TrainConfig cfg = small_train();
    const TrainResult result = cdc::train(ds, cfg);
    const EvalReport report = cdc::evaluate(ds, result.bank, cfg);

    CHECK(report.base_accuracy > 50.0);
    CHECK(report.new_accuracy > 50.0);
    CHECK(report.harmonic_mean_accuracy ==
          doctest::Approx(cdc::harmonic_mean(report.base_accuracy, report.new_accuracy))
              .epsilon(1e-12));
    CHECK(report.per_template_base_accuracy.size() == 3u);
    CHECK(report.per_template_new_accuracy.size() == 3u);
    CHECK(report.conflict_count == 0);
    CHECK(report.vacuous_count == 0);
    CHECK(report.mean_uncertainty >= 0.0);
    CHECK(report.mean_uncertainty <= 1.0);
}

TEST_CASE("prediction with one template is that template's opinion") {
    const EmbeddingDataset ds = cdc::generate_scm_dataset(small_scm());
    TrainConfig cfg = small_train();
    cfg.num_templates = 1;
    cfg.epochs = 2;
    const TrainResult result = cdc::train(ds, cfg);

    std::vector<int> frame;
    for (int c = 0; c < result.bank.num_classes; ++c) frame.push_back(c);
    const Vec& x = ds.samples.front().features;
    const cdc::DirichletOpinion solo = cdc::template_opinion(x, result.bank, 0, cfg, frame);
    const FusedPrediction fused = cdc::predict(x, result.bank, cfg);

    CHECK(fused.fused_count == 1);
    CHECK(fused.uncertainty == doctest::Approx(solo.uncertainty).epsilon(1e-12));
    for (std::size_t i = 0; i < solo.beliefs.size(); ++i) {
        CHECK(fused.beliefs[i] == doctest::Approx(solo.beliefs[i]).epsilon(1e-12));
    }
}

TEST_CASE("prediction matches the straight-line fusion oracle") {
    const EmbeddingDataset ds = cdc::generate_scm_dataset(small_scm());
    const TrainConfig cfg = small_train();
    const TrainResult result = cdc::train(ds, cfg);
    const std::vector<std::vector<Vec>> rows = cdc::materialize(result.bank);

    int checked = 0;
    for (const cdc::Sample& s : ds.samples) {
        if (s.split == Split::base_train) continue;
        if (++checked > 100) break;
        std::vector<std::vector<double>> evidence_list;
        for (int m = 0; m < result.bank.num_templates; ++m) {
            std::vector<double> evidence(static_cast<std::size_t>(result.bank.num_classes));
            for (int c = 0; c < result.bank.num_classes; ++c) {
                const double sim =
                    cdc::dot(rows[static_cast<std::size_t>(m)][static_cast<std::size_t>(c)],
                             s.features);
                evidence[static_cast<std::size_t>(c)] =
                    std::min(std::exp(sim / cfg.tau), cfg.evidence_clamp);
            }
            evidence_list.push_back(std::move(evidence));
        }
        const test_oracle::FusedOracle expect = test_oracle::fuse(evidence_list);
        const FusedPrediction got = cdc::predict(s.features, result.bank, cfg);
        CHECK(got.vacuous == expect.vacuous);
        CHECK(std::abs(got.uncertainty - expect.uncertainty) < 1e-10);
        for (std::size_t i = 0; i < expect.probabilities.size(); ++i) {
            CHECK(std::abs(got.probabilities[i] - expect.probabilities[i]) < 1e-10);
        }
    }
    CHECK(checked > 100);
}

TEST_CASE("an input far from every template yields the vacuous fallback") {
    // Two orthogonal anchors, zero offsets, and an input whose similarity to
    // both rows is strongly negative: all evidence underflows to zero.
    TemplateBank bank;
    bank.num_templates = 2;
    bank.num_classes = 2;
    bank.dim = 4;
    bank.param_dim = 2;
    bank.projection = {Vec{0.0, 0.0}, Vec{0.0, 0.0}, Vec{0.0, 0.0}, Vec{0.0, 0.0}};
    bank.anchors = {Vec{1.0, 0.0, 0.0, 0.0}, Vec{0.0, 1.0, 0.0, 0.0}};
    bank.theta = {Vec{0.0, 0.0}, Vec{0.0, 0.0}};

    TrainConfig cfg;
    cfg.num_templates = 2;
    cfg.tau = 1e-4;
    const Vec x = cdc::l2_normalize(Vec{-1.0, -1.0, 0.0, 0.0});

    const FusedPrediction pred = cdc::predict(x, bank, cfg);
    CHECK(pred.vacuous);
    CHECK(pred.uncertainty == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pred.probabilities[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(pred.probabilities[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("clean well-separated classes evaluate perfectly without training") {
    ScmConfig scm;
    scm.dim = 24;
    scm.base_classes = 3;
    scm.new_classes = 2;
    scm.relevant_factors = 10;  // disjoint factor pairs for all five classes
    scm.irrelevant_factors = 0;
    scm.noise_sigma = 0.0;
    scm.shots = 4;
    scm.test_per_class = 10;
    scm.seed = 2;
    const EmbeddingDataset ds = cdc::generate_scm_dataset(scm);

    TrainConfig cfg = small_train();
    cfg.epochs = 0;
    const TrainResult result = cdc::train(ds, cfg);
    const EvalReport report = cdc::evaluate(ds, result.bank, cfg);
    CHECK(report.base_accuracy == doctest::Approx(100.0));
    CHECK(report.new_accuracy == doctest::Approx(100.0));
    CHECK(report.harmonic_mean_accuracy == doctest::Approx(100.0));
    CHECK(report.conflict_count == 0);
}

TEST_CASE("mean-probability fallback works when evidence fusion is off") {
    const EmbeddingDataset ds = cdc::generate_scm_dataset(small_scm());
    TrainConfig cfg = small_train();
    cfg.epochs = 10;
    cfg.dstc = false;
    const TrainResult result = cdc::train(ds, cfg);
    const EvalReport report = cdc::evaluate(ds, result.bank, cfg);
    CHECK(report.base_accuracy > 40.0);
    CHECK(report.mean_uncertainty == 0.0);
    CHECK(report.vacuous_count == 0);
    CHECK(report.conflict_count == 0);
}

TEST_CASE("evaluation rejects incompatible or incomplete inputs") {
    const EmbeddingDataset ds = cdc::generate_scm_dataset(small_scm());
    TrainConfig cfg = small_train();
    cfg.epochs = 0;
    const TrainResult result = cdc::train(ds, cfg);

    ScmConfig other_scm = small_scm();
    other_scm.dim = 16;
    other_scm.relevant_factors = 8;
    other_scm.irrelevant_factors = 4;
    const EmbeddingDataset other = cdc::generate_scm_dataset(other_scm);
    try {
        cdc::evaluate(other, result.bank, cfg);
        CHECK(false);
    } catch (const cdc::Error& e) {
        CHECK(e.code() == cdc::errc::incompatible);
        CHECK(std::string(e.what()).find("checkpoint") != std::string::npos);
        CHECK(std::string(e.what()).find("dataset") != std::string::npos);
    }

    // All classes re-tagged base: no new-test rows left.
    const EmbeddingDataset no_new = cdc::split_base_new(ds, {0, 1, 2, 3, 4});
    try {
        cdc::evaluate(no_new, result.bank, cfg);
        CHECK(false);
    } catch (const cdc::Error& e) {
        CHECK(e.code() == cdc::errc::empty_partition);
    }

    const Vec short_input(8, 0.1);
    try {
        cdc::predict(short_input, result.bank, cfg);
        CHECK(false);
    } catch (const cdc::Error& e) {
        CHECK(e.code() == cdc::errc::incompatible);
    }
    CHECK_THROWS_AS(cdc::template_opinion(ds.samples[0].features, result.bank, 0, cfg, {}),
                    cdc::Error);
    CHECK_THROWS_AS(cdc::template_opinion(ds.samples[0].features, result.bank, 0, cfg, {0, 99}),
                    cdc::Error);
}

TEST_CASE("training requires base rows") {
    EmbeddingDataset ds = cdc::generate_scm_dataset(small_scm());
    for (cdc::Sample& s : ds.samples) s.split = Split::new_test;
    TrainConfig cfg = small_train();
    try {
        cdc::train(ds, cfg);
        CHECK(false);
    } catch (const cdc::Error& e) {
        CHECK(e.code() == cdc::errc::empty_dataset);
    }
}

TEST_CASE("harmonic mean worked values") {
    CHECK(cdc::harmonic_mean(82.69, 63.22) == doctest::Approx(71.66).epsilon(0.0002));
    CHECK(cdc::harmonic_mean(94.07, 73.23) == doctest::Approx(82.35).epsilon(0.0002));
    CHECK(cdc::harmonic_mean(83.34, 77.38) == doctest::Approx(80.25).epsilon(0.0002));
    CHECK(cdc::harmonic_mean(50.0, 50.0) == doctest::Approx(50.0).epsilon(1e-12));
    CHECK(cdc::harmonic_mean(0.0, 80.0) == 0.0);
    CHECK(cdc::harmonic_mean(80.0, 0.0) == 0.0);
    CHECK(cdc::harmonic_mean(100.0, 100.0) == doctest::Approx(100.0).epsilon(1e-12));
    CHECK_THROWS_AS(cdc::harmonic_mean(-1.0, 50.0), cdc::Error);
    CHECK_THROWS_AS(cdc::harmonic_mean(50.0, 101.0), cdc::Error);
}
