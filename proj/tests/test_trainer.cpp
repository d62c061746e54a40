#include "edbn/trainer.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using edbn::Dataset;
using edbn::PretrainMode;
using edbn::TrainConfig;

namespace {

Dataset small_synth(std::uint64_t seed, std::size_t rows = 96, double id_sigma = 0.5,
                    double noise = 0.1) {
    edbn::SynthSpec spec;
    spec.rows = rows;
    spec.distinct_ids = 8;
    spec.feature_count = 4;
    spec.time_blocks = 8;
    spec.id_sigma = id_sigma;
    spec.noise_sigma = noise;
    spec.nonlinearity_scale = 0.2;
    spec.seed = seed;
    return edbn::generate_synthetic(spec).dataset;
}

TrainConfig quick_config() {
    TrainConfig cfg;
    cfg.batch_size = 32;
    cfg.total_epochs = 2;
    cfg.pretrain_mode = PretrainMode::none;
    cfg.warmup_steps = 10;
    cfg.val_fraction = 0.25;
    cfg.seed = 3;
    return cfg;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

TEST_CASE("train with zero epochs returns the initialized net and empty report") {
    Dataset ds = small_synth(1);
    TrainConfig cfg = quick_config();
    cfg.total_epochs = 0;
    cfg.pretrain_mode = PretrainMode::both;
    auto res = edbn::train(cfg, ds);
    CHECK(res.report.epochs.empty());
    CHECK(res.report.lr_trace.empty());

    // identical to a bare build from the documented init stream
    edbn::Rng root(cfg.seed);
    edbn::Rng init = root.derive(1);
    auto [train_ds, val_ds] = edbn::time_split(ds, cfg.val_fraction);
    edbn::ModelConfig mc;
    mc.feature_count = train_ds.feature_count();
    mc.id_vocab = train_ds.vocab.size();
    auto expect = edbn::build<float>(mc, init);
    CHECK(edbn::fnv1a_checksum(res.net) == edbn::fnv1a_checksum(expect));
}

TEST_CASE("pretrain_branch with zero epochs returns its initialization unchanged") {
    Dataset ds = small_synth(2);
    TrainConfig cfg = quick_config();
    cfg.pretrain_epochs = 0;

    edbn::Rng r1(5);
    auto bw = edbn::pretrain_branch(edbn::BranchKind::dense, ds, cfg, r1);
    CHECK(std::isnan(bw.train_pearson));

    edbn::Rng r2(5);
    edbn::ModelConfig mc;
    mc.feature_count = ds.feature_count();
    mc.id_vocab = ds.vocab.size();
    mc = mc.resolved();
    auto expect = edbn::build_stack<float>(mc.feature_count, mc.branch_a_widths, r2);
    REQUIRE(bw.layers.size() == expect.size());
    for (std::size_t l = 0; l < expect.size(); ++l) {
        CHECK(bw.layers[l].weight == expect[l].weight);
        CHECK(bw.layers[l].bias == expect[l].bias);
    }
}

TEST_CASE("pretrain_branch determinism") {
    Dataset ds = small_synth(3);
    TrainConfig cfg = quick_config();
    cfg.pretrain_epochs = 2;
    edbn::Rng r1(9), r2(9);
    auto a = edbn::pretrain_branch(edbn::BranchKind::id, ds, cfg, r1);
    auto b = edbn::pretrain_branch(edbn::BranchKind::id, ds, cfg, r2);
    CHECK(a.embedding == b.embedding);
    for (std::size_t l = 0; l < a.layers.size(); ++l) CHECK(a.layers[l].weight == b.layers[l].weight);
}

TEST_CASE("dense pre-training fits clean linear data") {
    edbn::SynthSpec spec;
    spec.rows = 256;
    spec.distinct_ids = 4;
    spec.feature_count = 4;
    spec.seed = 11; // pure linear target, no id effect, no noise
    Dataset ds = edbn::generate_synthetic(spec).dataset;

    TrainConfig cfg;
    cfg.batch_size = 32;
    cfg.total_epochs = 100;
    cfg.pretrain_epochs = 60;
    cfg.warmup_steps = 50;
    cfg.seed = 4;
    edbn::Rng rng(4);
    auto bw = edbn::pretrain_branch(edbn::BranchKind::dense, ds, cfg, rng);
    CHECK(bw.train_pearson > 0.99);
}

TEST_CASE("training reduces the loss on default synthetic data") {
    Dataset ds = small_synth(12, 160);
    TrainConfig cfg = quick_config();
    cfg.total_epochs = 6;
    cfg.warmup_steps = 5;
    auto res = edbn::train(cfg, ds);
    REQUIRE(res.report.epochs.size() == 6);
    CHECK(res.report.epochs.back().train_loss < res.report.epochs.front().train_loss);
    CHECK(res.report.wall_seconds > 0.0);
}

TEST_CASE("train is bitwise deterministic across runs") {
    Dataset ds = small_synth(13);
    TrainConfig cfg = quick_config();
    cfg.pretrain_mode = PretrainMode::both;
    cfg.pretrain_epochs = 1;
    cfg.joint_epochs = 2;

    auto a = edbn::train(cfg, ds);
    auto b = edbn::train(cfg, ds);
    CHECK(a.report.param_checksum == b.report.param_checksum);
    REQUIRE(a.report.epochs.size() == b.report.epochs.size());
    for (std::size_t i = 0; i < a.report.epochs.size(); ++i) {
        CHECK(a.report.epochs[i].train_loss == b.report.epochs[i].train_loss);
        CHECK(a.report.epochs[i].lr == b.report.epochs[i].lr);
    }

    auto pa = std::filesystem::temp_directory_path() / "edbn_det_a.bin";
    auto pb = std::filesystem::temp_directory_path() / "edbn_det_b.bin";
    edbn::save_model(a.net, a.vocab_raw_ids, a.feature_names, pa.string());
    edbn::save_model(b.net, b.vocab_raw_ids, b.feature_names, pb.string());
    CHECK(slurp(pa) == slurp(pb));
}

TEST_CASE("pretrain knobs are inert when mode is none") {
    Dataset ds = small_synth(14);
    TrainConfig cfg = quick_config();
    cfg.pretrain_mode = PretrainMode::none;
    cfg.pretrain_epochs = 3;
    auto a = edbn::train(cfg, ds);
    cfg.pretrain_epochs = 17;
    auto b = edbn::train(cfg, ds);
    CHECK(a.report.param_checksum == b.report.param_checksum);
    for (const auto& e : a.report.epochs) CHECK(e.phase == "joint");
}

TEST_CASE("phase schedule: both branches then joint, epochs sum to total") {
    Dataset ds = small_synth(15);
    TrainConfig cfg = quick_config();
    cfg.total_epochs = 6;
    cfg.pretrain_mode = PretrainMode::both;
    cfg.pretrain_epochs = 2;
    auto res = edbn::train(cfg, ds);
    REQUIRE(res.report.epochs.size() == 6); // 2 + 2 + 2
    CHECK(res.report.epochs[0].phase == "pretrain_dense");
    CHECK(res.report.epochs[2].phase == "pretrain_id");
    CHECK(res.report.epochs[4].phase == "joint");

    cfg.pretrain_epochs = 4; // 8 > total
    CHECK_THROWS_AS(edbn::train(cfg, ds), edbn::ConfigError);
}

TEST_CASE("learning-rate trace equals the warm-up schedule at every step") {
    Dataset ds = small_synth(16);
    TrainConfig cfg = quick_config();
    cfg.total_epochs = 4;
    cfg.warmup_steps = 7;
    auto res = edbn::train(cfg, ds);
    edbn::WarmupSchedule sched{cfg.lr_base, cfg.warmup_steps};
    REQUIRE(!res.report.lr_trace.empty());
    for (std::size_t i = 0; i < res.report.lr_trace.size(); ++i)
        CHECK(res.report.lr_trace[i] == edbn::warmup_lr(res.report.lr_trace_steps[i], sched));
    // epoch-end lr column matches the trace
    CHECK(res.report.epochs.back().lr == res.report.lr_trace.back());
}

TEST_CASE("freeze_pretrained leaves branch weights at their pre-trained values") {
    Dataset ds = small_synth(17);
    TrainConfig cfg = quick_config();
    cfg.pretrain_mode = PretrainMode::both;
    cfg.pretrain_epochs = 0; // branches stay at the pretrain streams' init
    cfg.joint_epochs = 2;
    cfg.freeze_pretrained = true;
    auto res = edbn::train(cfg, ds);

    // reconstruct the documented stream layout
    auto [train_ds, val_ds] = edbn::time_split(ds, cfg.val_fraction);
    edbn::ModelConfig mc;
    mc.feature_count = train_ds.feature_count();
    mc.id_vocab = train_ds.vocab.size();
    mc = mc.resolved();
    edbn::Rng root(cfg.seed);
    edbn::Rng dense_rng = root.derive(2);
    auto expect_a = edbn::build_stack<float>(mc.feature_count, mc.branch_a_widths, dense_rng);
    for (std::size_t l = 0; l < expect_a.size(); ++l)
        CHECK(res.net.branch_a[l].weight == expect_a[l].weight);

    edbn::Rng id_rng = root.derive(3);
    edbn::MatF expect_emb = edbn::seeded_uniform<float>(id_rng, -0.05, 0.05, mc.id_vocab, mc.embed_dim);
    CHECK(res.net.embedding.table == expect_emb);

    // the head did train
    edbn::Rng init_rng = root.derive(1);
    auto built = edbn::build<float>(mc, init_rng);
    bool head_moved = false;
    for (std::size_t l = 0; l < built.head.size() && !head_moved; ++l)
        head_moved = !(res.net.head[l].weight == built.head[l].weight);
    CHECK(head_moved);
}

TEST_CASE("evaluate matches the metrics module and is stateless") {
    Dataset ds = small_synth(18);
    TrainConfig cfg = quick_config();
    auto res = edbn::train(cfg, ds);

    auto preds = edbn::predict_all(res.net, ds);
    edbn::MetricReport direct;
    direct.pearson = edbn::pearson(std::span<const float>(preds), std::span<const float>(ds.target));
    direct.mse = edbn::mse_metric(std::span<const float>(preds), std::span<const float>(ds.target));

    auto r1 = edbn::evaluate(res.net, ds);
    auto r2 = edbn::evaluate(res.net, ds);
    CHECK(r1.pearson == direct.pearson);
    CHECK(r1.mse == direct.mse);
    CHECK(r1.n == ds.rows());
    CHECK(r1.pearson == r2.pearson);
    CHECK(r1.mse == r2.mse);
}

TEST_CASE("evaluate: predictions equal to targets give pearson 1, mse 0") {
    Dataset ds = small_synth(19);
    TrainConfig cfg = quick_config();
    cfg.total_epochs = 1;
    auto res = edbn::train(cfg, ds);
    Dataset fitted = ds;
    fitted.target = edbn::predict_all(res.net, fitted);
    auto r = edbn::evaluate(res.net, fitted);
    CHECK(r.pearson == 1.0);
    CHECK(r.mse == 0.0);
}

TEST_CASE("evaluate surfaces the undefined-correlation error with context") {
    Dataset ds = small_synth(20);
    TrainConfig cfg = quick_config();
    cfg.total_epochs = 0;
    auto res = edbn::train(cfg, ds);
    for (auto span : edbn::param_views(res.net))
        for (auto& v : span) v = 0.0f; // constant predictor
    CHECK_THROWS_WITH_AS(edbn::evaluate(res.net, ds), doctest::Contains("constant"), edbn::NumericError);
}

TEST_CASE("report CSV has the documented columns and one row per epoch") {
    Dataset ds = small_synth(21);
    TrainConfig cfg = quick_config();
    cfg.total_epochs = 3;
    auto res = edbn::train(cfg, ds);
    auto p = std::filesystem::temp_directory_path() / "edbn_report.csv";
    edbn::write_report_csv(res.report, p.string());
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    CHECK(line == "phase,epoch,train_loss,val_pearson,val_mse,lr");
    std::size_t rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == res.report.epochs.size());
}

TEST_CASE("dense-only ablation trains and predicts") {
    Dataset ds = small_synth(22, 128);
    TrainConfig cfg = quick_config();
    cfg.total_epochs = 2;
    auto res = edbn::train_dense_only(cfg, ds);
    CHECK(res.report.epochs.size() == 2);
    auto preds = edbn::mlp_predict_all(res.layers, ds);
    CHECK(preds.size() == ds.rows());
    auto res2 = edbn::train_dense_only(cfg, ds);
    auto preds2 = edbn::mlp_predict_all(res2.layers, ds);
    CHECK(preds == preds2);
}
