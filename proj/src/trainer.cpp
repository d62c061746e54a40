#include "edbn/trainer.hpp"

#include "edbn/error.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

namespace edbn {

PretrainMode pretrain_mode_from_string(const std::string& s) {
    if (s == "none") return PretrainMode::none;
    if (s == "dense") return PretrainMode::dense;
    if (s == "id") return PretrainMode::id;
    if (s == "both") return PretrainMode::both;
    throw ValueError("unknown pretrain mode '" + s + "' (none|dense|id|both)");
}

std::string to_string(PretrainMode m) {
    switch (m) {
        case PretrainMode::none: return "none";
        case PretrainMode::dense: return "dense";
        case PretrainMode::id: return "id";
        case PretrainMode::both: return "both";
    }
    return "?";
}

std::size_t TrainConfig::effective_joint_epochs() const {
    if (total_epochs == 0) return 0;
    if (joint_epochs >= 0) return static_cast<std::size_t>(joint_epochs);
    std::size_t pre = pretrained_branches() * pretrain_epochs;
    if (pre > total_epochs)
        throw ConfigError("train config: pre-training consumes " + std::to_string(pre) +
                          " epochs but total_epochs is " + std::to_string(total_epochs));
    return total_epochs - pre;
}

void TrainConfig::validate() const {
    if (lr_base <= 0) throw ConfigError("train config: lr must be > 0");
    if (batch_size < 1) throw ConfigError("train config: batch_size must be >= 1");
    if (warmup_steps < 1) throw ConfigError("train config: warmup_steps must be >= 1");
    if (!(val_fraction >= 0.0 && val_fraction < 1.0))
        throw ConfigError("train config: val_fraction must be in [0, 1)");
    if (threads < 1) throw ConfigError("train config: threads must be >= 1");
    effective_joint_epochs(); // throws when phases cannot sum to total
}

std::uint64_t fnv1a_checksum(const DualBranchNet<float>& net) {
    std::uint64_t h = 1469598103934665603ULL;
    auto views = tensor_views<const float>(net);
    for (const auto& span : views)
        for (float v : span) {
            std::uint32_t bits;
            static_assert(sizeof(bits) == sizeof(v));
            std::memcpy(&bits, &v, sizeof(bits));
            for (int b = 0; b < 4; ++b) {
                h ^= (bits >> (8 * b)) & 0xFF;
                h *= 1099511628211ULL;
            }
        }
    return h;
}

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// Model adapters give the phase loop one surface: forward a batch, push the
// prediction gradient back, expose parameter/gradient views for Adam.

struct FullNetModel {
    FullNetModel(DualBranchNet<float>& n, bool freeze) : net(n), head_only(freeze) {}

    DualBranchNet<float>& net;
    bool head_only;
    ForwardCache<float> cache;
    NetGrads<float> grads;

    std::vector<std::span<float>> params() {
        auto v = param_views(net);
        if (head_only) v.erase(v.begin(), v.end() - 2 * static_cast<long>(net.head.size()));
        return v;
    }
    std::vector<float> forward_train(const Batch& b) {
        Mat<float> pred = forward(net, b.features, b.ids, &cache);
        return pred.data;
    }
    std::vector<std::span<const float>> backward_train(const MatF& d_pred) {
        grads = backward(net, cache, d_pred);
        auto v = grad_views(grads);
        if (head_only) v.erase(v.begin(), v.end() - 2 * static_cast<long>(net.head.size()));
        return v;
    }
    std::vector<float> predict(const Dataset& ds, std::size_t batch_size) const {
        return predict_all(net, ds, batch_size);
    }
};

// An embedding-free linear stack (branch pre-training head nets and the
// dense-only ablation).
struct MlpModel {
    explicit MlpModel(std::vector<LinearParams<float>>& l) : layers(l) {}

    std::vector<LinearParams<float>>& layers;
    StackCache<float> cache;
    std::vector<LinearParams<float>> grads;

    std::vector<std::span<float>> params() {
        std::vector<std::span<float>> v;
        for (auto& l : layers) {
            v.emplace_back(l.weight.data.data(), l.weight.data.size());
            v.emplace_back(l.bias.data(), l.bias.size());
        }
        return v;
    }
    std::vector<float> forward_train(const Batch& b) {
        return stack_forward(b.features, layers, true, &cache).data;
    }
    std::vector<std::span<const float>> backward_train(const MatF& d_pred) {
        stack_backward(layers, true, cache, d_pred, grads);
        std::vector<std::span<const float>> v;
        for (auto& l : grads) {
            v.emplace_back(l.weight.data.data(), l.weight.data.size());
            v.emplace_back(l.bias.data(), l.bias.size());
        }
        return v;
    }
    std::vector<float> predict(const Dataset& ds, std::size_t batch_size) const {
        return mlp_predict_all(layers, ds, batch_size);
    }
};

// Embedding feeding a linear stack (id-branch pre-training).
struct IdMlpModel {
    IdMlpModel(EmbeddingTable<float>& e, std::vector<LinearParams<float>>& l) : embedding(e), layers(l) {}

    EmbeddingTable<float>& embedding;
    std::vector<LinearParams<float>>& layers;
    StackCache<float> cache;
    std::vector<std::int32_t> batch_ids;
    std::vector<LinearParams<float>> grads;
    MatF d_table;

    std::vector<std::span<float>> params() {
        std::vector<std::span<float>> v;
        v.emplace_back(embedding.table.data.data(), embedding.table.data.size());
        for (auto& l : layers) {
            v.emplace_back(l.weight.data.data(), l.weight.data.size());
            v.emplace_back(l.bias.data(), l.bias.size());
        }
        return v;
    }
    std::vector<float> forward_train(const Batch& b) {
        batch_ids = b.ids;
        Mat<float> emb = embedding_lookup<float>(batch_ids, embedding);
        return stack_forward(emb, layers, true, &cache).data;
    }
    std::vector<std::span<const float>> backward_train(const MatF& d_pred) {
        Mat<float> d_emb = stack_backward(layers, true, cache, d_pred, grads);
        d_table = embedding_backward<float>(batch_ids, d_emb, embedding.vocab_size());
        std::vector<std::span<const float>> v;
        v.emplace_back(d_table.data.data(), d_table.data.size());
        for (auto& l : grads) {
            v.emplace_back(l.weight.data.data(), l.weight.data.size());
            v.emplace_back(l.bias.data(), l.bias.size());
        }
        return v;
    }
    std::vector<float> predict(const Dataset& ds, std::size_t batch_size) const {
        std::vector<float> out;
        out.reserve(ds.rows());
        for (const auto& b : sequential_batches(ds, batch_size)) {
            Mat<float> emb = embedding_lookup<float>(std::span<const std::int32_t>(b.ids), embedding);
            Mat<float> pred = stack_forward(emb, layers, true);
            out.insert(out.end(), pred.data.begin(), pred.data.end());
        }
        return out;
    }
};

// One training phase: fresh Adam state and warm-up, seeded shuffles from
// `shuffle_rng`, one epoch record per epoch.
template <class Model>
void run_phase(Model& model, const Dataset& train_ds, const Dataset& val_ds, const TrainConfig& cfg,
               std::size_t epochs, const std::string& phase, Rng& shuffle_rng, TrainReport& report) {
    WarmupSchedule sched{cfg.lr_base, cfg.warmup_steps};
    auto params = model.params();
    AdamState<float> state = AdamState<float>::from_shapes(params);
    std::size_t step = 0;
    for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
        auto batches = make_batches(train_ds, cfg.batch_size, shuffle_rng);
        double loss_sum = 0.0;
        double lr = 0.0;
        for (auto& b : batches) {
            std::vector<float> pred = model.forward_train(b);
            MseResult<float> l = mse<float>(pred, b.targets);
            MatF d_pred(pred.size(), 1);
            d_pred.data = std::move(l.d_pred);
            auto grads = model.backward_train(d_pred);
            ++step;
            lr = warmup_lr(step, sched);
            report.lr_trace.push_back(lr);
            report.lr_trace_steps.push_back(step);
            adam_step(params, grads, state, lr);
            loss_sum += static_cast<double>(l.loss);
        }
        double val_p = kNan, val_m = kNan;
        if (val_ds.rows() >= 2) {
            std::vector<float> vp = model.predict(val_ds, cfg.batch_size);
            try {
                val_p = pearson(std::span<const float>(vp), std::span<const float>(val_ds.target));
            } catch (const NumericError&) {
                val_p = kNan; // degenerate epoch; the strict evaluate() still throws
            }
            val_m = mse_metric(std::span<const float>(vp), std::span<const float>(val_ds.target));
        }
        report.epochs.push_back(
            {phase, epoch, loss_sum / static_cast<double>(batches.size()), val_p, val_m, lr});
    }
}

ModelConfig make_config(const TrainConfig& cfg, const Dataset& train_ds) {
    ModelConfig mc;
    mc.feature_count = train_ds.feature_count();
    mc.id_vocab = train_ds.vocab.size();
    mc.embed_dim = cfg.embed_dim;
    return mc.resolved();
}

} // namespace

BranchWeights pretrain_branch(BranchKind kind, const Dataset& ds, const TrainConfig& cfg, Rng& rng,
                              TrainReport* report, const Dataset* val_ds) {
    if (ds.rows() == 0) throw ValueError("pretrain_branch: empty dataset");
    ModelConfig mc = make_config(cfg, ds);
    mc.validate();
    TrainReport scratch;
    TrainReport& rep = report ? *report : scratch;
    Dataset empty_val;
    const Dataset& val = val_ds ? *val_ds : empty_val;
    std::size_t epochs = cfg.effective_pretrain_epochs();

    auto fit_pearson = [&](auto& model) {
        if (epochs == 0 || ds.rows() < 2) return kNan;
        std::vector<float> pred = model.predict(ds, cfg.batch_size);
        try {
            return pearson(std::span<const float>(pred), std::span<const float>(ds.target));
        } catch (const NumericError&) {
            return kNan;
        }
    };

    BranchWeights out;
    if (kind == BranchKind::dense) {
        std::vector<LinearParams<float>> with_head =
            build_stack<float>(mc.feature_count, mc.branch_a_widths, rng);
        with_head.push_back(init_linear<float>(mc.branch_a_widths.back(), 1, rng));
        MlpModel model(with_head);
        run_phase(model, ds, val, cfg, epochs, "pretrain_dense", rng, rep);
        out.train_pearson = fit_pearson(model);
        with_head.pop_back(); // temporary head discarded
        out.layers = std::move(with_head);
    } else {
        EmbeddingTable<float> emb;
        emb.table = seeded_uniform<float>(rng, -0.05, 0.05, mc.id_vocab, mc.embed_dim);
        std::vector<LinearParams<float>> with_head = build_stack<float>(mc.embed_dim, mc.branch_b_widths, rng);
        with_head.push_back(init_linear<float>(mc.branch_b_widths.back(), 1, rng));
        IdMlpModel model(emb, with_head);
        run_phase(model, ds, val, cfg, epochs, "pretrain_id", rng, rep);
        out.train_pearson = fit_pearson(model);
        with_head.pop_back();
        out.layers = std::move(with_head);
        out.embedding = std::move(emb.table);
    }
    return out;
}

TrainResult train(const TrainConfig& cfg, const Dataset& ds) {
    cfg.validate();
    if (ds.rows() == 0) throw ValueError("train: empty dataset");
    set_kernel_threads(cfg.threads);
    auto t0 = std::chrono::steady_clock::now();

    auto [train_ds, val_ds] = time_split(ds, cfg.val_fraction);
    if (train_ds.rows() < 1) throw ValueError("train: no training rows after the validation split");

    ModelConfig mc = make_config(cfg, train_ds);
    Rng root(cfg.seed);
    Rng init_rng = root.derive(1);
    Rng dense_rng = root.derive(2);
    Rng id_rng = root.derive(3);
    Rng joint_rng = root.derive(4);

    TrainResult result;
    result.net = build<float>(mc, init_rng);
    result.vocab_raw_ids = train_ds.vocab.raw_ids;
    result.feature_names = train_ds.feature_names;

    std::size_t joint = cfg.effective_joint_epochs();
    bool pre_dense = cfg.pretrain_mode == PretrainMode::dense || cfg.pretrain_mode == PretrainMode::both;
    bool pre_id = cfg.pretrain_mode == PretrainMode::id || cfg.pretrain_mode == PretrainMode::both;
    if (cfg.total_epochs == 0) pre_dense = pre_id = false;

    // Phase 1: branch pre-training with temporary heads. Dense first, then
    // id, each from its own stream so the phases cannot perturb each other.
    if (pre_dense) {
        BranchWeights bw =
            pretrain_branch(BranchKind::dense, train_ds, cfg, dense_rng, &result.report, &val_ds);
        result.net.branch_a = std::move(bw.layers);
    }
    if (pre_id) {
        BranchWeights bw = pretrain_branch(BranchKind::id, train_ds, cfg, id_rng, &result.report, &val_ds);
        result.net.branch_b = std::move(bw.layers);
        result.net.embedding.table = std::move(bw.embedding);
    }

    // Phase 2: joint fine-tuning of the assembled net; the head keeps its
    // fresh initialization from build(). Warm-up restarts here.
    FullNetModel model(result.net, cfg.freeze_pretrained && (pre_dense || pre_id));
    run_phase(model, train_ds, val_ds, cfg, joint, "joint", joint_rng, result.report);

    result.report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.report.param_checksum = fnv1a_checksum(result.net);
    return result;
}

std::vector<float> predict_all(const DualBranchNet<float>& net, const Dataset& ds, std::size_t batch_size) {
    std::vector<float> out;
    out.reserve(ds.rows());
    for (const auto& b : sequential_batches(ds, batch_size)) {
        Mat<float> pred = forward(net, b.features, b.ids);
        out.insert(out.end(), pred.data.begin(), pred.data.end());
    }
    return out;
}

MetricReport evaluate(const DualBranchNet<float>& net, const Dataset& ds, std::size_t batch_size) {
    if (ds.rows() < 2) throw ValueError("evaluate: need at least 2 rows");
    std::vector<float> pred = predict_all(net, ds, batch_size);
    MetricReport r;
    r.n = ds.rows();
    try {
        r.pearson = pearson(std::span<const float>(pred), std::span<const float>(ds.target));
    } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " (model predictions collapsed to a constant)");
    }
    r.mse = mse_metric(std::span<const float>(pred), std::span<const float>(ds.target));
    return r;
}

double evaluate_per_time(const DualBranchNet<float>& net, const Dataset& ds, std::size_t batch_size) {
    if (ds.rows() < 2) throw ValueError("evaluate_per_time: need at least 2 rows");
    std::vector<float> pred = predict_all(net, ds, batch_size);
    return grouped_pearson_mean(ds.time_id, pred, ds.target);
}

MlpTrainResult train_dense_only(const TrainConfig& cfg, const Dataset& ds) {
    cfg.validate();
    if (ds.rows() == 0) throw ValueError("train_dense_only: empty dataset");
    set_kernel_threads(cfg.threads);
    auto [train_ds, val_ds] = time_split(ds, cfg.val_fraction);
    if (train_ds.rows() < 1) throw ValueError("train_dense_only: no training rows after the validation split");

    ModelConfig mc = make_config(cfg, train_ds);
    std::vector<std::size_t> widths;
    widths.insert(widths.end(), mc.branch_a_widths.begin(), mc.branch_a_widths.end());
    widths.insert(widths.end(), mc.head_widths.begin(), mc.head_widths.end());

    Rng root(cfg.seed);
    Rng init_rng = root.derive(1);
    Rng joint_rng = root.derive(4);

    MlpTrainResult result;
    result.layers = build_stack<float>(mc.feature_count, widths, init_rng);
    MlpModel model(result.layers);
    std::size_t epochs = cfg.total_epochs == 0 ? 0 : cfg.effective_joint_epochs();
    run_phase(model, train_ds, val_ds, cfg, epochs, "joint", joint_rng, result.report);
    return result;
}

std::vector<float> mlp_predict_all(const std::vector<LinearParams<float>>& layers, const Dataset& ds,
                                   std::size_t batch_size) {
    std::vector<float> out;
    out.reserve(ds.rows());
    for (const auto& b : sequential_batches(ds, batch_size)) {
        Mat<float> pred = stack_forward(b.features, layers, true);
        out.insert(out.end(), pred.data.begin(), pred.data.end());
    }
    return out;
}

void write_report_csv(const TrainReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "phase,epoch,train_loss,val_pearson,val_mse,lr\n";
    char buf[160];
    for (const auto& e : report.epochs) {
        std::snprintf(buf, sizeof(buf), "%s,%zu,%.17g,%.17g,%.17g,%.17g\n", e.phase.c_str(), e.epoch,
                      e.train_loss, e.val_pearson, e.val_mse, e.lr);
        out << buf;
    }
    if (!out) throw IoError("write failed: " + path);
}

} // namespace edbn
