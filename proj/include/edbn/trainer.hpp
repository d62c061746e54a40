#pragma once

#include "edbn/data.hpp"
#include "edbn/layers.hpp"
#include "edbn/metrics.hpp"
#include "edbn/model.hpp"
#include "edbn/optim.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace edbn {

enum class PretrainMode { none, dense, id, both };

PretrainMode pretrain_mode_from_string(const std::string& s);
std::string to_string(PretrainMode m);

// Every knob of the training recipe. Defaults: Adam at 0.001, batch 1024,
// 100 epochs, 1000 warm-up steps, both branches pre-trained for 20 epochs
// each before joint fine-tuning on the remainder.
struct TrainConfig {
    double lr_base = 0.001;
    std::size_t batch_size = 1024;
    std::size_t total_epochs = 100;
    std::size_t warmup_steps = 1000;
    PretrainMode pretrain_mode = PretrainMode::both;
    std::size_t pretrain_epochs = 20; // per pre-trained branch
    long long joint_epochs = -1;      // -1 derives total - pretrain
    double val_fraction = 0.2;
    std::uint64_t seed = 0;
    std::size_t embed_dim = 0; // 0 = default width rule
    bool freeze_pretrained = false;
    int threads = 1;

    std::size_t pretrained_branches() const {
        switch (pretrain_mode) {
            case PretrainMode::none: return 0;
            case PretrainMode::both: return 2;
            default: return 1;
        }
    }
    // total_epochs == 0 collapses every phase to zero epochs.
    std::size_t effective_pretrain_epochs() const {
        return total_epochs == 0 ? 0 : pretrain_epochs;
    }
    std::size_t effective_joint_epochs() const;
    void validate() const;
};

struct EpochRecord {
    std::string phase; // pretrain_dense | pretrain_id | joint
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_pearson = 0.0; // NaN when no validation rows or undefined
    double val_mse = 0.0;
    double lr = 0.0; // at epoch end
};

struct TrainReport {
    std::vector<EpochRecord> epochs;
    std::vector<double> lr_trace;          // one entry per optimizer step
    std::vector<std::size_t> lr_trace_steps; // step index within its phase, from 1
    double wall_seconds = 0.0;
    std::uint64_t param_checksum = 0;
};

// CSV log: phase,epoch,train_loss,val_pearson,val_mse,lr
void write_report_csv(const TrainReport& report, const std::string& path);

std::uint64_t fnv1a_checksum(const DualBranchNet<float>& net);

struct TrainResult {
    DualBranchNet<float> net;
    TrainReport report;
    std::vector<std::int64_t> vocab_raw_ids; // training vocabulary, dense order
    std::vector<std::string> feature_names;
};

// Staged protocol: per-branch pre-training with temporary heads, then the
// full net is assembled from the pre-trained branch weights (head freshly
// initialized) and fine-tuned jointly. Warm-up and optimizer state restart
// at each phase boundary.
TrainResult train(const TrainConfig& cfg, const Dataset& ds);

// Weights of one pre-trained branch; the temporary head is discarded.
// train_pearson reports the temporary net's fit on its training rows after
// the last epoch (NaN when nothing was trained or the fit is degenerate).
struct BranchWeights {
    std::vector<LinearParams<float>> layers;
    MatF embedding; // id branch only, empty for the dense branch
    double train_pearson = 0.0;
};

enum class BranchKind { dense, id };

BranchWeights pretrain_branch(BranchKind kind, const Dataset& ds, const TrainConfig& cfg, Rng& rng,
                              TrainReport* report = nullptr, const Dataset* val_ds = nullptr);

// Batched forward over all rows in file order.
std::vector<float> predict_all(const DualBranchNet<float>& net, const Dataset& ds,
                               std::size_t batch_size = 1024);

MetricReport evaluate(const DualBranchNet<float>& net, const Dataset& ds, std::size_t batch_size = 1024);

// Mean per-time_id pearson, the optional evaluation granularity.
double evaluate_per_time(const DualBranchNet<float>& net, const Dataset& ds, std::size_t batch_size = 1024);

// The embedding branch removed: same dense stack and head trained joint-only
// with the same seed streams, for ablation comparisons.
struct MlpTrainResult {
    std::vector<LinearParams<float>> layers;
    TrainReport report;
};

MlpTrainResult train_dense_only(const TrainConfig& cfg, const Dataset& ds);

std::vector<float> mlp_predict_all(const std::vector<LinearParams<float>>& layers, const Dataset& ds,
                                   std::size_t batch_size = 1024);

} // namespace edbn
