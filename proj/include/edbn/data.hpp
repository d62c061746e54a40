#pragma once

#include "edbn/matrix.hpp"
#include "edbn/rng.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace edbn {

// Raw investment id -> dense embedding index. Index 0 is the reserved
// out-of-vocabulary row; real ids occupy 1..V-1 in first-appearance order.
struct IdVocab {
    std::unordered_map<std::int64_t, std::int32_t> to_dense;
    std::vector<std::int64_t> raw_ids; // dense index i+1 -> raw_ids[i]

    std::size_t size() const { return raw_ids.size() + 1; } // V, incl. OOV

    std::int32_t add(std::int64_t raw) {
        auto it = to_dense.find(raw);
        if (it != to_dense.end()) return it->second;
        std::int32_t idx = static_cast<std::int32_t>(raw_ids.size() + 1);
        raw_ids.push_back(raw);
        to_dense.emplace(raw, idx);
        return idx;
    }

    // Unseen ids map to 0, never an error.
    std::int32_t lookup(std::int64_t raw) const {
        auto it = to_dense.find(raw);
        return it == to_dense.end() ? 0 : it->second;
    }

    static IdVocab from_raw_ids(const std::vector<std::int64_t>& raw);
};

// Columnar tabular store in the market-prediction schema.
struct Dataset {
    std::vector<std::string> row_id;
    std::vector<std::int64_t> time_id;
    std::vector<std::int64_t> investment_id; // raw ids
    std::vector<float> target;
    MatF features; // N x F
    std::vector<std::string> feature_names;
    IdVocab vocab;

    std::size_t rows() const { return time_id.size(); }
    std::size_t feature_count() const { return features.cols; }

    void rebuild_vocab();
};

struct Batch {
    MatF features;
    std::vector<std::int32_t> ids; // dense indices
    std::vector<float> targets;

    std::size_t size() const { return targets.size(); }
};

struct CsvOptions {
    std::optional<std::size_t> expected_feature_count;
    std::vector<std::string> include_features; // empty = all f_* columns
    bool impute_zero = false;                  // zero-fill unparseable feature cells
};

// Parses header row_id,time_id,investment_id,target,f_0,...,f_{F-1} and
// builds the vocabulary from the observed ids. Missing or unparseable
// cells are hard errors naming the row and column unless impute_zero is
// set (feature cells only).
Dataset load_csv(const std::string& path, const CsvOptions& opts = {});

// Full-precision writer; load_csv(write_csv(ds)) reproduces every value.
void write_csv(const Dataset& ds, const std::string& path);

// Leakage-safe split: the ceil(val_fraction * T) largest distinct time_ids
// become validation. The training vocabulary is rebuilt from training rows
// only and shared with the validation set, so unseen validation ids hit
// the OOV row.
std::pair<Dataset, Dataset> time_split(const Dataset& ds, double val_fraction);

// Seeded permutation of all rows, chunked; the last batch may be short.
std::vector<Batch> make_batches(const Dataset& ds, std::size_t batch_size, Rng& rng);

// File-order batches for evaluation and prediction.
std::vector<Batch> sequential_batches(const Dataset& ds, std::size_t batch_size);

// Synthetic generator: standard-normal features, a per-id effect so the
// embedding branch has learnable signal, a tanh interaction, and additive
// noise:
//   target = w.f + alpha_id + nonlinearity_scale*tanh(f0*f1) + noise
struct SynthSpec {
    std::size_t rows = 1000;
    std::size_t distinct_ids = 10;
    std::size_t feature_count = 8;
    std::size_t time_blocks = 20; // contiguous time_id blocks
    double weight_scale = 1.0;    // w_j ~ Normal(0, weight_scale^2)
    double id_sigma = 0.0;        // alpha_k ~ Normal(0, id_sigma^2)
    double nonlinearity_scale = 0.0;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SynthData {
    Dataset dataset;
    std::vector<double> weights;    // the generating w, for oracle checks
    std::vector<double> id_effects; // alpha per raw id 0..K-1
    std::vector<double> linear_part; // w.f per row
};

SynthData generate_synthetic(const SynthSpec& spec);

} // namespace edbn
