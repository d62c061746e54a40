#pragma once

#include "edbn/error.hpp"
#include "edbn/layers.hpp"
#include "edbn/matrix.hpp"
#include "edbn/rng.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace edbn {

// Embedding width rule: narrow enough to keep the one-hot compression
// ratio (V-1)/d at or above 20 once the vocabulary has >= 160 real ids,
// clamped to [4, 64] so tiny vocabularies still get a usable width.
inline std::size_t default_embed_dim(std::size_t id_vocab) {
    std::size_t real_ids = id_vocab > 0 ? id_vocab - 1 : 0;
    std::size_t d = real_ids / 20;
    if (d < 4) d = 4;
    if (d > 64) d = 64;
    return d;
}

struct ModelConfig {
    std::size_t feature_count = 0; // F, dense feature columns
    std::size_t id_vocab = 2;      // V, embedding rows including OOV row 0
    std::size_t embed_dim = 0;     // 0 selects default_embed_dim(id_vocab)
    std::array<std::size_t, 3> branch_a_widths{256, 256, 256};
    std::array<std::size_t, 3> branch_b_widths{64, 64, 64};
    std::array<std::size_t, 4> head_widths{512, 128, 32, 1};

    ModelConfig resolved() const {
        ModelConfig c = *this;
        if (c.embed_dim == 0) c.embed_dim = default_embed_dim(c.id_vocab);
        return c;
    }

    double compression_ratio() const {
        return embed_dim ? static_cast<double>(id_vocab - 1) / static_cast<double>(embed_dim) : 0.0;
    }

    // Ratio below 20 is only worth flagging once the vocabulary is big
    // enough that the rule promises it.
    bool compression_ratio_low() const {
        return id_vocab >= 161 && compression_ratio() < 20.0;
    }

    void validate() const {
        if (feature_count < 1) throw ConfigError("config: feature_count must be >= 1");
        if (id_vocab < 2) throw ConfigError("config: id_vocab must be >= 2 (row 0 is reserved)");
        if (embed_dim < 1) throw ConfigError("config: embed_dim must be >= 1");
        for (auto w : branch_a_widths)
            if (w < 1) throw ConfigError("config: branch_a width must be >= 1");
        for (auto w : branch_b_widths)
            if (w < 1) throw ConfigError("config: branch_b width must be >= 1");
        for (auto w : head_widths)
            if (w < 1) throw ConfigError("config: head width must be >= 1");
        if (head_widths.back() != 1) throw ConfigError("config: final head width must be 1");
    }
};

// ---------------------------------------------------------------------------
// Linear stacks: shared machinery for the two branches, the head, and the
// temporary pre-training / ablation networks. Hidden layers are gated by
// swish; `linear_last` leaves the final layer unactivated.

template <class T>
struct StackCache {
    Mat<T> input;
    std::vector<Mat<T>> pre;  // z_i = a_{i-1} W_i + b_i
    std::vector<Mat<T>> post; // swish(z_i); absent for a linear last layer
};

// Fan-based uniform init, bound sqrt(6/(fan_in+fan_out)); biases zero.
template <class T>
LinearParams<T> init_linear(std::size_t in, std::size_t out, Rng& rng) {
    double s = std::sqrt(6.0 / static_cast<double>(in + out));
    LinearParams<T> p;
    p.weight = seeded_uniform<T>(rng, -s, s, in, out);
    p.bias.assign(out, T(0));
    return p;
}

template <class T>
std::vector<LinearParams<T>> build_stack(std::size_t in, std::span<const std::size_t> widths, Rng& rng) {
    std::vector<LinearParams<T>> layers;
    layers.reserve(widths.size());
    std::size_t prev = in;
    for (std::size_t w : widths) {
        layers.push_back(init_linear<T>(prev, w, rng));
        prev = w;
    }
    return layers;
}

template <class T>
Mat<T> stack_forward(const Mat<T>& x, const std::vector<LinearParams<T>>& layers, bool linear_last,
                     StackCache<T>* cache = nullptr) {
    if (cache) {
        cache->input = x;
        cache->pre.clear();
        cache->post.clear();
    }
    Mat<T> cur = x;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        Mat<T> z = linear_forward(cur, layers[l]);
        bool activate = !(linear_last && l + 1 == layers.size());
        if (cache) cache->pre.push_back(z);
        if (activate) {
            cur = swish(z);
            if (cache) cache->post.push_back(cur);
        } else {
            cur = std::move(z);
        }
    }
    return cur;
}

// Reverse pass through a stack; fills `grads` (same shapes as the layers)
// and returns the gradient w.r.t. the stack input.
template <class T>
Mat<T> stack_backward(const std::vector<LinearParams<T>>& layers, bool linear_last,
                      const StackCache<T>& cache, const Mat<T>& d_out,
                      std::vector<LinearParams<T>>& grads) {
    if (cache.pre.size() != layers.size())
        throw ValueError("stack_backward: cache does not match this stack");
    grads.resize(layers.size());
    Mat<T> d = d_out;
    for (std::size_t l = layers.size(); l-- > 0;) {
        bool activated = !(linear_last && l + 1 == layers.size());
        if (activated) {
            Mat<T> sg = swish_grad(cache.pre[l]);
            if (!sg.same_shape(d))
                throw ValueError("stack_backward: upstream gradient shape " + d.shape_str() +
                                 " does not match cache " + sg.shape_str());
            for (std::size_t i = 0; i < d.data.size(); ++i) d.data[i] *= sg.data[i];
        }
        const Mat<T>& layer_in = (l == 0) ? cache.input : cache.post[l - 1];
        LinearGrads<T> lg = linear_backward(layer_in, layers[l], d);
        grads[l].weight = std::move(lg.d_weight);
        grads[l].bias = std::move(lg.d_bias);
        d = std::move(lg.d_x);
    }
    return d;
}

// ---------------------------------------------------------------------------
// The dual-branch network: dense features through a 256-wide stack, the id
// embedding through a 64-wide stack, concatenated into a 512-128-32-1 head.

template <class T>
struct DualBranchNet {
    ModelConfig config; // resolved: embed_dim filled in
    EmbeddingTable<T> embedding;
    std::vector<LinearParams<T>> branch_a;
    std::vector<LinearParams<T>> branch_b;
    std::vector<LinearParams<T>> head;
};

template <class T>
struct ForwardCache {
    std::vector<std::int32_t> ids;
    Mat<T> embedded; // B x d, input to branch B
    StackCache<T> branch_a;
    StackCache<T> branch_b;
    StackCache<T> head;
    std::size_t batch = 0;
};

// One gradient tensor per parameter tensor; LinearParams doubles as the
// carrier since the shapes are identical.
template <class T>
struct NetGrads {
    Mat<T> embedding;
    std::vector<LinearParams<T>> branch_a;
    std::vector<LinearParams<T>> branch_b;
    std::vector<LinearParams<T>> head;
};

template <class T>
DualBranchNet<T> build(const ModelConfig& config, Rng& rng) {
    ModelConfig c = config.resolved();
    c.validate();
    DualBranchNet<T> net;
    net.config = c;
    // Draw order is fixed and matches the serialization order: embedding,
    // branch A, branch B, head.
    net.embedding.table = seeded_uniform<T>(rng, -0.05, 0.05, c.id_vocab, c.embed_dim);
    net.branch_a = build_stack<T>(c.feature_count, c.branch_a_widths, rng);
    net.branch_b = build_stack<T>(c.embed_dim, c.branch_b_widths, rng);
    std::size_t head_in = c.branch_a_widths.back() + c.branch_b_widths.back();
    net.head = build_stack<T>(head_in, c.head_widths, rng);
    return net;
}

template <class T>
Mat<T> forward(const DualBranchNet<T>& net, const Mat<T>& features, std::span<const std::int32_t> ids,
               ForwardCache<T>* cache = nullptr) {
    if (features.cols != net.config.feature_count)
        throw ShapeError("forward: features " + features.shape_str() + " but model expects " +
                         std::to_string(net.config.feature_count) + " columns");
    if (features.rows != ids.size())
        throw ShapeError("forward: " + std::to_string(features.rows) + " feature rows vs " +
                         std::to_string(ids.size()) + " ids");
    Mat<T> emb = embedding_lookup(ids, net.embedding);
    if (cache) {
        cache->ids.assign(ids.begin(), ids.end());
        cache->embedded = emb;
        cache->batch = features.rows;
    }
    Mat<T> a = stack_forward(features, net.branch_a, false, cache ? &cache->branch_a : nullptr);
    Mat<T> b = stack_forward(emb, net.branch_b, false, cache ? &cache->branch_b : nullptr);
    Mat<T> joined = concat_cols(a, b);
    return stack_forward(joined, net.head, true, cache ? &cache->head : nullptr);
}

template <class T>
NetGrads<T> backward(const DualBranchNet<T>& net, const ForwardCache<T>& cache, const Mat<T>& d_pred) {
    if (cache.batch == 0 || cache.ids.size() != cache.batch)
        throw ValueError("backward: cache was not produced by a forward pass");
    if (d_pred.rows != cache.batch || d_pred.cols != 1)
        throw ValueError("backward: d_pred " + d_pred.shape_str() + " does not match cached batch of " +
                         std::to_string(cache.batch));
    NetGrads<T> g;
    Mat<T> d_joined = stack_backward(net.head, true, cache.head, d_pred, g.head);
    auto [d_a, d_b] = split_cols(d_joined, net.config.branch_a_widths.back());
    stack_backward(net.branch_a, false, cache.branch_a, d_a, g.branch_a); // d_features unused
    Mat<T> d_emb = stack_backward(net.branch_b, false, cache.branch_b, d_b, g.branch_b);
    g.embedding = embedding_backward<T>(cache.ids, d_emb, net.config.id_vocab);
    return g;
}

// ---------------------------------------------------------------------------
// Parameter accounting and flat tensor access.

struct LayerCount {
    std::string name;
    std::size_t in = 0;
    std::size_t out = 0;
    std::size_t count = 0; // weights + biases (embedding: rows*cols)
};

inline std::vector<LayerCount> param_count_breakdown(const ModelConfig& config) {
    ModelConfig c = config.resolved();
    c.validate();
    std::vector<LayerCount> out;
    out.push_back({"embedding", c.id_vocab, c.embed_dim, c.id_vocab * c.embed_dim});
    auto add_stack = [&out](const std::string& prefix, std::size_t in, std::span<const std::size_t> widths) {
        std::size_t prev = in;
        for (std::size_t l = 0; l < widths.size(); ++l) {
            out.push_back({prefix + "." + std::to_string(l), prev, widths[l], prev * widths[l] + widths[l]});
            prev = widths[l];
        }
    };
    add_stack("branch_a", c.feature_count, c.branch_a_widths);
    add_stack("branch_b", c.embed_dim, c.branch_b_widths);
    add_stack("head", c.branch_a_widths.back() + c.branch_b_widths.back(), c.head_widths);
    return out;
}

inline std::size_t param_count(const ModelConfig& config) {
    std::size_t total = 0;
    for (const auto& l : param_count_breakdown(config)) total += l.count;
    return total;
}

// Flat views over every parameter tensor, in serialization order.
template <class T, class Net>
std::vector<std::span<T>> tensor_views(Net& net) {
    std::vector<std::span<T>> v;
    auto push_mat = [&v](auto& m) { v.push_back(std::span<T>(m.data.data(), m.data.size())); };
    auto push_vec = [&v](auto& b) { v.push_back(std::span<T>(b.data(), b.size())); };
    if constexpr (requires { net.embedding.table; })
        push_mat(net.embedding.table);
    else
        push_mat(net.embedding);
    for (auto* stack : {&net.branch_a, &net.branch_b, &net.head})
        for (auto& layer : *stack) {
            push_mat(layer.weight);
            push_vec(layer.bias);
        }
    return v;
}

template <class T>
std::vector<std::span<T>> param_views(DualBranchNet<T>& net) {
    return tensor_views<T>(net);
}

template <class T>
std::vector<std::span<const T>> grad_views(const NetGrads<T>& grads) {
    return tensor_views<const T>(grads);
}

template <class To, class From>
DualBranchNet<To> cast_net(const DualBranchNet<From>& src) {
    DualBranchNet<To> out;
    out.config = src.config;
    out.embedding.table = cast_mat<To>(src.embedding.table);
    auto conv = [](const std::vector<LinearParams<From>>& in) {
        std::vector<LinearParams<To>> r(in.size());
        for (std::size_t i = 0; i < in.size(); ++i) {
            r[i].weight = cast_mat<To>(in[i].weight);
            r[i].bias.assign(in[i].bias.begin(), in[i].bias.end());
        }
        return r;
    };
    out.branch_a = conv(src.branch_a);
    out.branch_b = conv(src.branch_b);
    out.head = conv(src.head);
    return out;
}

// ---------------------------------------------------------------------------
// Versioned binary model file. Layout:
//   "EDBN" | u16 version (LE) | u32 header bytes (LE) | header text |
//   f32 LE payload: embedding row-major, then branch A / branch B / head
//   layers, weight before bias.
// The header is UTF-8 key=value lines: the resolved ModelConfig plus the
// id vocabulary (dense order) and feature names, which predict/eval need
// to map raw inputs onto the trained tensors.

inline constexpr std::uint16_t kModelFormatVersion = 1;

struct SavedModel {
    DualBranchNet<float> net;
    std::vector<std::int64_t> vocab_raw_ids;      // dense index i+1 -> raw id
    std::vector<std::string> feature_names;
};

void save_model(const DualBranchNet<float>& net, const std::vector<std::int64_t>& vocab_raw_ids,
                const std::vector<std::string>& feature_names, const std::string& path);

SavedModel load_model(const std::string& path);

} // namespace edbn
