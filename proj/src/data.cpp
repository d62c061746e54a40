#include "edbn/data.hpp"

#include "edbn/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace edbn {
namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

bool parse_i64(const std::string& s, std::int64_t& out) {
    const char* b = s.data();
    const char* e = b + s.size();
    auto [p, ec] = std::from_chars(b, e, out);
    return ec == std::errc() && p == e && !s.empty();
}

bool parse_f32(const std::string& s, float& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) return false;
    if (!std::isfinite(v)) return false;
    out = static_cast<float>(v);
    return true;
}

std::string cell_error(std::size_t line_no, const std::string& column, const std::string& value) {
    return "line " + std::to_string(line_no) + ", column " + column + ": unparseable cell '" + value + "'";
}

void append_float(std::string& out, float v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
    out += buf;
}

} // namespace

IdVocab IdVocab::from_raw_ids(const std::vector<std::int64_t>& raw) {
    IdVocab v;
    for (std::int64_t id : raw) v.add(id);
    if (v.raw_ids.size() != raw.size()) throw ValueError("vocabulary has duplicate raw ids");
    return v;
}

void Dataset::rebuild_vocab() {
    vocab = IdVocab{};
    for (std::int64_t id : investment_id) vocab.add(id);
}

Dataset load_csv(const std::string& path, const CsvOptions& opts) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);

    std::string line;
    if (!std::getline(in, line)) throw SchemaError(path + ": empty file, header row required");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = split_line(line);

    static const char* kFixed[4] = {"row_id", "time_id", "investment_id", "target"};
    if (header.size() < 4)
        throw SchemaError(path + ": header has " + std::to_string(header.size()) + " columns, need at least 4");
    for (std::size_t i = 0; i < 4; ++i)
        if (header[i] != kFixed[i])
            throw SchemaError(path + ": expected column '" + kFixed[i] + "' at position " + std::to_string(i) +
                              ", found '" + header[i] + "'");

    std::vector<std::string> file_features(header.begin() + 4, header.end());

    // Column indices (into the full row) of the features we keep, and their names.
    std::vector<std::size_t> keep;
    std::vector<std::string> names;
    if (!opts.include_features.empty()) {
        // Selection order follows the include list so a restricted model sees
        // columns in its training order regardless of file layout.
        for (const auto& want : opts.include_features) {
            auto it = std::find(file_features.begin(), file_features.end(), want);
            if (it == file_features.end())
                throw SchemaError(path + ": missing feature column " + want);
            keep.push_back(4 + static_cast<std::size_t>(it - file_features.begin()));
            names.push_back(want);
        }
    } else {
        for (std::size_t i = 0; i < file_features.size(); ++i) {
            keep.push_back(4 + i);
            names.push_back(file_features[i]);
        }
        if (opts.expected_feature_count) {
            std::size_t want = *opts.expected_feature_count;
            for (std::size_t i = 0; i < want; ++i) {
                std::string expect = "f_" + std::to_string(i);
                if (i >= names.size() || names[i] != expect)
                    throw SchemaError(path + ": missing feature column " + expect);
            }
            if (names.size() > want)
                throw SchemaError(path + ": unexpected feature column " + names[want]);
        }
    }
    if (opts.expected_feature_count && keep.size() != *opts.expected_feature_count)
        throw SchemaError(path + ": found " + std::to_string(keep.size()) + " feature columns, expected " +
                          std::to_string(*opts.expected_feature_count));

    Dataset ds;
    ds.feature_names = names;
    std::vector<float> feat_data;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_line(line);
        if (cells.size() != header.size())
            throw SchemaError(path + ": line " + std::to_string(line_no) + " has " +
                              std::to_string(cells.size()) + " cells, header has " +
                              std::to_string(header.size()));
        std::int64_t tid = 0, iid = 0;
        float tgt = 0.0f;
        if (!parse_i64(cells[1], tid)) throw SchemaError(path + ": " + cell_error(line_no, "time_id", cells[1]));
        if (!parse_i64(cells[2], iid))
            throw SchemaError(path + ": " + cell_error(line_no, "investment_id", cells[2]));
        if (!parse_f32(cells[3], tgt)) throw SchemaError(path + ": " + cell_error(line_no, "target", cells[3]));
        ds.row_id.push_back(cells[0]);
        ds.time_id.push_back(tid);
        ds.investment_id.push_back(iid);
        ds.target.push_back(tgt);
        for (std::size_t k = 0; k < keep.size(); ++k) {
            float v = 0.0f;
            if (!parse_f32(cells[keep[k]], v)) {
                if (!opts.impute_zero) throw SchemaError(path + ": " + cell_error(line_no, names[k], cells[keep[k]]));
                v = 0.0f;
            }
            feat_data.push_back(v);
        }
    }

    ds.features.rows = ds.row_id.size();
    ds.features.cols = keep.size();
    ds.features.data = std::move(feat_data);
    ds.rebuild_vocab();
    return ds;
}

void write_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    std::string buf = "row_id,time_id,investment_id,target";
    for (const auto& n : ds.feature_names) {
        buf += ',';
        buf += n;
    }
    buf += '\n';
    out << buf;
    for (std::size_t i = 0; i < ds.rows(); ++i) {
        buf.clear();
        buf += ds.row_id[i];
        buf += ',';
        buf += std::to_string(ds.time_id[i]);
        buf += ',';
        buf += std::to_string(ds.investment_id[i]);
        buf += ',';
        append_float(buf, ds.target[i]);
        for (std::size_t j = 0; j < ds.features.cols; ++j) {
            buf += ',';
            append_float(buf, ds.features(i, j));
        }
        buf += '\n';
        out << buf;
    }
    if (!out) throw IoError("write failed: " + path);
}

namespace {

Dataset take_rows(const Dataset& ds, const std::vector<std::size_t>& idx) {
    Dataset out;
    out.feature_names = ds.feature_names;
    out.features = MatF(idx.size(), ds.features.cols);
    out.row_id.reserve(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
        std::size_t i = idx[k];
        out.row_id.push_back(ds.row_id[i]);
        out.time_id.push_back(ds.time_id[i]);
        out.investment_id.push_back(ds.investment_id[i]);
        out.target.push_back(ds.target[i]);
        for (std::size_t j = 0; j < ds.features.cols; ++j) out.features(k, j) = ds.features(i, j);
    }
    return out;
}

} // namespace

std::pair<Dataset, Dataset> time_split(const Dataset& ds, double val_fraction) {
    if (!(val_fraction >= 0.0 && val_fraction < 1.0))
        throw ValueError("time_split: val_fraction must be in [0, 1)");
    std::set<std::int64_t> distinct(ds.time_id.begin(), ds.time_id.end());
    if (val_fraction > 0.0 && distinct.size() < 2)
        throw ValueError("time_split: need at least 2 distinct time_ids to hold out validation data");

    std::size_t n_val_times =
        static_cast<std::size_t>(std::ceil(val_fraction * static_cast<double>(distinct.size())));
    std::int64_t boundary = 0; // first validation time
    bool has_val = n_val_times > 0;
    if (has_val) {
        auto it = distinct.end();
        std::advance(it, -static_cast<long>(n_val_times));
        boundary = *it;
    }

    std::vector<std::size_t> train_idx, val_idx;
    for (std::size_t i = 0; i < ds.rows(); ++i) {
        if (has_val && ds.time_id[i] >= boundary)
            val_idx.push_back(i);
        else
            train_idx.push_back(i);
    }
    Dataset train = take_rows(ds, train_idx);
    Dataset val = take_rows(ds, val_idx);
    train.rebuild_vocab();
    val.vocab = train.vocab; // unseen validation ids resolve to OOV
    return {std::move(train), std::move(val)};
}

namespace {

Batch gather(const Dataset& ds, const std::size_t* idx, std::size_t n) {
    Batch b;
    b.features = MatF(n, ds.features.cols);
    b.ids.resize(n);
    b.targets.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t i = idx[k];
        b.ids[k] = ds.vocab.lookup(ds.investment_id[i]);
        b.targets[k] = ds.target[i];
        for (std::size_t j = 0; j < ds.features.cols; ++j) b.features(k, j) = ds.features(i, j);
    }
    return b;
}

std::vector<Batch> chunk(const Dataset& ds, const std::vector<std::size_t>& order, std::size_t batch_size) {
    std::vector<Batch> out;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        std::size_t n = std::min(batch_size, order.size() - start);
        out.push_back(gather(ds, order.data() + start, n));
    }
    return out;
}

} // namespace

std::vector<Batch> make_batches(const Dataset& ds, std::size_t batch_size, Rng& rng) {
    if (batch_size < 1) throw ValueError("make_batches: batch_size must be >= 1");
    if (ds.rows() == 0) throw ValueError("make_batches: empty dataset");
    std::vector<std::size_t> order(ds.rows());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    return chunk(ds, order, batch_size);
}

std::vector<Batch> sequential_batches(const Dataset& ds, std::size_t batch_size) {
    if (batch_size < 1) throw ValueError("sequential_batches: batch_size must be >= 1");
    if (ds.rows() == 0) throw ValueError("sequential_batches: empty dataset");
    std::vector<std::size_t> order(ds.rows());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    return chunk(ds, order, batch_size);
}

void SynthSpec::validate() const {
    if (rows < 1 || distinct_ids < 1 || feature_count < 1 || time_blocks < 1)
        throw ValueError("synth: rows, distinct_ids, feature_count and time_blocks must be >= 1");
    if (rows < distinct_ids) throw ValueError("synth: rows must be >= distinct_ids so every id appears");
    if (weight_scale < 0 || id_sigma < 0 || nonlinearity_scale < 0 || noise_sigma < 0)
        throw ValueError("synth: scales must be >= 0");
}

SynthData generate_synthetic(const SynthSpec& spec) {
    spec.validate();
    Rng root(spec.seed);
    Rng w_rng = root.derive(1);
    Rng alpha_rng = root.derive(2);
    Rng feat_rng = root.derive(3);
    Rng noise_rng = root.derive(4);
    Rng id_rng = root.derive(5);

    SynthData out;
    out.weights.resize(spec.feature_count);
    for (auto& w : out.weights) w = spec.weight_scale * w_rng.normal();
    out.id_effects.resize(spec.distinct_ids);
    for (auto& a : out.id_effects) a = spec.id_sigma * alpha_rng.normal();

    // Round-robin id assignment shuffled: all K ids appear when rows >= K.
    std::vector<std::int64_t> ids(spec.rows);
    for (std::size_t i = 0; i < spec.rows; ++i)
        ids[i] = static_cast<std::int64_t>(i % spec.distinct_ids);
    id_rng.shuffle(ids);

    Dataset& ds = out.dataset;
    ds.features = MatF(spec.rows, spec.feature_count);
    ds.feature_names.resize(spec.feature_count);
    for (std::size_t j = 0; j < spec.feature_count; ++j) ds.feature_names[j] = "f_" + std::to_string(j);
    out.linear_part.resize(spec.rows);

    for (std::size_t i = 0; i < spec.rows; ++i) {
        double lin = 0.0;
        for (std::size_t j = 0; j < spec.feature_count; ++j) {
            float f = static_cast<float>(feat_rng.normal());
            ds.features(i, j) = f;
            lin += out.weights[j] * static_cast<double>(f);
        }
        out.linear_part[i] = lin;
        double t = lin + out.id_effects[static_cast<std::size_t>(ids[i])];
        if (spec.feature_count >= 2)
            t += spec.nonlinearity_scale *
                 std::tanh(static_cast<double>(ds.features(i, 0)) * static_cast<double>(ds.features(i, 1)));
        t += spec.noise_sigma * noise_rng.normal();

        std::int64_t time = static_cast<std::int64_t>((i * spec.time_blocks) / spec.rows);
        ds.time_id.push_back(time);
        ds.investment_id.push_back(ids[i]);
        ds.target.push_back(static_cast<float>(t));
        ds.row_id.push_back(std::to_string(time) + "_" + std::to_string(ids[i]));
    }
    ds.rebuild_vocab();
    return out;
}

} // namespace edbn
