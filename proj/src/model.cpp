#include "edbn/model.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>

namespace edbn {
namespace {

void write_bytes_le(std::ostream& out, std::uint64_t value, int nbytes) {
    for (int i = 0; i < nbytes; ++i) out.put(static_cast<char>((value >> (8 * i)) & 0xFF));
}

std::uint64_t read_bytes_le(std::istream& in, int nbytes) {
    std::uint64_t value = 0;
    for (int i = 0; i < nbytes; ++i) {
        int c = in.get();
        if (c == EOF) throw SchemaError("truncated model file");
        value |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
    }
    return value;
}

template <class Seq>
std::string join_csv(const Seq& seq) {
    std::string out;
    for (const auto& v : seq) {
        if (!out.empty()) out += ',';
        if constexpr (std::is_convertible_v<std::decay_t<decltype(v)>, std::string>)
            out += v;
        else
            out += std::to_string(v);
    }
    return out;
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    if (s.empty()) return out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(tok);
    if (!s.empty() && s.back() == ',') out.push_back("");
    return out;
}

std::uint64_t parse_count(const std::string& s, const std::string& key) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
        throw SchemaError("model header: bad value for " + key + ": '" + s + "'");
    try {
        return std::stoull(s);
    } catch (const std::exception&) {
        throw SchemaError("model header: bad value for " + key + ": '" + s + "'");
    }
}

} // namespace

void save_model(const DualBranchNet<float>& net, const std::vector<std::int64_t>& vocab_raw_ids,
                const std::vector<std::string>& feature_names, const std::string& path) {
    const ModelConfig& c = net.config;
    if (!vocab_raw_ids.empty() && vocab_raw_ids.size() != c.id_vocab - 1)
        throw ValueError("save_model: vocabulary has " + std::to_string(vocab_raw_ids.size()) +
                         " raw ids but the model embeds " + std::to_string(c.id_vocab - 1));
    if (!feature_names.empty() && feature_names.size() != c.feature_count)
        throw ValueError("save_model: " + std::to_string(feature_names.size()) +
                         " feature names but the model expects " + std::to_string(c.feature_count));

    std::ostringstream header;
    header << "feature_count=" << c.feature_count << "\n";
    header << "id_vocab=" << c.id_vocab << "\n";
    header << "embed_dim=" << c.embed_dim << "\n";
    header << "branch_a_widths=" << join_csv(c.branch_a_widths) << "\n";
    header << "branch_b_widths=" << join_csv(c.branch_b_widths) << "\n";
    header << "head_widths=" << join_csv(c.head_widths) << "\n";
    header << "feature_names=" << join_csv(feature_names) << "\n";
    header << "vocab=" << join_csv(vocab_raw_ids) << "\n";
    const std::string header_text = header.str();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write("EDBN", 4);
    write_bytes_le(out, kModelFormatVersion, 2);
    write_bytes_le(out, header_text.size(), 4);
    out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));

    auto views = tensor_views<const float>(net);
    for (const auto& span : views)
        for (float v : span) write_bytes_le(out, std::bit_cast<std::uint32_t>(v), 4);
    if (!out) throw IoError("write failed: " + path);
}

SavedModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model file: " + path);

    char magic[4] = {};
    in.read(magic, 4);
    if (in.gcount() != 4 || std::string(magic, 4) != "EDBN")
        throw SchemaError("not a model file: bad magic in " + path);
    std::uint16_t version = static_cast<std::uint16_t>(read_bytes_le(in, 2));
    if (version > kModelFormatVersion)
        throw SchemaError("unsupported model version " + std::to_string(version) + " (this build reads up to " +
                          std::to_string(kModelFormatVersion) + ")");
    std::uint32_t header_len = static_cast<std::uint32_t>(read_bytes_le(in, 4));
    std::string header_text(header_len, '\0');
    in.read(header_text.data(), header_len);
    if (static_cast<std::uint32_t>(in.gcount()) != header_len) throw SchemaError("truncated model file");

    ModelConfig c;
    std::vector<std::int64_t> vocab;
    std::vector<std::string> names;
    bool saw_f = false, saw_v = false, saw_d = false;
    std::istringstream hs(header_text);
    std::string line;
    while (std::getline(hs, line)) {
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw SchemaError("model header: malformed line '" + line + "'");
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        auto parse_widths = [&](auto& widths) {
            auto parts = split_csv(val);
            if (parts.size() != widths.size())
                throw SchemaError("model header: " + key + " needs " + std::to_string(widths.size()) +
                                  " entries");
            for (std::size_t i = 0; i < widths.size(); ++i) widths[i] = parse_count(parts[i], key);
        };
        if (key == "feature_count") {
            c.feature_count = parse_count(val, key);
            saw_f = true;
        } else if (key == "id_vocab") {
            c.id_vocab = parse_count(val, key);
            saw_v = true;
        } else if (key == "embed_dim") {
            c.embed_dim = parse_count(val, key);
            saw_d = true;
        } else if (key == "branch_a_widths") {
            parse_widths(c.branch_a_widths);
        } else if (key == "branch_b_widths") {
            parse_widths(c.branch_b_widths);
        } else if (key == "head_widths") {
            parse_widths(c.head_widths);
        } else if (key == "feature_names") {
            names = split_csv(val);
        } else if (key == "vocab") {
            for (const auto& tok : split_csv(val)) {
                try {
                    vocab.push_back(std::stoll(tok));
                } catch (const std::exception&) {
                    throw SchemaError("model header: bad vocab entry '" + tok + "'");
                }
            }
        } else {
            throw SchemaError("model header: unknown key '" + key + "'");
        }
    }
    if (!saw_f || !saw_v || !saw_d) throw SchemaError("model header: missing required config keys");
    c.validate();
    if (!vocab.empty() && vocab.size() != c.id_vocab - 1)
        throw SchemaError("model header: vocab lists " + std::to_string(vocab.size()) + " ids but id_vocab is " +
                          std::to_string(c.id_vocab));
    if (!names.empty() && names.size() != c.feature_count)
        throw SchemaError("model header: feature_names lists " + std::to_string(names.size()) +
                          " names but feature_count is " + std::to_string(c.feature_count));

    SavedModel result;
    result.net.config = c;
    result.net.embedding.table = MatF(c.id_vocab, c.embed_dim);
    auto shape_stack = [](std::size_t in, std::span<const std::size_t> widths) {
        std::vector<LinearParams<float>> layers(widths.size());
        std::size_t prev = in;
        for (std::size_t l = 0; l < widths.size(); ++l) {
            layers[l].weight = MatF(prev, widths[l]);
            layers[l].bias.assign(widths[l], 0.0f);
            prev = widths[l];
        }
        return layers;
    };
    result.net.branch_a = shape_stack(c.feature_count, c.branch_a_widths);
    result.net.branch_b = shape_stack(c.embed_dim, c.branch_b_widths);
    result.net.head = shape_stack(c.branch_a_widths.back() + c.branch_b_widths.back(), c.head_widths);

    for (auto& span : tensor_views<float>(result.net))
        for (float& v : span)
            v = std::bit_cast<float>(static_cast<std::uint32_t>(read_bytes_le(in, 4)));
    if (in.get() != EOF) throw SchemaError("model file has trailing bytes: " + path);

    result.vocab_raw_ids = std::move(vocab);
    result.feature_names = std::move(names);
    return result;
}

} // namespace edbn
