#include "wino/transformer.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "wino/json_io.hpp"
#include "wino/rng.hpp"

namespace wino {

namespace {

using ordered_json = nlohmann::ordered_json;

void check_tensor(const std::string& name, const std::vector<float>& values,
                  std::size_t expected) {
    if (values.size() != expected) {
        throw shape_error("tensor " + name + " has " + std::to_string(values.size()) +
                          " values, expected " + std::to_string(expected));
    }
    for (float v : values) {
        if (!std::isfinite(v)) {
            throw parse_error("tensor " + name + " contains a non-finite value");
        }
    }
}

void check_arch(const TransformerArch& arch) {
    if (arch.n_layers <= 0 || arch.n_heads <= 0 || arch.d_model <= 0 || arch.d_ff <= 0) {
        throw shape_error("arch dimensions must be positive");
    }
    if (arch.d_model % arch.n_heads != 0) {
        throw shape_error("d_model " + std::to_string(arch.d_model) + " not divisible by n_heads " +
                          std::to_string(arch.n_heads));
    }
    if (arch.head_dim() % 2 != 0) {
        throw shape_error("head dimension " + std::to_string(arch.head_dim()) +
                          " must be even for rotary pairs");
    }
    if (!(arch.rope_base > 0.0f) || !std::isfinite(arch.rope_base)) {
        throw shape_error("rope_base must be positive and finite");
    }
}

std::string layer_tensor(int i, const char* leaf) {
    return "layer" + std::to_string(i) + "." + leaf;
}

} // namespace

TinyTransformer::TinyTransformer(Vocabulary vocab, TransformerArch arch, TransformerWeights weights)
    : vocab_(std::move(vocab)), arch_(arch), weights_(std::move(weights)),
      ops_(&kernels::parallel_ops()) {
    check_arch(arch_);
    const auto d = static_cast<std::size_t>(arch_.d_model);
    const auto ff = static_cast<std::size_t>(arch_.d_ff);
    const auto v = static_cast<std::size_t>(vocab_.size());

    check_tensor("embed", weights_.embed, v * d);
    if (weights_.layers.size() != static_cast<std::size_t>(arch_.n_layers)) {
        throw shape_error("expected " + std::to_string(arch_.n_layers) + " layers, got " +
                          std::to_string(weights_.layers.size()));
    }
    for (int i = 0; i < arch_.n_layers; ++i) {
        const auto& lw = weights_.layers[static_cast<std::size_t>(i)];
        check_tensor(layer_tensor(i, "wq"), lw.wq, d * d);
        check_tensor(layer_tensor(i, "wk"), lw.wk, d * d);
        check_tensor(layer_tensor(i, "wv"), lw.wv, d * d);
        check_tensor(layer_tensor(i, "wo"), lw.wo, d * d);
        check_tensor(layer_tensor(i, "ln1.g"), lw.ln1_g, d);
        check_tensor(layer_tensor(i, "ln1.b"), lw.ln1_b, d);
        check_tensor(layer_tensor(i, "w1"), lw.w1, d * ff);
        check_tensor(layer_tensor(i, "w2"), lw.w2, ff * d);
        check_tensor(layer_tensor(i, "ln2.g"), lw.ln2_g, d);
        check_tensor(layer_tensor(i, "ln2.b"), lw.ln2_b, d);
    }
    check_tensor("ln_f.g", weights_.ln_f_g, d);
    check_tensor("ln_f.b", weights_.ln_f_b, d);
    check_tensor("head", weights_.head, d * v);

    const int half = arch_.head_dim() / 2;
    inv_freq_.resize(static_cast<std::size_t>(half));
    for (int t = 0; t < half; ++t) {
        inv_freq_[static_cast<std::size_t>(t)] = std::pow(
            arch_.rope_base, -2.0f * static_cast<float>(t) / static_cast<float>(arch_.head_dim()));
    }
}

TinyTransformer TinyTransformer::random(Vocabulary vocab, TransformerArch arch, std::uint64_t seed,
                                        float scale) {
    check_arch(arch);
    Rng rng(seed);
    const float sigma = scale / std::sqrt(static_cast<float>(arch.d_model));
    auto fill = [&](std::vector<float>& t, std::size_t size, float s) {
        t.resize(size);
        for (auto& x : t) {
            x = static_cast<float>(rng.next_gaussian()) * s;
        }
    };
    const auto d = static_cast<std::size_t>(arch.d_model);
    const auto ff = static_cast<std::size_t>(arch.d_ff);
    const auto v = static_cast<std::size_t>(vocab.size());

    TransformerWeights w;
    fill(w.embed, v * d, 1.0f);
    w.layers.resize(static_cast<std::size_t>(arch.n_layers));
    for (auto& lw : w.layers) {
        fill(lw.wq, d * d, sigma);
        fill(lw.wk, d * d, sigma);
        fill(lw.wv, d * d, sigma);
        fill(lw.wo, d * d, sigma);
        lw.ln1_g.assign(d, 1.0f);
        lw.ln1_b.assign(d, 0.0f);
        fill(lw.w1, d * ff, sigma);
        fill(lw.w2, ff * d, sigma);
        lw.ln2_g.assign(d, 1.0f);
        lw.ln2_b.assign(d, 0.0f);
    }
    w.ln_f_g.assign(d, 1.0f);
    w.ln_f_b.assign(d, 0.0f);
    fill(w.head, d * v, 1.0f);
    return TinyTransformer(std::move(vocab), arch, std::move(w));
}

TinyTransformer TinyTransformer::zeros(Vocabulary vocab, TransformerArch arch) {
    check_arch(arch);
    const auto d = static_cast<std::size_t>(arch.d_model);
    const auto ff = static_cast<std::size_t>(arch.d_ff);
    const auto v = static_cast<std::size_t>(vocab.size());
    TransformerWeights w;
    w.embed.assign(v * d, 0.0f);
    w.layers.resize(static_cast<std::size_t>(arch.n_layers));
    for (auto& lw : w.layers) {
        lw.wq.assign(d * d, 0.0f);
        lw.wk.assign(d * d, 0.0f);
        lw.wv.assign(d * d, 0.0f);
        lw.wo.assign(d * d, 0.0f);
        lw.ln1_g.assign(d, 0.0f);
        lw.ln1_b.assign(d, 0.0f);
        lw.w1.assign(d * ff, 0.0f);
        lw.w2.assign(ff * d, 0.0f);
        lw.ln2_g.assign(d, 0.0f);
        lw.ln2_b.assign(d, 0.0f);
    }
    w.ln_f_g.assign(d, 0.0f);
    w.ln_f_b.assign(d, 0.0f);
    w.head.assign(d * v, 0.0f);
    return TinyTransformer(std::move(vocab), arch, std::move(w));
}

std::vector<std::vector<float>> TinyTransformer::forward(const std::vector<TokenId>& tokens,
                                                         const std::vector<int>& position_ids,
                                                         const AttnMask& attn_mask) const {
    validate_forward_inputs(vocab_, tokens, position_ids, attn_mask);
    const auto& ops = *ops_;
    const int n = static_cast<int>(tokens.size());
    const int d = arch_.d_model;
    const int ff = arch_.d_ff;
    const int v = vocab_.size();
    const auto nd = static_cast<std::size_t>(n) * static_cast<std::size_t>(d);

    std::vector<float> x(nd);
    for (int i = 0; i < n; ++i) {
        const float* row = weights_.embed.data() +
                           static_cast<std::size_t>(tokens[static_cast<std::size_t>(i)]) *
                               static_cast<std::size_t>(d);
        std::copy(row, row + d, x.begin() + static_cast<std::ptrdiff_t>(i) * d);
    }

    std::vector<float> h(nd), q(nd), k(nd), val(nd), attn(nd);
    std::vector<float> ffbuf(static_cast<std::size_t>(n) * static_cast<std::size_t>(ff));

    for (const auto& lw : weights_.layers) {
        ops.layer_norm(x.data(), lw.ln1_g.data(), lw.ln1_b.data(), h.data(), n, d);
        ops.matmul(h.data(), lw.wq.data(), q.data(), n, d, d);
        ops.matmul(h.data(), lw.wk.data(), k.data(), n, d, d);
        ops.matmul(h.data(), lw.wv.data(), val.data(), n, d, d);
        ops.rope(q.data(), position_ids.data(), n, arch_.n_heads, arch_.head_dim(),
                 inv_freq_.data());
        ops.rope(k.data(), position_ids.data(), n, arch_.n_heads, arch_.head_dim(),
                 inv_freq_.data());
        ops.attention(q.data(), k.data(), val.data(), attn_mask, attn.data(), n, arch_.n_heads,
                      arch_.head_dim());
        ops.matmul(attn.data(), lw.wo.data(), h.data(), n, d, d);
        ops.add_inplace(x.data(), h.data(), static_cast<std::int64_t>(nd));

        ops.layer_norm(x.data(), lw.ln2_g.data(), lw.ln2_b.data(), h.data(), n, d);
        ops.matmul(h.data(), lw.w1.data(), ffbuf.data(), n, d, ff);
        ops.gelu(ffbuf.data(), static_cast<std::int64_t>(n) * ff);
        ops.matmul(ffbuf.data(), lw.w2.data(), h.data(), n, ff, d);
        ops.add_inplace(x.data(), h.data(), static_cast<std::int64_t>(nd));
    }

    ops.layer_norm(x.data(), weights_.ln_f_g.data(), weights_.ln_f_b.data(), h.data(), n, d);
    std::vector<float> logits(static_cast<std::size_t>(n) * static_cast<std::size_t>(v));
    ops.matmul(h.data(), weights_.head.data(), logits.data(), n, d, v);
    ops.masked_softmax_rows(logits.data(), n, v, vocab_.mask_id());

    std::vector<std::vector<float>> dists(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const float* row = logits.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(v);
        dists[static_cast<std::size_t>(i)].assign(row, row + v);
    }
    return dists;
}

// ---------------------------------------------------------------------------
// Model file I/O
// ---------------------------------------------------------------------------

namespace {

std::vector<float> parse_matrix(const ordered_json& weights, const std::string& name,
                                std::size_t rows, std::size_t cols) {
    if (!weights.contains(name)) {
        throw parse_error("missing tensor " + name);
    }
    const auto& node = weights.at(name);
    if (!node.is_array() || node.size() != rows) {
        throw shape_error("tensor " + name + " must have " + std::to_string(rows) + " rows");
    }
    std::vector<float> out;
    out.reserve(rows * cols);
    for (const auto& row : node) {
        if (!row.is_array() || row.size() != cols) {
            throw shape_error("tensor " + name + " rows must have " + std::to_string(cols) +
                              " columns");
        }
        for (const auto& cell : row) {
            if (!cell.is_number()) {
                throw parse_error("tensor " + name + " contains a non-numeric value");
            }
            out.push_back(static_cast<float>(cell.get<double>()));
        }
    }
    return out;
}

std::vector<float> parse_vector(const ordered_json& weights, const std::string& name,
                                std::size_t size) {
    if (!weights.contains(name)) {
        throw parse_error("missing tensor " + name);
    }
    const auto& node = weights.at(name);
    if (!node.is_array() || node.size() != size) {
        throw shape_error("tensor " + name + " must have " + std::to_string(size) + " values");
    }
    std::vector<float> out;
    out.reserve(size);
    for (const auto& cell : node) {
        if (!cell.is_number()) {
            throw parse_error("tensor " + name + " contains a non-numeric value");
        }
        out.push_back(static_cast<float>(cell.get<double>()));
    }
    return out;
}

ordered_json matrix_json(const std::vector<float>& values, std::size_t rows, std::size_t cols) {
    ordered_json out = ordered_json::array();
    for (std::size_t r = 0; r < rows; ++r) {
        ordered_json row = ordered_json::array();
        for (std::size_t c = 0; c < cols; ++c) {
            row.push_back(values[r * cols + c]);
        }
        out.push_back(std::move(row));
    }
    return out;
}

ordered_json vector_json(const std::vector<float>& values) {
    ordered_json out = ordered_json::array();
    for (float v : values) {
        out.push_back(v);
    }
    return out;
}

} // namespace

Vocabulary parse_vocab_json(const nlohmann::ordered_json& node) {
    if (!node.contains("tokens") || !node.at("tokens").is_array()) {
        throw parse_error("vocab.tokens missing or not an array");
    }
    std::vector<std::string> tokens = node.at("tokens").get<std::vector<std::string>>();
    if (!node.contains("mask_token")) {
        throw parse_error("vocab.mask_token missing");
    }
    const auto mask_token = node.at("mask_token").get<std::string>();
    TokenId mask_id = -1;
    std::optional<TokenId> eos_id;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i] == mask_token) {
            mask_id = static_cast<TokenId>(i);
        }
    }
    if (mask_id < 0) {
        throw parse_error("mask_token \"" + mask_token + "\" not present in tokens");
    }
    if (node.contains("eos_token") && !node.at("eos_token").is_null()) {
        const auto eos_token = node.at("eos_token").get<std::string>();
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (tokens[i] == eos_token) {
                eos_id = static_cast<TokenId>(i);
            }
        }
        if (!eos_id) {
            throw parse_error("eos_token \"" + eos_token + "\" not present in tokens");
        }
    }
    return Vocabulary(std::move(tokens), mask_id, eos_id);
}

nlohmann::ordered_json vocab_json(const Vocabulary& vocab) {
    ordered_json node;
    node["tokens"] = vocab.tokens();
    node["mask_token"] = vocab.token(vocab.mask_id());
    if (vocab.eos_id()) {
        node["eos_token"] = vocab.token(*vocab.eos_id());
    }
    return node;
}

TinyTransformer load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw io_error("cannot open model file " + path.string());
    }
    ordered_json doc;
    try {
        in >> doc;
    } catch (const std::exception& e) {
        throw parse_error("model file " + path.string() + ": " + e.what());
    }

    if (!doc.contains("arch") || !doc.contains("vocab") || !doc.contains("weights")) {
        throw parse_error("model file needs arch, vocab and weights sections");
    }
    const auto& arch_node = doc.at("arch");
    TransformerArch arch;
    try {
        arch.n_layers = arch_node.at("n_layers").get<int>();
        arch.n_heads = arch_node.at("n_heads").get<int>();
        arch.d_model = arch_node.at("d_model").get<int>();
        arch.d_ff = arch_node.at("d_ff").get<int>();
        arch.rope_base = static_cast<float>(arch_node.at("rope_base").get<double>());
    } catch (const ordered_json::exception& e) {
        throw parse_error(std::string("arch section: ") + e.what());
    }
    check_arch(arch);

    Vocabulary vocab = parse_vocab_json(doc.at("vocab"));

    const auto d = static_cast<std::size_t>(arch.d_model);
    const auto ff = static_cast<std::size_t>(arch.d_ff);
    const auto v = static_cast<std::size_t>(vocab.size());
    const auto& wnode = doc.at("weights");
    if (!wnode.is_object()) {
        throw parse_error("weights section must be an object");
    }

    TransformerWeights w;
    w.embed = parse_matrix(wnode, "embed", v, d);
    w.layers.resize(static_cast<std::size_t>(arch.n_layers));
    for (int i = 0; i < arch.n_layers; ++i) {
        auto& lw = w.layers[static_cast<std::size_t>(i)];
        lw.wq = parse_matrix(wnode, layer_tensor(i, "wq"), d, d);
        lw.wk = parse_matrix(wnode, layer_tensor(i, "wk"), d, d);
        lw.wv = parse_matrix(wnode, layer_tensor(i, "wv"), d, d);
        lw.wo = parse_matrix(wnode, layer_tensor(i, "wo"), d, d);
        lw.ln1_g = parse_vector(wnode, layer_tensor(i, "ln1.g"), d);
        lw.ln1_b = parse_vector(wnode, layer_tensor(i, "ln1.b"), d);
        lw.w1 = parse_matrix(wnode, layer_tensor(i, "w1"), d, ff);
        lw.w2 = parse_matrix(wnode, layer_tensor(i, "w2"), ff, d);
        lw.ln2_g = parse_vector(wnode, layer_tensor(i, "ln2.g"), d);
        lw.ln2_b = parse_vector(wnode, layer_tensor(i, "ln2.b"), d);
    }
    w.ln_f_g = parse_vector(wnode, "ln_f.g", d);
    w.ln_f_b = parse_vector(wnode, "ln_f.b", d);
    w.head = parse_matrix(wnode, "head", d, v);

    // Catch misspelled tensor names rather than silently ignoring them.
    std::size_t expected = 4; // embed, ln_f.g, ln_f.b, head
    expected += static_cast<std::size_t>(arch.n_layers) * 10;
    if (wnode.size() != expected) {
        for (auto it = wnode.begin(); it != wnode.end(); ++it) {
            const std::string& name = it.key();
            bool known = name == "embed" || name == "ln_f.g" || name == "ln_f.b" || name == "head";
            for (int i = 0; i < arch.n_layers && !known; ++i) {
                for (const char* leaf :
                     {"wq", "wk", "wv", "wo", "ln1.g", "ln1.b", "w1", "w2", "ln2.g", "ln2.b"}) {
                    if (name == layer_tensor(i, leaf)) {
                        known = true;
                        break;
                    }
                }
            }
            if (!known) {
                throw parse_error("unknown tensor " + name);
            }
        }
    }

    return TinyTransformer(std::move(vocab), arch, std::move(w));
}

void save_model(const TinyTransformer& model, const std::filesystem::path& path) {
    const auto& arch = model.arch();
    const auto& w = model.weights();
    const auto d = static_cast<std::size_t>(arch.d_model);
    const auto ff = static_cast<std::size_t>(arch.d_ff);
    const auto v = static_cast<std::size_t>(model.vocab().size());

    ordered_json doc;
    doc["arch"] = {{"n_layers", arch.n_layers},
                   {"n_heads", arch.n_heads},
                   {"d_model", arch.d_model},
                   {"d_ff", arch.d_ff},
                   {"rope_base", arch.rope_base}};
    doc["vocab"] = vocab_json(model.vocab());

    ordered_json weights;
    weights["embed"] = matrix_json(w.embed, v, d);
    for (int i = 0; i < arch.n_layers; ++i) {
        const auto& lw = w.layers[static_cast<std::size_t>(i)];
        weights[layer_tensor(i, "wq")] = matrix_json(lw.wq, d, d);
        weights[layer_tensor(i, "wk")] = matrix_json(lw.wk, d, d);
        weights[layer_tensor(i, "wv")] = matrix_json(lw.wv, d, d);
        weights[layer_tensor(i, "wo")] = matrix_json(lw.wo, d, d);
        weights[layer_tensor(i, "ln1.g")] = vector_json(lw.ln1_g);
        weights[layer_tensor(i, "ln1.b")] = vector_json(lw.ln1_b);
        weights[layer_tensor(i, "w1")] = matrix_json(lw.w1, d, ff);
        weights[layer_tensor(i, "w2")] = matrix_json(lw.w2, ff, d);
        weights[layer_tensor(i, "ln2.g")] = vector_json(lw.ln2_g);
        weights[layer_tensor(i, "ln2.b")] = vector_json(lw.ln2_b);
    }
    weights["ln_f.g"] = vector_json(w.ln_f_g);
    weights["ln_f.b"] = vector_json(w.ln_f_b);
    weights["head"] = matrix_json(w.head, d, v);
    doc["weights"] = std::move(weights);

    std::ofstream out(path);
    if (!out) {
        throw io_error("cannot write model file " + path.string());
    }
    out << doc.dump(1) << "\n";
}

} // namespace wino
