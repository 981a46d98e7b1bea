#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "wino/backend.hpp"
#include "wino/kernels.hpp"

namespace wino {

struct TransformerArch {
    int n_layers = 1;
    int n_heads = 1;
    int d_model = 16;
    int d_ff = 32;
    float rope_base = 10000.0f;

    int head_dim() const { return d_model / n_heads; }
};

struct LayerWeights {
    std::vector<float> wq, wk, wv, wo; // [d_model, d_model]
    std::vector<float> ln1_g, ln1_b;   // [d_model]
    std::vector<float> w1;             // [d_model, d_ff]
    std::vector<float> w2;             // [d_ff, d_model]
    std::vector<float> ln2_g, ln2_b;   // [d_model]
};

struct TransformerWeights {
    std::vector<float> embed; // [vocab, d_model]
    std::vector<LayerWeights> layers;
    std::vector<float> ln_f_g, ln_f_b; // [d_model]
    std::vector<float> head;           // [d_model, vocab]
};

/// Bidirectional transformer over explicit position ids and an arbitrary
/// boolean attention mask. Rotary encoding reads the provided position ids,
/// never array indices, which is what lets a shadow slot alias its mirror.
/// The mask-token logit is forced to -inf so the model can never emit it.
/// All weights and arithmetic are 32-bit floats.
class TinyTransformer final : public ModelBackend {
public:
    TinyTransformer(Vocabulary vocab, TransformerArch arch, TransformerWeights weights);

    /// Gaussian-initialized weights, deterministic per seed.
    static TinyTransformer random(Vocabulary vocab, TransformerArch arch, std::uint64_t seed,
                                  float scale = 0.5f);
    /// All-zero weights: every position gets the uniform distribution.
    static TinyTransformer zeros(Vocabulary vocab, TransformerArch arch);

    const Vocabulary& vocab() const override { return vocab_; }
    const TransformerArch& arch() const { return arch_; }
    const TransformerWeights& weights() const { return weights_; }

    std::vector<std::vector<float>> forward(const std::vector<TokenId>& tokens,
                                            const std::vector<int>& position_ids,
                                            const AttnMask& attn_mask) const override;

    /// Switch between the OpenMP kernels and the serial reference. Results
    /// are bitwise identical either way.
    void set_parallel(bool parallel) { ops_ = parallel ? &kernels::parallel_ops() : &kernels::serial_ops(); }
    bool parallel() const { return ops_ == &kernels::parallel_ops(); }

private:
    Vocabulary vocab_;
    TransformerArch arch_;
    TransformerWeights weights_;
    std::vector<float> inv_freq_; // head_dim/2 rotary frequencies
    const kernels::Ops* ops_ = nullptr;
};

/// Reads a model JSON file. Validation failures name the offending tensor.
TinyTransformer load_model(const std::filesystem::path& path);

/// Writes the model back out in the same JSON layout load_model reads.
void save_model(const TinyTransformer& model, const std::filesystem::path& path);

} // namespace wino
