#pragma once

#include <atomic>
#include <functional>
#include <string>
#include <vector>

#include "wino/backend.hpp"

namespace wino::testing {

inline Vocabulary make_vocab(int generable) {
    std::vector<std::string> tokens;
    for (int i = 0; i < generable; ++i) {
        tokens.push_back("t" + std::to_string(i));
    }
    tokens.push_back("<mask>");
    return Vocabulary(std::move(tokens), generable);
}

/// Backend driven by a callback, for scripted decoder scenarios.
class LambdaBackend final : public ModelBackend {
public:
    using Fn = std::function<std::vector<std::vector<float>>(
        const std::vector<TokenId>&, const std::vector<int>&, const AttnMask&)>;

    LambdaBackend(Vocabulary vocab, Fn fn) : vocab_(std::move(vocab)), fn_(std::move(fn)) {}

    const Vocabulary& vocab() const override { return vocab_; }

    std::vector<std::vector<float>> forward(const std::vector<TokenId>& tokens,
                                            const std::vector<int>& position_ids,
                                            const AttnMask& attn_mask) const override {
        validate_forward_inputs(vocab_, tokens, position_ids, attn_mask);
        return fn_(tokens, position_ids, attn_mask);
    }

private:
    Vocabulary vocab_;
    Fn fn_;
};

/// Uniform-confidence backend: every position gets 1/(V-1) everywhere.
inline LambdaBackend uniform_backend(int generable) {
    auto vocab = make_vocab(generable);
    const int vsize = vocab.size();
    const auto mask_id = vocab.mask_id();
    return LambdaBackend(std::move(vocab), [vsize, mask_id](const std::vector<TokenId>& tokens,
                                                            const std::vector<int>&,
                                                            const AttnMask&) {
        std::vector<std::vector<float>> dists(tokens.size());
        for (auto& dist : dists) {
            dist.assign(static_cast<std::size_t>(vsize), 1.0f / static_cast<float>(vsize - 1));
            dist[static_cast<std::size_t>(mask_id)] = 0.0f;
        }
        return dists;
    });
}

/// Counts forward passes through any backend.
class CountingBackend final : public ModelBackend {
public:
    explicit CountingBackend(const ModelBackend& inner) : inner_(inner) {}

    const Vocabulary& vocab() const override { return inner_.vocab(); }

    std::vector<std::vector<float>> forward(const std::vector<TokenId>& tokens,
                                            const std::vector<int>& position_ids,
                                            const AttnMask& attn_mask) const override {
        ++calls_;
        return inner_.forward(tokens, position_ids, attn_mask);
    }

    std::int64_t calls() const { return calls_.load(); }

private:
    const ModelBackend& inner_;
    mutable std::atomic<std::int64_t> calls_{0};
};

} // namespace wino::testing
