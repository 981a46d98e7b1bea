#pragma once

#include <span>
#include <vector>

#include "wino/extension.hpp"
#include "wino/vocab.hpp"

namespace wino {

struct Candidate {
    TokenId token = 0;
    float probability = 0.0f;
};

/// Anything that maps (tokens, position ids, attention mask) to one
/// probability distribution per position. Distributions cover the full id
/// space with the mask token pinned to zero, and each sums to 1 within 1e-5.
/// Backends are immutable after construction; forward is pure and safe to
/// call concurrently.
class ModelBackend {
public:
    virtual ~ModelBackend() = default;

    virtual const Vocabulary& vocab() const = 0;

    virtual std::vector<std::vector<float>> forward(const std::vector<TokenId>& tokens,
                                                    const std::vector<int>& position_ids,
                                                    const AttnMask& attn_mask) const = 0;
};

/// Max-probability token and its probability; ties break to the lowest id.
/// Throws shape_error on an empty distribution.
Candidate top_candidate(std::span<const float> dist);

/// Shared input checks: consistent lengths, square mask, in-range token ids,
/// non-negative position ids, and at least one true entry per mask row
/// (an all-false row is rejected before any forward work).
void validate_forward_inputs(const Vocabulary& vocab, const std::vector<TokenId>& tokens,
                             const std::vector<int>& position_ids, const AttnMask& attn_mask);

} // namespace wino
