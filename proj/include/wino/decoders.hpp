#pragma once

#include <cstdint>
#include <vector>

#include "wino/backend.hpp"
#include "wino/state.hpp"

namespace wino {

struct DecodeStats {
    std::int64_t steps = 0; // model forward passes
    double wall_time_seconds = 0.0;
    std::int64_t tokens_generated = 0;
};

struct DecodeResult {
    std::vector<TokenId> final_response; // length L, never contains the mask id
    std::vector<StepRecord> trace;
    DecodeStats stats;
};

/// One forward pass on the plain sequence; unmasks the single most confident
/// masked position of the current block. Confidence ties break to the lowest
/// position. Throws state_error when the block has no mask.
StepRecord greedy_step(SequenceState& state, const ModelBackend& backend);

/// One forward pass; unmasks the min(k, #masked) highest-confidence masked
/// positions of the current block in one go.
StepRecord naive_parallel_step(SequenceState& state, const ModelBackend& backend, int k);

/// One forward pass on the extended sequence (shadow block appended), then,
/// reading only the pre-step state:
///   - draft: masked positions whose confidence exceeds tau1 get their argmax
///     token;
///   - verify: unsettled non-mask positions whose shadow-slot probability of
///     the held token falls below tau2 are re-masked;
///   - forced progress: when nothing cleared tau1 while masks remain, the
///     single best masked position is drafted anyway.
/// Tokens drafted here are first verified on the next step.
StepRecord wino_step(SequenceState& state, const ModelBackend& backend, float tau1, float tau2,
                     bool forced_progress);

/// Steps the configured decoder until the current block has no mask, then
/// settles the block and advances. Once the in-block step count reaches the
/// cap, falls back to greedy steps (verification off) flagged cap_hit, which
/// bounds the block at cap + block_length steps.
std::vector<StepRecord> run_block(SequenceState& state, const ModelBackend& backend,
                                  const DecoderConfig& config);

/// Decodes all blocks left to right (one block means full diffusion
/// decoding). Wall time is measured around the whole block loop.
DecodeResult run_decode(const std::vector<TokenId>& prompt, const ModelBackend& backend,
                        const DecoderConfig& config);

} // namespace wino
