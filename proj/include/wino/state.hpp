#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "wino/config.hpp"
#include "wino/vocab.hpp"

namespace wino {

enum class PositionStatus : std::uint8_t {
    masked,  // still the mask token
    drafted, // holds a candidate token, may still be revoked
    settled, // block finished; immutable from here on
};

/// Prompt plus partially decoded response. Single-owner mutable value:
/// decoders mutate it in place, one worker at a time.
struct SequenceState {
    std::vector<TokenId> prompt;
    std::vector<TokenId> response;        // length L; holds mask_id where masked
    std::vector<PositionStatus> status;   // per response position
    std::vector<std::int64_t> drafted_at; // step that drafted the position, -1 otherwise
    TokenId mask_id = 0;
    int block_length = 0;
    int block_index = 0;
    std::int64_t step_count = 0; // model forward passes consumed so far

    int gen_length() const { return static_cast<int>(response.size()); }
    int num_blocks() const { return gen_length() / block_length; }
    int prompt_length() const { return static_cast<int>(prompt.size()); }
    // prompt + response
    int main_length() const { return prompt_length() + gen_length(); }

    bool is_masked(int pos) const { return response[static_cast<std::size_t>(pos)] == mask_id; }
};

/// One decoding step: what was drafted, what was revoked, and the response
/// afterwards. Drafted positions were masked before the step; revoked
/// positions were not; the two sets never overlap.
struct DraftEntry {
    int position = 0; // response-relative
    TokenId token = 0;
    float confidence = 0.0f;

    bool operator==(const DraftEntry&) const = default;
};

struct RevokeEntry {
    int position = 0;       // response-relative
    TokenId prior_token = 0;
    float score = 0.0f;     // shadow probability of the prior token

    bool operator==(const RevokeEntry&) const = default;
};

struct StepRecord {
    std::int64_t step = 0;
    int block = 0;
    std::vector<DraftEntry> drafted;
    std::vector<RevokeEntry> revoked;
    std::vector<TokenId> snapshot; // the full response after the step
    bool cap_hit = false;          // true on greedy-fallback steps after the cap

    bool operator==(const StepRecord&) const = default;
};

/// Fresh all-mask state at block 0. Throws config_error on invalid config,
/// vocab_error on out-of-range prompt ids.
SequenceState init_state(const std::vector<TokenId>& prompt, const DecoderConfig& config,
                         const Vocabulary& vocab);

/// Half-open [lo, hi) bounds of the current block, response-relative.
/// Throws state_error when block_index is out of range.
std::pair<int, int> current_block_bounds(const SequenceState& state);

} // namespace wino
