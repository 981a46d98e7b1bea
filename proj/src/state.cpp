#include "wino/state.hpp"

#include <string>

namespace wino {

SequenceState init_state(const std::vector<TokenId>& prompt, const DecoderConfig& config,
                         const Vocabulary& vocab) {
    config.validate();
    for (std::size_t i = 0; i < prompt.size(); ++i) {
        if (!vocab.contains_id(prompt[i])) {
            throw vocab_error("prompt id " + std::to_string(prompt[i]) + " at index " +
                              std::to_string(i) + " outside vocabulary of size " +
                              std::to_string(vocab.size()));
        }
    }
    SequenceState state;
    state.prompt = prompt;
    state.response.assign(static_cast<std::size_t>(config.gen_length), vocab.mask_id());
    state.status.assign(static_cast<std::size_t>(config.gen_length), PositionStatus::masked);
    state.drafted_at.assign(static_cast<std::size_t>(config.gen_length), -1);
    state.mask_id = vocab.mask_id();
    state.block_length = config.block_length;
    state.block_index = 0;
    state.step_count = 0;
    return state;
}

std::pair<int, int> current_block_bounds(const SequenceState& state) {
    if (state.block_index < 0 || state.block_index >= state.num_blocks()) {
        throw state_error("block_index " + std::to_string(state.block_index) +
                          " out of range for " + std::to_string(state.num_blocks()) + " blocks");
    }
    const int lo = state.block_index * state.block_length;
    return {lo, lo + state.block_length};
}

} // namespace wino
