#include "wino/extension.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <unordered_set>

namespace wino {

std::size_t AttnMask::count_false() const {
    return data_.size() - static_cast<std::size_t>(
                              std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

int ExtendedSequence::shadow_of_main(int abs_index) const {
    for (std::size_t s = 0; s < shadow_mirror.size(); ++s) {
        if (shadow_mirror[s] == abs_index) {
            return n_main + static_cast<int>(s);
        }
    }
    return -1;
}

AttnMask build_attention_mask(int n_main, int block_length, const std::vector<int>& shadow_mirror) {
    if (static_cast<int>(shadow_mirror.size()) != block_length) {
        throw layout_error("mirror map covers " + std::to_string(shadow_mirror.size()) +
                           " slots, expected " + std::to_string(block_length));
    }
    std::unordered_set<int> seen;
    for (int m : shadow_mirror) {
        if (m < 0 || m >= n_main) {
            throw layout_error("mirror index " + std::to_string(m) + " outside main range [0, " +
                               std::to_string(n_main) + ")");
        }
        if (!seen.insert(m).second) {
            throw layout_error("duplicate mirror index " + std::to_string(m));
        }
    }

    const int total = n_main + block_length;
    AttnMask mask(total, total, true);
    // Main queries never see the shadow block, so appending it cannot change
    // their outputs.
    for (int q = 0; q < n_main; ++q) {
        for (int s = 0; s < block_length; ++s) {
            mask.set(q, n_main + s, false);
        }
    }
    // Each shadow query is denied exactly its mirror; it still sees all other
    // main tokens and every shadow slot, itself included.
    for (int s = 0; s < block_length; ++s) {
        mask.set(n_main + s, shadow_mirror[static_cast<std::size_t>(s)], false);
    }
    return mask;
}

ExtendedSequence build_extended_sequence(const SequenceState& state) {
    const auto [lo, hi] = current_block_bounds(state); // validates block_index
    const int n_main = state.main_length();
    const int block_len = state.block_length;

    ExtendedSequence ext;
    ext.n_main = n_main;
    ext.tokens.reserve(static_cast<std::size_t>(n_main + block_len));
    ext.tokens.insert(ext.tokens.end(), state.prompt.begin(), state.prompt.end());
    ext.tokens.insert(ext.tokens.end(), state.response.begin(), state.response.end());
    ext.tokens.insert(ext.tokens.end(), static_cast<std::size_t>(block_len), state.mask_id);

    ext.position_ids.resize(static_cast<std::size_t>(n_main + block_len));
    std::iota(ext.position_ids.begin(), ext.position_ids.begin() + n_main, 0);

    ext.shadow_mirror.resize(static_cast<std::size_t>(block_len));
    for (int s = 0; s < block_len; ++s) {
        const int mirror = state.prompt_length() + lo + s;
        ext.shadow_mirror[static_cast<std::size_t>(s)] = mirror;
        ext.position_ids[static_cast<std::size_t>(n_main + s)] = mirror;
    }

    ext.attn_mask = build_attention_mask(n_main, block_len, ext.shadow_mirror);
    return ext;
}

} // namespace wino
