#pragma once

#include <cstdint>
#include <vector>

#include "wino/errors.hpp"
#include "wino/state.hpp"

namespace wino {

/// Dense boolean attention matrix. Entry (q, k) is true iff query q may
/// attend key k. Row-major bytes so kernels can walk rows directly.
class AttnMask {
public:
    AttnMask() = default;
    AttnMask(int rows, int cols, bool value)
        : rows_(rows), cols_(cols),
          data_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols),
                value ? std::uint8_t{1} : std::uint8_t{0}) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    bool at(int q, int k) const {
        return data_[static_cast<std::size_t>(q) * static_cast<std::size_t>(cols_) +
                     static_cast<std::size_t>(k)] != 0;
    }
    void set(int q, int k, bool v) {
        data_[static_cast<std::size_t>(q) * static_cast<std::size_t>(cols_) +
              static_cast<std::size_t>(k)] = v ? 1 : 0;
    }
    const std::uint8_t* row(int q) const {
        return data_.data() + static_cast<std::size_t>(q) * static_cast<std::size_t>(cols_);
    }

    std::size_t count_false() const;

    bool operator==(const AttnMask&) const = default;

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<std::uint8_t> data_;
};

/// Main sequence (prompt + response) with the all-mask shadow block appended.
/// Shadow slot s mirrors the current block's s-th token: same position id,
/// and the one attention edge the slot is denied.
struct ExtendedSequence {
    std::vector<TokenId> tokens;     // length n_main + block_length
    std::vector<int> position_ids;   // same length
    std::vector<int> shadow_mirror;  // slot -> absolute index of its mirror in tokens
    int n_main = 0;
    AttnMask attn_mask;

    int block_length() const { return static_cast<int>(shadow_mirror.size()); }
    int total_length() const { return static_cast<int>(tokens.size()); }

    // Mirror lookups, both directions.
    int mirror_of_shadow(int slot) const { return shadow_mirror[static_cast<std::size_t>(slot)]; }
    int shadow_of_main(int abs_index) const; // -1 when abs_index has no shadow twin
};

/// Appends the shadow block to prompt+response, assigns position ids
/// (absolute indices for the main part, mirrored current-block ids for the
/// shadow slots) and builds the attention mask.
ExtendedSequence build_extended_sequence(const SequenceState& state);

/// Mask rules: main queries attend exactly the main keys; shadow queries
/// attend everything except their mirror column. Throws layout_error when
/// shadow_mirror has the wrong size, duplicates, or out-of-range entries.
AttnMask build_attention_mask(int n_main, int block_length, const std::vector<int>& shadow_mirror);

} // namespace wino
