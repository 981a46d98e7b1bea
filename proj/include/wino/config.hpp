#pragma once

#include <cstdint>
#include <string>

#include "wino/errors.hpp"

namespace wino {

enum class DecoderKind {
    greedy,            // unmask the single most confident position per step
    naive_parallel,    // unmask a fixed number of top-confidence positions per step
    wino,              // threshold draft + shadow-block verify in one pass
    wino_greedy_equiv, // test configuration: wino machinery, forced-progress-only
                       // drafting and verification disabled; must trace-match greedy
};

const char* decoder_kind_name(DecoderKind kind);
DecoderKind decoder_kind_from_name(const std::string& name);

struct DecoderConfig {
    DecoderKind kind = DecoderKind::wino;
    int gen_length = 256;  // L
    int block_length = 128; // L_b, must divide L
    float tau1 = 0.6f;      // draft threshold (strict >)
    float tau2 = 0.9f;      // verify threshold (strict <); 0 disables verification
    int parallel_k = 4;     // tokens per step, naive_parallel only
    bool forced_progress = true;
    int max_steps_per_block = 0; // 0 -> 4 * block_length
    std::uint64_t seed = 0;

    int step_cap() const { return max_steps_per_block > 0 ? max_steps_per_block : 4 * block_length; }
    int num_blocks() const { return gen_length / block_length; }

    // Throws config_error on any violated invariant.
    void validate() const;
};

inline void DecoderConfig::validate() const {
    if (gen_length <= 0) {
        throw config_error("gen_length must be positive");
    }
    if (block_length <= 0) {
        throw config_error("block_length must be positive");
    }
    if (gen_length % block_length != 0) {
        throw config_error("block_length " + std::to_string(block_length) +
                           " must divide gen_length " + std::to_string(gen_length));
    }
    if (tau1 < 0.0f || tau1 > 1.0f) {
        throw config_error("tau1 must lie in [0,1]");
    }
    if (tau2 < 0.0f || tau2 > 1.0f) {
        throw config_error("tau2 must lie in [0,1]");
    }
    // tau2 == 0 turns verification off (the only-draft ablation), which makes
    // the ordering requirement vacuous.
    if (kind == DecoderKind::wino && tau2 > 0.0f && !(tau1 < tau2)) {
        throw config_error("wino requires tau1 < tau2 (got tau1=" + std::to_string(tau1) +
                           ", tau2=" + std::to_string(tau2) + ")");
    }
    if (kind == DecoderKind::naive_parallel && parallel_k <= 0) {
        throw config_error("parallel_k must be positive");
    }
    if (step_cap() < block_length) {
        throw config_error("max_steps_per_block must be at least block_length");
    }
}

inline const char* decoder_kind_name(DecoderKind kind) {
    switch (kind) {
        case DecoderKind::greedy: return "greedy";
        case DecoderKind::naive_parallel: return "parallel";
        case DecoderKind::wino: return "wino";
        case DecoderKind::wino_greedy_equiv: return "wino-greedy-equiv";
    }
    return "unknown";
}

inline DecoderKind decoder_kind_from_name(const std::string& name) {
    if (name == "greedy") return DecoderKind::greedy;
    if (name == "parallel" || name == "naive_parallel") return DecoderKind::naive_parallel;
    if (name == "wino") return DecoderKind::wino;
    if (name == "wino-greedy-equiv" || name == "wino_greedy_equiv") return DecoderKind::wino_greedy_equiv;
    throw config_error("unknown decoder: " + name);
}

} // namespace wino
