#include "wino/decoders.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <numeric>
#include <string>

#include "wino/extension.hpp"

namespace wino {

namespace {

std::vector<std::vector<float>> main_forward(const SequenceState& state,
                                             const ModelBackend& backend) {
    const int n = state.main_length();
    std::vector<TokenId> tokens;
    tokens.reserve(static_cast<std::size_t>(n));
    tokens.insert(tokens.end(), state.prompt.begin(), state.prompt.end());
    tokens.insert(tokens.end(), state.response.begin(), state.response.end());
    std::vector<int> position_ids(static_cast<std::size_t>(n));
    std::iota(position_ids.begin(), position_ids.end(), 0);
    return backend.forward(tokens, position_ids, AttnMask(n, n, true));
}

bool block_has_mask(const SequenceState& state, int lo, int hi) {
    for (int p = lo; p < hi; ++p) {
        if (state.is_masked(p)) {
            return true;
        }
    }
    return false;
}

void apply_step(SequenceState& state, StepRecord& record) {
    ++state.step_count;
    record.step = state.step_count;
    record.block = state.block_index;
    for (const auto& r : record.revoked) {
        state.response[static_cast<std::size_t>(r.position)] = state.mask_id;
        state.status[static_cast<std::size_t>(r.position)] = PositionStatus::masked;
        state.drafted_at[static_cast<std::size_t>(r.position)] = -1;
    }
    for (const auto& d : record.drafted) {
        state.response[static_cast<std::size_t>(d.position)] = d.token;
        state.status[static_cast<std::size_t>(d.position)] = PositionStatus::drafted;
        state.drafted_at[static_cast<std::size_t>(d.position)] = state.step_count;
    }
    record.snapshot = state.response;
}

} // namespace

StepRecord greedy_step(SequenceState& state, const ModelBackend& backend) {
    const auto [lo, hi] = current_block_bounds(state);
    if (!block_has_mask(state, lo, hi)) {
        throw state_error("greedy step: current block has no masked position");
    }
    const auto dists = main_forward(state, backend);

    int best_pos = -1;
    Candidate best{};
    for (int p = lo; p < hi; ++p) {
        if (!state.is_masked(p)) {
            continue;
        }
        const auto cand = top_candidate(dists[static_cast<std::size_t>(state.prompt_length() + p)]);
        if (best_pos < 0 || cand.probability > best.probability) {
            best_pos = p;
            best = cand;
        }
    }

    StepRecord record;
    record.drafted.push_back({best_pos, best.token, best.probability});
    apply_step(state, record);
    return record;
}

StepRecord naive_parallel_step(SequenceState& state, const ModelBackend& backend, int k) {
    if (k <= 0) {
        throw config_error("parallel_k must be positive");
    }
    const auto [lo, hi] = current_block_bounds(state);
    if (!block_has_mask(state, lo, hi)) {
        throw state_error("parallel step: current block has no masked position");
    }
    const auto dists = main_forward(state, backend);

    std::vector<DraftEntry> candidates;
    for (int p = lo; p < hi; ++p) {
        if (!state.is_masked(p)) {
            continue;
        }
        const auto cand = top_candidate(dists[static_cast<std::size_t>(state.prompt_length() + p)]);
        candidates.push_back({p, cand.token, cand.probability});
    }
    std::sort(candidates.begin(), candidates.end(), [](const DraftEntry& a, const DraftEntry& b) {
        if (a.confidence != b.confidence) {
            return a.confidence > b.confidence;
        }
        return a.position < b.position;
    });
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(k), candidates.size());
    candidates.resize(take);
    std::sort(candidates.begin(), candidates.end(),
              [](const DraftEntry& a, const DraftEntry& b) { return a.position < b.position; });

    StepRecord record;
    record.drafted = std::move(candidates);
    apply_step(state, record);
    return record;
}

StepRecord wino_step(SequenceState& state, const ModelBackend& backend, float tau1, float tau2,
                     bool forced_progress) {
    const auto [lo, hi] = current_block_bounds(state);
    bool any_masked = false;
    bool any_pending = false;
    for (int p = lo; p < hi; ++p) {
        if (state.is_masked(p)) {
            any_masked = true;
        } else if (state.status[static_cast<std::size_t>(p)] == PositionStatus::drafted) {
            any_pending = true;
        }
    }
    if (!any_masked && !any_pending) {
        throw state_error("wino step: current block has nothing to draft or verify");
    }

    const auto ext = build_extended_sequence(state);
    const auto dists = backend.forward(ext.tokens, ext.position_ids, ext.attn_mask);

    // Both rules read the pre-step state; a token drafted in this very step
    // is never verified before the next one.
    StepRecord record;
    int best_pos = -1;
    Candidate best{};
    for (int p = lo; p < hi; ++p) {
        const auto abs_index = static_cast<std::size_t>(state.prompt_length() + p);
        if (state.is_masked(p)) {
            const auto cand = top_candidate(dists[abs_index]);
            if (cand.probability > tau1) {
                record.drafted.push_back({p, cand.token, cand.probability});
            }
            if (best_pos < 0 || cand.probability > best.probability) {
                best_pos = p;
                best = cand;
            }
        } else if (state.status[static_cast<std::size_t>(p)] == PositionStatus::drafted) {
            const int slot = p - lo;
            const TokenId held = state.response[static_cast<std::size_t>(p)];
            const float score = dists[static_cast<std::size_t>(ext.n_main + slot)]
                                     [static_cast<std::size_t>(held)];
            if (score < tau2) {
                record.revoked.push_back({p, held, score});
            }
        }
    }
    if (forced_progress && record.drafted.empty() && any_masked) {
        record.drafted.push_back({best_pos, best.token, best.probability});
    }

    apply_step(state, record);
    return record;
}

std::vector<StepRecord> run_block(SequenceState& state, const ModelBackend& backend,
                                  const DecoderConfig& config) {
    const auto [lo, hi] = current_block_bounds(state);
    std::vector<StepRecord> records;
    int steps_in_block = 0;

    while (block_has_mask(state, lo, hi)) {
        StepRecord record;
        if (steps_in_block >= config.step_cap()) {
            // Anti-oscillation safeguard: verification off, one token per
            // step, so the block finishes within block_length more steps.
            record = greedy_step(state, backend);
            record.cap_hit = true;
        } else {
            switch (config.kind) {
                case DecoderKind::greedy:
                    record = greedy_step(state, backend);
                    break;
                case DecoderKind::naive_parallel:
                    record = naive_parallel_step(state, backend, config.parallel_k);
                    break;
                case DecoderKind::wino:
                    record = wino_step(state, backend, config.tau1, config.tau2,
                                       config.forced_progress);
                    break;
                case DecoderKind::wino_greedy_equiv:
                    // Drafting by forced progress only, verification disabled:
                    // must reproduce the greedy trace exactly.
                    record = wino_step(state, backend,
                                       std::numeric_limits<float>::infinity(), 0.0f, true);
                    break;
            }
        }
        ++steps_in_block;
        records.push_back(std::move(record));
    }

    for (int p = lo; p < hi; ++p) {
        state.status[static_cast<std::size_t>(p)] = PositionStatus::settled;
    }
    ++state.block_index;
    return records;
}

DecodeResult run_decode(const std::vector<TokenId>& prompt, const ModelBackend& backend,
                        const DecoderConfig& config) {
    SequenceState state = init_state(prompt, config, backend.vocab());

    DecodeResult result;
    const auto t0 = std::chrono::steady_clock::now();
    for (int b = 0; b < config.num_blocks(); ++b) {
        auto records = run_block(state, backend, config);
        result.trace.insert(result.trace.end(), std::make_move_iterator(records.begin()),
                            std::make_move_iterator(records.end()));
    }
    const auto t1 = std::chrono::steady_clock::now();

    for (int p = 0; p < state.gen_length(); ++p) {
        if (state.is_masked(p)) {
            throw state_error("decode finished with a masked position at " + std::to_string(p));
        }
    }
    result.final_response = state.response;
    result.stats.steps = state.step_count;
    result.stats.tokens_generated = config.gen_length;
    result.stats.wall_time_seconds =
        std::max(std::chrono::duration<double>(t1 - t0).count(), 1e-9);
    return result;
}

} // namespace wino
