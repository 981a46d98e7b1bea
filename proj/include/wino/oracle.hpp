#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

#include "wino/backend.hpp"

namespace wino {

/// First-order Markov joint distribution over the non-mask tokens, small
/// enough that any conditional is computed by plain enumeration of every
/// completion. Serves as exact ground truth for decoder properties.
///
/// Chain states are the non-mask token ids in increasing id order.
class MarkovJointModel {
public:
    /// pi over states (sums to 1 within 1e-9), row-stochastic transition
    /// matrix, sequence length N. Enforces N <= 12 and states^N <= 2^20;
    /// violations raise capacity_error.
    MarkovJointModel(Vocabulary vocab, std::vector<double> pi,
                     std::vector<std::vector<double>> transition, int total_length);

    /// Random model with strictly positive entries, deterministic per seed.
    /// peak > 0 gives every transition row a dominant entry of that mass,
    /// which makes sequences predictable from context.
    static MarkovJointModel random(int n_states, int total_length, std::uint64_t seed,
                                   double peak = 0.0);

    int total_length() const { return total_length_; }
    int n_states() const { return n_states_; }
    const Vocabulary& vocab() const { return vocab_; }

    TokenId state_token(int s) const { return state_tokens_[static_cast<std::size_t>(s)]; }
    int token_state(TokenId id) const; // -1 for the mask token

    /// P(x_query = v | x_p = visible[p] for all p), indexed by token id with
    /// the mask entry zero. Enumerates all completions of the unassigned
    /// positions, weighted by pi and the transition matrix. Conditioning on a
    /// zero-probability assignment raises domain_error.
    std::vector<double> exact_conditional(const std::map<int, TokenId>& visible, int query) const;

    /// Length-N draw from the joint; deterministic per seed.
    std::vector<TokenId> sample_sequence(std::uint64_t seed) const;

    /// log P(x_0..x_{n-1}) of a prefix (n <= N) by the chain rule.
    double prefix_log_prob(const std::vector<TokenId>& prefix) const;

    /// log P(response | prompt) where response directly follows the prompt.
    double conditional_log_prob(const std::vector<TokenId>& prompt,
                                const std::vector<TokenId>& response) const;

    const std::vector<double>& pi() const { return pi_; }
    const std::vector<std::vector<double>>& transition() const { return transition_; }

    static MarkovJointModel load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

private:
    Vocabulary vocab_;
    std::vector<double> pi_;
    std::vector<std::vector<double>> transition_;
    int total_length_;
    int n_states_;
    std::vector<TokenId> state_tokens_; // state -> token id
    std::vector<int> token_states_;     // token id -> state, -1 for mask
};

/// ModelBackend view of the joint: an attention-mask row is read as the
/// visibility set, so the distribution at a query is the exact conditional
/// given the non-mask tokens at its attendable key positions. A query that
/// can see a token at its own sequence position collapses to a point mass.
/// Non-interference and no-leakage therefore hold with zero tolerance.
class OracleBackend final : public ModelBackend {
public:
    explicit OracleBackend(MarkovJointModel model) : model_(std::move(model)) {}

    const Vocabulary& vocab() const override { return model_.vocab(); }
    const MarkovJointModel& model() const { return model_; }

    std::vector<std::vector<float>> forward(const std::vector<TokenId>& tokens,
                                            const std::vector<int>& position_ids,
                                            const AttnMask& attn_mask) const override;

    void set_parallel(bool parallel) { parallel_ = parallel; }

private:
    MarkovJointModel model_;
    bool parallel_ = true;
};

} // namespace wino
