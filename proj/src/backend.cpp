#include "wino/backend.hpp"

#include <string>

namespace wino {

Candidate top_candidate(std::span<const float> dist) {
    if (dist.empty()) {
        throw shape_error("top_candidate on an empty distribution");
    }
    Candidate best{0, dist[0]};
    for (std::size_t i = 1; i < dist.size(); ++i) {
        if (dist[i] > best.probability) {
            best.token = static_cast<TokenId>(i);
            best.probability = dist[i];
        }
    }
    return best;
}

void validate_forward_inputs(const Vocabulary& vocab, const std::vector<TokenId>& tokens,
                             const std::vector<int>& position_ids, const AttnMask& attn_mask) {
    const auto n = tokens.size();
    if (position_ids.size() != n) {
        throw shape_error("position_ids length " + std::to_string(position_ids.size()) +
                          " does not match token count " + std::to_string(n));
    }
    if (attn_mask.rows() != static_cast<int>(n) || attn_mask.cols() != static_cast<int>(n)) {
        throw shape_error("attention mask is " + std::to_string(attn_mask.rows()) + "x" +
                          std::to_string(attn_mask.cols()) + ", expected " + std::to_string(n) +
                          "x" + std::to_string(n));
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!vocab.contains_id(tokens[i])) {
            throw vocab_error("token id " + std::to_string(tokens[i]) + " at index " +
                              std::to_string(i) + " outside vocabulary");
        }
        if (position_ids[i] < 0) {
            throw shape_error("negative position id at index " + std::to_string(i));
        }
    }
    for (int q = 0; q < attn_mask.rows(); ++q) {
        bool any = false;
        for (int k = 0; k < attn_mask.cols(); ++k) {
            if (attn_mask.at(q, k)) {
                any = true;
                break;
            }
        }
        if (!any) {
            throw mask_error("attention mask row " + std::to_string(q) + " has no true entry");
        }
    }
}

} // namespace wino
