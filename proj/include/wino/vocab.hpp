#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "wino/errors.hpp"

namespace wino {

using TokenId = std::int32_t;

/// Token-id space with one distinguished mask token and an optional
/// end-of-text token. Ids are dense: 0..size()-1.
class Vocabulary {
public:
    Vocabulary(std::vector<std::string> tokens, TokenId mask_id,
               std::optional<TokenId> eos_id = std::nullopt)
        : tokens_(std::move(tokens)), mask_id_(mask_id), eos_id_(eos_id) {
        if (tokens_.size() < 2) {
            throw vocab_error("vocabulary needs the mask token plus at least one generable token");
        }
        if (mask_id_ < 0 || static_cast<std::size_t>(mask_id_) >= tokens_.size()) {
            throw vocab_error("mask_id out of range");
        }
        if (eos_id_) {
            if (*eos_id_ < 0 || static_cast<std::size_t>(*eos_id_) >= tokens_.size()) {
                throw vocab_error("eos_id out of range");
            }
            if (*eos_id_ == mask_id_) {
                throw vocab_error("eos_id must differ from mask_id");
            }
        }
        for (std::size_t i = 0; i < tokens_.size(); ++i) {
            auto [it, inserted] = index_.emplace(tokens_[i], static_cast<TokenId>(i));
            if (!inserted) {
                throw vocab_error("duplicate token string: \"" + tokens_[i] + "\"");
            }
        }
    }

    int size() const { return static_cast<int>(tokens_.size()); }
    TokenId mask_id() const { return mask_id_; }
    std::optional<TokenId> eos_id() const { return eos_id_; }

    const std::string& token(TokenId id) const {
        if (id < 0 || id >= size()) {
            throw vocab_error("token id " + std::to_string(id) + " out of range");
        }
        return tokens_[static_cast<std::size_t>(id)];
    }

    std::optional<TokenId> find(std::string_view text) const {
        auto it = index_.find(std::string(text));
        if (it == index_.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    bool contains_id(TokenId id) const { return id >= 0 && id < size(); }

    const std::vector<std::string>& tokens() const { return tokens_; }

private:
    std::vector<std::string> tokens_;
    TokenId mask_id_;
    std::optional<TokenId> eos_id_;
    std::unordered_map<std::string, TokenId> index_;
};

} // namespace wino
