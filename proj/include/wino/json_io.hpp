#pragma once

#include <json.hpp>

#include "wino/vocab.hpp"

namespace wino {

// Shared vocab section of model and oracle files:
// {"tokens": [...], "mask_token": "...", "eos_token": "..."} (eos optional).
Vocabulary parse_vocab_json(const nlohmann::ordered_json& node);
nlohmann::ordered_json vocab_json(const Vocabulary& vocab);

} // namespace wino
