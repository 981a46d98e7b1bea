#pragma once

#include <stdexcept>

namespace wino {

// Invalid decoder configuration: threshold ordering, block layout, step caps.
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Token ids outside the vocabulary, duplicate token strings, bad special ids.
struct vocab_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Sequence state misuse: block index out of range, stepping a finished block.
struct state_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dimension mismatches between tokens, position ids, masks and weights.
struct shape_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Attention mask rejected before a forward pass (e.g. a row with no true entry).
struct mask_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Inconsistent shadow-mirror layout.
struct layout_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Oracle enumeration bound exceeded.
struct capacity_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Nonpositive metric inputs, conditioning on zero-probability events.
struct domain_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed model, oracle, dataset or trace files.
struct parse_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Filesystem failures surfaced verbatim.
struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace wino
