#include <doctest.h>

#include "wino/extension.hpp"
#include "wino/rng.hpp"

using namespace wino;

namespace {

Vocabulary small_vocab(int generable = 8) {
    std::vector<std::string> tokens;
    for (int i = 0; i < generable; ++i) {
        tokens.push_back("t" + std::to_string(i));
    }
    tokens.push_back("<mask>");
    return Vocabulary(std::move(tokens), generable);
}

SequenceState make_state(int prompt_len, int gen_len, int block_len, int block_index) {
    const auto vocab = small_vocab();
    DecoderConfig config;
    config.kind = DecoderKind::greedy;
    config.gen_length = gen_len;
    config.block_length = block_len;
    std::vector<TokenId> prompt(static_cast<std::size_t>(prompt_len), 1);
    auto state = init_state(prompt, config, vocab);
    // settle everything before the target block so the state stays legal
    for (int p = 0; p < block_index * block_len; ++p) {
        state.response[static_cast<std::size_t>(p)] = 2;
        state.status[static_cast<std::size_t>(p)] = PositionStatus::settled;
    }
    state.block_index = block_index;
    return state;
}

} // namespace

TEST_CASE("shadow slots carry the current block's position ids") {
    // prompt length 3, first block of length 4: slot 3 mirrors absolute
    // index 6 and must carry position id 6.
    const auto ext = build_extended_sequence(make_state(3, 8, 4, 0));
    CHECK(ext.n_main == 11);
    CHECK(ext.total_length() == 15);
    CHECK(ext.position_ids[static_cast<std::size_t>(ext.n_main) + 3] == 6);
    CHECK(ext.mirror_of_shadow(3) == 6);
    CHECK(ext.shadow_of_main(6) == ext.n_main + 3);
}

TEST_CASE("smallest layout: empty prompt, one-token response") {
    const auto ext = build_extended_sequence(make_state(0, 1, 1, 0));
    CHECK(ext.tokens.size() == 2);
    CHECK(ext.position_ids == std::vector<int>{0, 0});
    CHECK(ext.shadow_mirror == std::vector<int>{0});
    CHECK(ext.shadow_of_main(0) == 1);
}

TEST_CASE("second block mirrors, hand-enumerated") {
    // prompt 3, L=4, L_b=2, block 1: current block sits at absolute 5 and 6,
    // so shadow position ids are [5, 6] and mirrors are those indices.
    const auto ext = build_extended_sequence(make_state(3, 4, 2, 1));
    CHECK(ext.n_main == 7);
    CHECK(ext.position_ids[7] == 5);
    CHECK(ext.position_ids[8] == 6);
    CHECK(ext.shadow_mirror == std::vector<int>{5, 6});
    // shadow block itself is entirely mask
    CHECK(ext.tokens[7] == 8);
    CHECK(ext.tokens[8] == 8);
}

TEST_CASE("mask rules for a 5+2 layout") {
    const auto mask = build_attention_mask(5, 2, {3, 4});
    REQUIRE(mask.rows() == 7);

    // every main row: false exactly at the two shadow columns
    for (int q = 0; q < 5; ++q) {
        int falses = 0;
        for (int k = 0; k < 7; ++k) {
            if (!mask.at(q, k)) {
                ++falses;
                CHECK(k >= 5);
            }
        }
        CHECK(falses == 2);
    }
    // every shadow row: false exactly at its mirror
    for (int s = 0; s < 2; ++s) {
        int falses = 0;
        for (int k = 0; k < 7; ++k) {
            if (!mask.at(5 + s, k)) {
                ++falses;
                CHECK(k == 3 + s);
            }
        }
        CHECK(falses == 1);
    }
    CHECK(mask.count_false() == 5 * 2 + 2);
}

TEST_CASE("smallest mask layout spelled out") {
    const auto mask = build_attention_mask(2, 1, {1});
    // main rows attend exactly the main columns
    CHECK(mask.at(0, 0));
    CHECK(mask.at(0, 1));
    CHECK(!mask.at(0, 2));
    CHECK(mask.at(1, 0));
    CHECK(mask.at(1, 1));
    CHECK(!mask.at(1, 2));
    // shadow row: [true at prompt, false at mirror, true at itself]
    CHECK(mask.at(2, 0));
    CHECK(!mask.at(2, 1));
    CHECK(mask.at(2, 2));
}

TEST_CASE("mask layout errors") {
    CHECK_THROWS_AS(build_attention_mask(5, 2, {3}), layout_error);
    CHECK_THROWS_AS(build_attention_mask(5, 2, {3, 3}), layout_error);
    CHECK_THROWS_AS(build_attention_mask(5, 2, {3, 5}), layout_error);
    CHECK_THROWS_AS(build_attention_mask(5, 2, {-1, 4}), layout_error);
}

TEST_CASE("mask structure laws over random layouts") {
    Rng rng(41);
    for (int trial = 0; trial < 50; ++trial) {
        const int block_len = rng.next_int(1, 12);
        const int extra_main = rng.next_int(0, 20);
        const int n_main = block_len + extra_main;
        const int lo = rng.next_int(0, n_main - block_len);
        std::vector<int> mirrors(static_cast<std::size_t>(block_len));
        for (int s = 0; s < block_len; ++s) {
            mirrors[static_cast<std::size_t>(s)] = lo + s;
        }
        const auto mask = build_attention_mask(n_main, block_len, mirrors);

        // zero-count law
        CHECK(mask.count_false() ==
              static_cast<std::size_t>(n_main) * static_cast<std::size_t>(block_len) +
                  static_cast<std::size_t>(block_len));

        // main-block closure
        for (int q = 0; q < n_main; ++q) {
            for (int k = 0; k < n_main; ++k) {
                CHECK(mask.at(q, k));
            }
        }
        // mirror exclusivity
        for (int s = 0; s < block_len; ++s) {
            for (int k = 0; k < mask.cols(); ++k) {
                CHECK(mask.at(n_main + s, k) == (k != mirrors[static_cast<std::size_t>(s)]));
            }
        }
        // dual attendance: every current-block column other than the mirror
        // is seen by the shadow row both directly and through its twin slot
        for (int s = 0; s < block_len; ++s) {
            for (int c = 0; c < block_len; ++c) {
                if (c == s) {
                    continue;
                }
                const int col = mirrors[static_cast<std::size_t>(c)];
                CHECK(mask.at(n_main + s, col));
                CHECK(mask.at(n_main + s, n_main + c));
            }
        }
    }
}
