#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <numeric>

#include "wino/extension.hpp"
#include "wino/oracle.hpp"
#include "wino/rng.hpp"

using namespace wino;
namespace fs = std::filesystem;

namespace {

Vocabulary chain_vocab(int n_states) {
    std::vector<std::string> tokens;
    for (int s = 0; s < n_states; ++s) {
        tokens.push_back("t" + std::to_string(s));
    }
    tokens.push_back("<mask>");
    return Vocabulary(std::move(tokens), n_states);
}

// Independent route: recursively walk every full assignment of the joint and
// accumulate mass per query value. Shares nothing with the implementation's
// odometer; used to cross-check exact_conditional.
std::vector<double> brute_conditional(const std::vector<double>& pi,
                                      const std::vector<std::vector<double>>& t, int total_length,
                                      const std::map<int, int>& visible_states, int query) {
    const int m = static_cast<int>(pi.size());
    std::vector<double> bucket(static_cast<std::size_t>(m), 0.0);
    std::vector<int> assign(static_cast<std::size_t>(total_length), -1);

    auto recurse = [&](auto&& self, int pos, double weight) -> void {
        if (pos == total_length) {
            bucket[static_cast<std::size_t>(assign[static_cast<std::size_t>(query)])] += weight;
            return;
        }
        const auto fixed = visible_states.find(pos);
        for (int s = 0; s < m; ++s) {
            if (fixed != visible_states.end() && fixed->second != s) {
                continue;
            }
            assign[static_cast<std::size_t>(pos)] = s;
            const double step =
                pos == 0 ? pi[static_cast<std::size_t>(s)]
                         : t[static_cast<std::size_t>(assign[static_cast<std::size_t>(pos - 1)])]
                            [static_cast<std::size_t>(s)];
            self(self, pos + 1, weight * step);
        }
        assign[static_cast<std::size_t>(pos)] = -1;
    };
    recurse(recurse, 0, 1.0);

    const double total = std::accumulate(bucket.begin(), bucket.end(), 0.0);
    for (auto& b : bucket) {
        b /= total;
    }
    return bucket;
}

MarkovJointModel two_state_model(int total_length = 3) {
    return MarkovJointModel(chain_vocab(2), {0.5, 0.5}, {{0.9, 0.1}, {0.2, 0.8}}, total_length);
}

} // namespace

TEST_CASE("construction validates distributions and capacity") {
    CHECK_THROWS_AS(MarkovJointModel(chain_vocab(2), {0.6, 0.6}, {{1, 0}, {0, 1}}, 3), parse_error);
    CHECK_THROWS_AS(MarkovJointModel(chain_vocab(2), {0.5, 0.5}, {{0.9, 0.2}, {0, 1}}, 3),
                    parse_error);
    CHECK_THROWS_AS(MarkovJointModel(chain_vocab(2), {0.5, 0.5}, {{1, 0}}, 3), shape_error);
    // 64 states at length 12 blows the 2^20 enumeration bound
    CHECK_THROWS_AS(MarkovJointModel::random(64, 12, 0), capacity_error);
    CHECK_THROWS_AS(MarkovJointModel::random(2, 13, 0), capacity_error);
    CHECK_NOTHROW(MarkovJointModel::random(2, 12, 0));
}

TEST_CASE("uniform chain is independent of any conditioning") {
    const MarkovJointModel model(chain_vocab(3), {1.0 / 3, 1.0 / 3, 1.0 / 3},
                                 {{1.0 / 3, 1.0 / 3, 1.0 / 3},
                                  {1.0 / 3, 1.0 / 3, 1.0 / 3},
                                  {1.0 / 3, 1.0 / 3, 1.0 / 3}},
                                 5);
    const auto dist = model.exact_conditional({{0, 2}, {3, 0}}, 2);
    for (int t = 0; t < 3; ++t) {
        CHECK(dist[static_cast<std::size_t>(t)] == doctest::Approx(1.0 / 3).epsilon(1e-12));
    }
    CHECK(dist[3] == 0.0);
}

TEST_CASE("deterministic cycle concentrates on the k-step successor") {
    // 0 -> 1 -> 2 -> 0 cycle
    const MarkovJointModel model(chain_vocab(3), {1.0 / 3, 1.0 / 3, 1.0 / 3},
                                 {{0, 1, 0}, {0, 0, 1}, {1, 0, 0}}, 6);
    for (int query = 1; query < 6; ++query) {
        const auto dist = model.exact_conditional({{0, 0}}, query);
        const int expected = query % 3;
        CHECK(dist[static_cast<std::size_t>(expected)] == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("two-state chain: next-step conditional reads the transition row") {
    const auto model = two_state_model();
    const auto dist = model.exact_conditional({{0, 0}}, 1);
    CHECK(dist[0] == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(dist[1] == doctest::Approx(0.1).epsilon(1e-12));

    // cross-check against the independent full enumeration
    const auto brute = brute_conditional({0.5, 0.5}, {{0.9, 0.1}, {0.2, 0.8}}, 3, {{0, 0}}, 1);
    CHECK(dist[0] == doctest::Approx(brute[0]).epsilon(1e-12));
    CHECK(dist[1] == doctest::Approx(brute[1]).epsilon(1e-12));

    // two steps out: the square of the transition matrix, [0.83, 0.17]
    const auto two_out = model.exact_conditional({{0, 0}}, 2);
    CHECK(two_out[0] == doctest::Approx(0.83).epsilon(1e-12));
    CHECK(two_out[1] == doctest::Approx(0.17).epsilon(1e-12));
}

TEST_CASE("exact_conditional matches brute enumeration on random models") {
    Rng rng(61);
    for (int trial = 0; trial < 20; ++trial) {
        const int m = rng.next_int(2, 4);
        const int n = rng.next_int(2, 6);
        const auto model = MarkovJointModel::random(m, n, 1000 + static_cast<std::uint64_t>(trial));

        std::map<int, TokenId> visible;
        std::map<int, int> visible_states;
        for (int p = 0; p < n; ++p) {
            if (rng.next_double() < 0.4 && static_cast<int>(visible.size()) < n - 1) {
                const int s = rng.next_int(0, m - 1);
                visible[p] = model.state_token(s);
                visible_states[p] = s;
            }
        }
        int query = rng.next_int(0, n - 1);
        while (visible.count(query) != 0) {
            query = rng.next_int(0, n - 1);
        }

        const auto dist = model.exact_conditional(visible, query);
        const auto brute =
            brute_conditional(model.pi(), model.transition(), n, visible_states, query);

        double total = 0.0;
        for (int s = 0; s < m; ++s) {
            const auto tok = static_cast<std::size_t>(model.state_token(s));
            CHECK(dist[tok] == doctest::Approx(brute[static_cast<std::size_t>(s)]).epsilon(1e-10));
            total += dist[tok];
        }
        CHECK(std::abs(total - 1.0) <= 1e-9);
    }
}

TEST_CASE("chain rule ties conditionals together") {
    // P(q=v | vis+e)*P(e | vis) == P(e | vis+q)*P(q=v | vis); both sides are
    // P(q=v, e | vis).
    Rng rng(62);
    for (int trial = 0; trial < 50; ++trial) {
        const int m = rng.next_int(2, 3);
        const int n = rng.next_int(3, 7);
        const auto model = MarkovJointModel::random(m, n, 2000 + static_cast<std::uint64_t>(trial));

        std::map<int, TokenId> visible;
        for (int p = 0; p < n - 2; ++p) {
            if (rng.next_double() < 0.3) {
                visible[p] = model.state_token(rng.next_int(0, m - 1));
            }
        }
        int query = rng.next_int(0, n - 1);
        while (visible.count(query) != 0) {
            query = rng.next_int(0, n - 1);
        }
        int extra = rng.next_int(0, n - 1);
        while (extra == query || visible.count(extra) != 0) {
            extra = rng.next_int(0, n - 1);
        }
        const TokenId v = model.state_token(rng.next_int(0, m - 1));
        const TokenId e = model.state_token(rng.next_int(0, m - 1));

        auto with_extra = visible;
        with_extra[extra] = e;
        auto with_query = visible;
        with_query[query] = v;

        const double lhs = model.exact_conditional(with_extra, query)[static_cast<std::size_t>(v)] *
                           model.exact_conditional(visible, extra)[static_cast<std::size_t>(e)];
        const double rhs = model.exact_conditional(with_query, extra)[static_cast<std::size_t>(e)] *
                           model.exact_conditional(visible, query)[static_cast<std::size_t>(v)];
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
    }
}

TEST_CASE("conditional input validation") {
    const auto model = two_state_model();
    CHECK_THROWS_AS(model.exact_conditional({{0, 0}}, 0), state_error);
    CHECK_THROWS_AS(model.exact_conditional({{7, 0}}, 1), state_error);
    CHECK_THROWS_AS(model.exact_conditional({{0, 2}}, 1), state_error); // mask token
    CHECK_THROWS_AS(model.exact_conditional({}, 9), state_error);
}

TEST_CASE("conditioning on an impossible event is rejected") {
    const MarkovJointModel model(chain_vocab(2), {0.5, 0.5}, {{0, 1}, {1, 0}}, 4);
    // alternating chain: positions 0 and 1 can never hold the same state
    CHECK_THROWS_AS(model.exact_conditional({{0, 0}, {1, 0}}, 2), domain_error);
}

TEST_CASE("sample_sequence is seed-deterministic") {
    const auto model = MarkovJointModel::random(3, 8, 123);
    CHECK(model.sample_sequence(7) == model.sample_sequence(7));
    // a deterministic cycle has exactly one trajectory per start
    const MarkovJointModel cycle(chain_vocab(3), {0, 0, 1}, {{0, 1, 0}, {0, 0, 1}, {1, 0, 0}}, 6);
    const auto seq = cycle.sample_sequence(42);
    CHECK(seq == std::vector<TokenId>{2, 0, 1, 2, 0, 1});
}

TEST_CASE("bigram frequencies of samples match the transition matrix") {
    const auto model = two_state_model(8);
    std::vector<std::vector<double>> counts(2, std::vector<double>(2, 0.0));
    std::vector<double> row_totals(2, 0.0);
    for (int i = 0; i < 10000; ++i) {
        const auto seq = model.sample_sequence(static_cast<std::uint64_t>(i));
        for (std::size_t p = 1; p < seq.size(); ++p) {
            const int a = model.token_state(seq[p - 1]);
            const int b = model.token_state(seq[p]);
            counts[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] += 1.0;
            row_totals[static_cast<std::size_t>(a)] += 1.0;
        }
    }
    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
            const double freq = counts[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] /
                                row_totals[static_cast<std::size_t>(a)];
            CHECK(std::abs(freq - model.transition()[static_cast<std::size_t>(a)]
                                                    [static_cast<std::size_t>(b)]) < 0.02);
        }
    }
}

TEST_CASE("log-probabilities follow the chain rule") {
    const auto model = two_state_model(4);
    const double ll = model.prefix_log_prob({0, 0, 1});
    CHECK(ll == doctest::Approx(std::log(0.5) + std::log(0.9) + std::log(0.1)).epsilon(1e-12));
    const double cond = model.conditional_log_prob({0}, {0, 1});
    CHECK(cond == doctest::Approx(std::log(0.9) + std::log(0.1)).epsilon(1e-12));
}

TEST_CASE("oracle backend: self-visibility collapses to a point mass") {
    const auto model = two_state_model();
    const OracleBackend backend(model);
    // all-true mask: the non-mask query at index 0 sees itself
    const auto dists = backend.forward({0, 2, 2}, {0, 1, 2}, AttnMask(3, 3, true));
    CHECK(dists[0][0] == 1.0f);
    CHECK(dists[0][1] == 0.0f);
    // the masked query at index 1 conditions on position 0 only
    CHECK(dists[1][0] == doctest::Approx(0.9f).epsilon(1e-6));
    CHECK(dists[1][1] == doctest::Approx(0.1f).epsilon(1e-6));
}

TEST_CASE("oracle backend: shadow extension is exactly non-interfering") {
    const auto model = MarkovJointModel::random(3, 6, 5, 0.5);
    const OracleBackend backend(model);
    const auto& vocab = backend.vocab();

    DecoderConfig config;
    config.kind = DecoderKind::wino;
    config.tau1 = 0.1f;
    config.tau2 = 0.5f;
    config.gen_length = 4;
    config.block_length = 2;
    auto state = init_state({model.state_token(0), model.state_token(1)}, config, vocab);
    state.response[0] = model.state_token(2);
    state.status[0] = PositionStatus::drafted;

    const auto ext = build_extended_sequence(state);
    const auto with_shadow = backend.forward(ext.tokens, ext.position_ids, ext.attn_mask);

    std::vector<TokenId> main_tokens(ext.tokens.begin(), ext.tokens.begin() + ext.n_main);
    std::vector<int> main_pos(ext.position_ids.begin(), ext.position_ids.begin() + ext.n_main);
    const auto main_only =
        backend.forward(main_tokens, main_pos, AttnMask(ext.n_main, ext.n_main, true));

    for (int i = 0; i < ext.n_main; ++i) {
        CHECK(with_shadow[static_cast<std::size_t>(i)] == main_only[static_cast<std::size_t>(i)]);
    }
}

TEST_CASE("oracle backend: perturbing the mirror changes nothing at the shadow slot") {
    const auto model = MarkovJointModel::random(3, 6, 6, 0.5);
    const OracleBackend backend(model);

    DecoderConfig config;
    config.kind = DecoderKind::wino;
    config.tau1 = 0.1f;
    config.tau2 = 0.5f;
    config.gen_length = 4;
    config.block_length = 2;
    auto state = init_state({model.state_token(0), model.state_token(1)}, config,
                            backend.vocab());
    state.response[0] = model.state_token(2);
    state.status[0] = PositionStatus::drafted;

    auto ext = build_extended_sequence(state);
    const int shadow_row = ext.n_main; // slot 0 mirrors response position 0
    const int mirror = ext.shadow_mirror[0];

    const auto before = backend.forward(ext.tokens, ext.position_ids, ext.attn_mask);
    ext.tokens[static_cast<std::size_t>(mirror)] = model.state_token(0);
    const auto after = backend.forward(ext.tokens, ext.position_ids, ext.attn_mask);

    CHECK(before[static_cast<std::size_t>(shadow_row)] ==
          after[static_cast<std::size_t>(shadow_row)]);
}

TEST_CASE("oracle backend: serial and parallel agree") {
    const auto model = MarkovJointModel::random(3, 7, 8);
    OracleBackend backend(model);
    const std::vector<TokenId> tokens{model.state_token(0), 3, 3, model.state_token(2), 3};
    const std::vector<int> positions{0, 1, 2, 3, 4};
    const AttnMask mask(5, 5, true);

    backend.set_parallel(true);
    const auto par = backend.forward(tokens, positions, mask);
    backend.set_parallel(false);
    const auto ser = backend.forward(tokens, positions, mask);
    CHECK(par == ser);
}

TEST_CASE("oracle backend rejects out-of-range sequence positions") {
    const auto model = two_state_model(3);
    const OracleBackend backend(model);
    CHECK_THROWS_AS(backend.forward({0, 1}, {0, 5}, AttnMask(2, 2, true)), state_error);
}

TEST_CASE("oracle files round-trip") {
    const auto model = MarkovJointModel::random(3, 6, 99, 0.7);
    const auto path = fs::temp_directory_path() / "wino_oracle_roundtrip.json";
    model.save(path);
    const auto loaded = MarkovJointModel::load(path);
    CHECK(loaded.total_length() == 6);
    CHECK(loaded.n_states() == 3);
    CHECK(loaded.pi() == model.pi());
    CHECK(loaded.transition() == model.transition());
    fs::remove(path);
}
