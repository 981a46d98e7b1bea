// Serial reference vs OpenMP kernels, plus end-to-end forward passes on
// both backends. Run with --benchmark_filter=forward to compare just the
// transformer paths.

#include <benchmark/benchmark.h>

#include <numeric>
#include <vector>

#include "wino/decoders.hpp"
#include "wino/kernels.hpp"
#include "wino/oracle.hpp"
#include "wino/rng.hpp"
#include "wino/transformer.hpp"

using namespace wino;

namespace {

std::vector<float> random_vec(Rng& rng, std::size_t n) {
    std::vector<float> out(n);
    for (auto& x : out) {
        x = static_cast<float>(rng.next_gaussian());
    }
    return out;
}

Vocabulary bench_vocab(int generable = 31) {
    std::vector<std::string> tokens;
    for (int i = 0; i < generable; ++i) {
        tokens.push_back("t" + std::to_string(i));
    }
    tokens.push_back("<mask>");
    return Vocabulary(std::move(tokens), generable);
}

void bm_matmul(benchmark::State& state, bool parallel) {
    const int n = static_cast<int>(state.range(0));
    Rng rng(1);
    const auto a = random_vec(rng, static_cast<std::size_t>(n) * n);
    const auto b = random_vec(rng, static_cast<std::size_t>(n) * n);
    std::vector<float> out(static_cast<std::size_t>(n) * n);
    for (auto _ : state) {
        if (parallel) {
            kernels::matmul(a.data(), b.data(), out.data(), n, n, n);
        } else {
            kernels::ref::matmul(a.data(), b.data(), out.data(), n, n, n);
        }
        benchmark::DoNotOptimize(out.data());
        benchmark::ClobberMemory();
    }
}

void bm_attention(benchmark::State& state, bool parallel) {
    const int n = static_cast<int>(state.range(0));
    const int n_heads = 4;
    const int head_dim = 16;
    const int d = n_heads * head_dim;
    Rng rng(2);
    const auto q = random_vec(rng, static_cast<std::size_t>(n) * d);
    const auto k = random_vec(rng, static_cast<std::size_t>(n) * d);
    const auto v = random_vec(rng, static_cast<std::size_t>(n) * d);
    const AttnMask mask(n, n, true);
    std::vector<float> out(static_cast<std::size_t>(n) * d);
    for (auto _ : state) {
        if (parallel) {
            kernels::attention(q.data(), k.data(), v.data(), mask, out.data(), n, n_heads,
                               head_dim);
        } else {
            kernels::ref::attention(q.data(), k.data(), v.data(), mask, out.data(), n, n_heads,
                                    head_dim);
        }
        benchmark::DoNotOptimize(out.data());
        benchmark::ClobberMemory();
    }
}

void bm_transformer_forward(benchmark::State& state, bool parallel) {
    const int n = static_cast<int>(state.range(0));
    const auto vocab = bench_vocab();
    auto model = TinyTransformer::random(vocab, {2, 4, 64, 128, 10000.0f}, 3);
    model.set_parallel(parallel);

    Rng rng(4);
    std::vector<TokenId> tokens;
    for (int i = 0; i < n; ++i) {
        tokens.push_back(rng.next_int(0, vocab.size() - 1));
    }
    std::vector<int> positions(static_cast<std::size_t>(n));
    std::iota(positions.begin(), positions.end(), 0);
    const AttnMask mask(n, n, true);

    for (auto _ : state) {
        auto dists = model.forward(tokens, positions, mask);
        benchmark::DoNotOptimize(dists.data());
    }
}

void bm_oracle_forward(benchmark::State& state, bool parallel) {
    const auto model = MarkovJointModel::random(3, 10, 5, 0.7);
    OracleBackend backend(model);
    backend.set_parallel(parallel);

    const TokenId mask_id = backend.vocab().mask_id();
    std::vector<TokenId> tokens{model.state_token(0), model.state_token(1), mask_id, mask_id,
                                mask_id, mask_id, mask_id, mask_id, mask_id, mask_id};
    std::vector<int> positions(tokens.size());
    std::iota(positions.begin(), positions.end(), 0);
    const AttnMask mask(static_cast<int>(tokens.size()), static_cast<int>(tokens.size()), true);

    for (auto _ : state) {
        auto dists = backend.forward(tokens, positions, mask);
        benchmark::DoNotOptimize(dists.data());
    }
}

void bm_wino_decode(benchmark::State& state, bool parallel) {
    const auto vocab = bench_vocab();
    auto model = TinyTransformer::random(vocab, {2, 4, 64, 128, 10000.0f}, 6);
    model.set_parallel(parallel);

    DecoderConfig config;
    config.kind = DecoderKind::wino;
    config.gen_length = static_cast<int>(state.range(0));
    config.block_length = config.gen_length / 2;
    config.tau1 = 0.1f;
    config.tau2 = 0.2f;

    for (auto _ : state) {
        auto result = run_decode({1, 2, 3}, model, config);
        benchmark::DoNotOptimize(result.final_response.data());
    }
}

} // namespace

BENCHMARK_CAPTURE(bm_matmul, serial, false)->Arg(64)->Arg(192);
BENCHMARK_CAPTURE(bm_matmul, openmp, true)->Arg(64)->Arg(192);
BENCHMARK_CAPTURE(bm_attention, serial, false)->Arg(128)->Arg(384);
BENCHMARK_CAPTURE(bm_attention, openmp, true)->Arg(128)->Arg(384);
BENCHMARK_CAPTURE(bm_transformer_forward, serial, false)->Arg(64)->Arg(256);
BENCHMARK_CAPTURE(bm_transformer_forward, openmp, true)->Arg(64)->Arg(256);
BENCHMARK_CAPTURE(bm_oracle_forward, serial, false);
BENCHMARK_CAPTURE(bm_oracle_forward, openmp, true);
BENCHMARK_CAPTURE(bm_wino_decode, serial, false)->Arg(32);
BENCHMARK_CAPTURE(bm_wino_decode, openmp, true)->Arg(32);

BENCHMARK_MAIN();
