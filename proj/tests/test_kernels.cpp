#include <doctest.h>

#include <vector>

#include "wino/kernels.hpp"
#include "wino/rng.hpp"

using namespace wino;

namespace {

std::vector<float> random_vec(Rng& rng, std::size_t n) {
    std::vector<float> out(n);
    for (auto& x : out) {
        x = static_cast<float>(rng.next_gaussian());
    }
    return out;
}

AttnMask random_mask(Rng& rng, int n) {
    AttnMask mask(n, n, false);
    for (int q = 0; q < n; ++q) {
        bool any = false;
        for (int k = 0; k < n; ++k) {
            const bool allow = rng.next_double() < 0.6;
            mask.set(q, k, allow);
            any = any || allow;
        }
        if (!any) {
            mask.set(q, rng.next_int(0, n - 1), true);
        }
    }
    return mask;
}

} // namespace

TEST_CASE("matmul matches a hand computation") {
    // [1 2; 3 4] . [5 6; 7 8]
    const std::vector<float> a{1, 2, 3, 4};
    const std::vector<float> b{5, 6, 7, 8};
    std::vector<float> out(4);
    kernels::ref::matmul(a.data(), b.data(), out.data(), 2, 2, 2);
    CHECK(out == std::vector<float>{19, 22, 43, 50});
}

TEST_CASE("openmp kernels are bitwise identical to the serial reference") {
    Rng rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = rng.next_int(1, 40);
        const int n_heads = rng.next_int(1, 4);
        const int head_dim = 2 * rng.next_int(1, 8);
        const int d = n_heads * head_dim;
        const int m = rng.next_int(1, 30);

        const auto a = random_vec(rng, static_cast<std::size_t>(n) * d);
        const auto b = random_vec(rng, static_cast<std::size_t>(d) * m);
        std::vector<float> out_par(static_cast<std::size_t>(n) * m);
        std::vector<float> out_ser(out_par.size());
        kernels::matmul(a.data(), b.data(), out_par.data(), n, d, m);
        kernels::ref::matmul(a.data(), b.data(), out_ser.data(), n, d, m);
        CHECK(out_par == out_ser);

        const auto gain = random_vec(rng, static_cast<std::size_t>(d));
        const auto bias = random_vec(rng, static_cast<std::size_t>(d));
        std::vector<float> ln_par(a.size());
        std::vector<float> ln_ser(a.size());
        kernels::layer_norm(a.data(), gain.data(), bias.data(), ln_par.data(), n, d);
        kernels::ref::layer_norm(a.data(), gain.data(), bias.data(), ln_ser.data(), n, d);
        CHECK(ln_par == ln_ser);

        std::vector<int> positions(static_cast<std::size_t>(n));
        for (auto& p : positions) {
            p = rng.next_int(0, 500);
        }
        std::vector<float> inv_freq(static_cast<std::size_t>(head_dim / 2));
        for (std::size_t t = 0; t < inv_freq.size(); ++t) {
            inv_freq[t] = std::pow(10000.0f, -2.0f * static_cast<float>(t) / head_dim);
        }
        auto rope_par = a;
        auto rope_ser = a;
        kernels::rope(rope_par.data(), positions.data(), n, n_heads, head_dim, inv_freq.data());
        kernels::ref::rope(rope_ser.data(), positions.data(), n, n_heads, head_dim,
                           inv_freq.data());
        CHECK(rope_par == rope_ser);

        const auto q = random_vec(rng, a.size());
        const auto kk = random_vec(rng, a.size());
        const auto v = random_vec(rng, a.size());
        const auto mask = random_mask(rng, n);
        std::vector<float> at_par(a.size());
        std::vector<float> at_ser(a.size());
        kernels::attention(q.data(), kk.data(), v.data(), mask, at_par.data(), n, n_heads,
                           head_dim);
        kernels::ref::attention(q.data(), kk.data(), v.data(), mask, at_ser.data(), n, n_heads,
                                head_dim);
        CHECK(at_par == at_ser);

        auto gelu_par = a;
        auto gelu_ser = a;
        kernels::gelu(gelu_par.data(), static_cast<std::int64_t>(gelu_par.size()));
        kernels::ref::gelu(gelu_ser.data(), static_cast<std::int64_t>(gelu_ser.size()));
        CHECK(gelu_par == gelu_ser);

        auto soft_par = random_vec(rng, static_cast<std::size_t>(n) * m);
        auto soft_ser = soft_par;
        const int banned = rng.next_int(0, m - 1);
        kernels::masked_softmax_rows(soft_par.data(), n, m, banned);
        kernels::ref::masked_softmax_rows(soft_ser.data(), n, m, banned);
        CHECK(soft_par == soft_ser);
    }
}

TEST_CASE("softmax rows are normalized and the banned column is zero") {
    Rng rng(3);
    auto x = random_vec(rng, 5 * 7);
    kernels::masked_softmax_rows(x.data(), 5, 7, 2);
    for (int i = 0; i < 5; ++i) {
        float total = 0.0f;
        for (int j = 0; j < 7; ++j) {
            total += x[static_cast<std::size_t>(i) * 7 + j];
        }
        CHECK(x[static_cast<std::size_t>(i) * 7 + 2] == 0.0f);
        CHECK(total == doctest::Approx(1.0f).epsilon(1e-5));
    }
}

TEST_CASE("rope at position zero is the identity") {
    Rng rng(5);
    const int n = 4;
    const int head_dim = 8;
    auto x = random_vec(rng, static_cast<std::size_t>(n) * head_dim);
    const auto orig = x;
    std::vector<int> positions(n, 0);
    std::vector<float> inv_freq(head_dim / 2, 1.0f);
    kernels::rope(x.data(), positions.data(), n, 1, head_dim, inv_freq.data());
    CHECK(x == orig);
}
