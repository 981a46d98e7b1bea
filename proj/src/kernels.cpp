#include "wino/kernels.hpp"

#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace wino::kernels {

bool openmp_enabled() {
#ifdef _OPENMP
    return true;
#else
    return false;
#endif
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

namespace {

inline void matmul_row(const float* a, const float* b, float* out, int row, int k, int m) {
    const float* arow = a + static_cast<std::size_t>(row) * static_cast<std::size_t>(k);
    float* orow = out + static_cast<std::size_t>(row) * static_cast<std::size_t>(m);
    for (int j = 0; j < m; ++j) {
        float acc = 0.0f;
        for (int t = 0; t < k; ++t) {
            acc += arow[t] * b[static_cast<std::size_t>(t) * static_cast<std::size_t>(m) + j];
        }
        orow[j] = acc;
    }
}

inline void layer_norm_row(const float* x, const float* gain, const float* bias, float* out,
                           int row, int d) {
    constexpr float eps = 1e-5f;
    const float* xr = x + static_cast<std::size_t>(row) * static_cast<std::size_t>(d);
    float* orow = out + static_cast<std::size_t>(row) * static_cast<std::size_t>(d);
    float mean = 0.0f;
    for (int i = 0; i < d; ++i) {
        mean += xr[i];
    }
    mean /= static_cast<float>(d);
    float var = 0.0f;
    for (int i = 0; i < d; ++i) {
        const float c = xr[i] - mean;
        var += c * c;
    }
    var /= static_cast<float>(d);
    const float inv = 1.0f / std::sqrt(var + eps);
    for (int i = 0; i < d; ++i) {
        orow[i] = (xr[i] - mean) * inv * gain[i] + bias[i];
    }
}

inline void rope_row(float* x, const int* position_ids, int row, int n_heads, int head_dim,
                     const float* inv_freq) {
    const int d = n_heads * head_dim;
    const auto pos = static_cast<float>(position_ids[row]);
    float* xr = x + static_cast<std::size_t>(row) * static_cast<std::size_t>(d);
    for (int h = 0; h < n_heads; ++h) {
        float* head = xr + static_cast<std::size_t>(h) * static_cast<std::size_t>(head_dim);
        for (int t = 0; t < head_dim / 2; ++t) {
            const float angle = pos * inv_freq[t];
            const float c = std::cos(angle);
            const float s = std::sin(angle);
            const float a = head[2 * t];
            const float b = head[2 * t + 1];
            head[2 * t] = a * c - b * s;
            head[2 * t + 1] = a * s + b * c;
        }
    }
}

inline void attention_row(const float* q, const float* k, const float* v, const AttnMask& mask,
                          float* out, int query, int n, int n_heads, int head_dim) {
    const int d = n_heads * head_dim;
    const float scale = 1.0f / std::sqrt(static_cast<float>(head_dim));
    const std::uint8_t* allowed = mask.row(query);
    std::vector<float> scores(static_cast<std::size_t>(n));
    float* orow = out + static_cast<std::size_t>(query) * static_cast<std::size_t>(d);

    for (int h = 0; h < n_heads; ++h) {
        const std::size_t off = static_cast<std::size_t>(h) * static_cast<std::size_t>(head_dim);
        const float* qh = q + static_cast<std::size_t>(query) * static_cast<std::size_t>(d) + off;

        float max_score = -std::numeric_limits<float>::infinity();
        for (int j = 0; j < n; ++j) {
            if (!allowed[j]) {
                continue;
            }
            const float* kh = k + static_cast<std::size_t>(j) * static_cast<std::size_t>(d) + off;
            float dot = 0.0f;
            for (int t = 0; t < head_dim; ++t) {
                dot += qh[t] * kh[t];
            }
            const float s = dot * scale;
            scores[static_cast<std::size_t>(j)] = s;
            if (s > max_score) {
                max_score = s;
            }
        }

        float* oh = orow + off;
        for (int t = 0; t < head_dim; ++t) {
            oh[t] = 0.0f;
        }
        float denom = 0.0f;
        for (int j = 0; j < n; ++j) {
            if (!allowed[j]) {
                continue;
            }
            const float w = std::exp(scores[static_cast<std::size_t>(j)] - max_score);
            denom += w;
            const float* vh = v + static_cast<std::size_t>(j) * static_cast<std::size_t>(d) + off;
            for (int t = 0; t < head_dim; ++t) {
                oh[t] += w * vh[t];
            }
        }
        const float inv = 1.0f / denom;
        for (int t = 0; t < head_dim; ++t) {
            oh[t] *= inv;
        }
    }
}

inline float gelu_one(float x) {
    return 0.5f * x * (1.0f + std::erf(x * 0.70710678118654752f));
}

inline void softmax_row(float* x, int row, int m, int banned_col) {
    float* xr = x + static_cast<std::size_t>(row) * static_cast<std::size_t>(m);
    if (banned_col >= 0) {
        xr[banned_col] = -std::numeric_limits<float>::infinity();
    }
    float max_v = -std::numeric_limits<float>::infinity();
    for (int j = 0; j < m; ++j) {
        if (xr[j] > max_v) {
            max_v = xr[j];
        }
    }
    float denom = 0.0f;
    for (int j = 0; j < m; ++j) {
        const float e = std::exp(xr[j] - max_v);
        xr[j] = e;
        denom += e;
    }
    const float inv = 1.0f / denom;
    for (int j = 0; j < m; ++j) {
        xr[j] *= inv;
    }
}

} // namespace

void matmul(const float* a, const float* b, float* out, int n, int k, int m) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        matmul_row(a, b, out, i, k, m);
    }
}

void layer_norm(const float* x, const float* gain, const float* bias, float* out, int n, int d) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        layer_norm_row(x, gain, bias, out, i, d);
    }
}

void rope(float* x, const int* position_ids, int n, int n_heads, int head_dim,
          const float* inv_freq) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        rope_row(x, position_ids, i, n_heads, head_dim, inv_freq);
    }
}

void attention(const float* q, const float* k, const float* v, const AttnMask& mask, float* out,
               int n, int n_heads, int head_dim) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        attention_row(q, k, v, mask, out, i, n, n_heads, head_dim);
    }
}

void add_inplace(float* x, const float* y, std::int64_t n) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        x[i] += y[i];
    }
}

void gelu(float* x, std::int64_t n) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        x[i] = gelu_one(x[i]);
    }
}

void masked_softmax_rows(float* x, int n, int m, int banned_col) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        softmax_row(x, i, m, banned_col);
    }
}

namespace ref {

void matmul(const float* a, const float* b, float* out, int n, int k, int m) {
    for (int i = 0; i < n; ++i) {
        matmul_row(a, b, out, i, k, m);
    }
}

void layer_norm(const float* x, const float* gain, const float* bias, float* out, int n, int d) {
    for (int i = 0; i < n; ++i) {
        layer_norm_row(x, gain, bias, out, i, d);
    }
}

void rope(float* x, const int* position_ids, int n, int n_heads, int head_dim,
          const float* inv_freq) {
    for (int i = 0; i < n; ++i) {
        rope_row(x, position_ids, i, n_heads, head_dim, inv_freq);
    }
}

void attention(const float* q, const float* k, const float* v, const AttnMask& mask, float* out,
               int n, int n_heads, int head_dim) {
    for (int i = 0; i < n; ++i) {
        attention_row(q, k, v, mask, out, i, n, n_heads, head_dim);
    }
}

void add_inplace(float* x, const float* y, std::int64_t n) {
    for (std::int64_t i = 0; i < n; ++i) {
        x[i] += y[i];
    }
}

void gelu(float* x, std::int64_t n) {
    for (std::int64_t i = 0; i < n; ++i) {
        x[i] = gelu_one(x[i]);
    }
}

void masked_softmax_rows(float* x, int n, int m, int banned_col) {
    for (int i = 0; i < n; ++i) {
        softmax_row(x, i, m, banned_col);
    }
}

} // namespace ref

const Ops& parallel_ops() {
    static const Ops ops{matmul, layer_norm, rope, attention, add_inplace, gelu,
                         masked_softmax_rows};
    return ops;
}

const Ops& serial_ops() {
    static const Ops ops{ref::matmul, ref::layer_norm, ref::rope, ref::attention,
                         ref::add_inplace, ref::gelu, ref::masked_softmax_rows};
    return ops;
}

} // namespace wino::kernels
