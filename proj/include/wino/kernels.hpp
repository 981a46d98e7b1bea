#pragma once

#include <cstdint>
#include <vector>

#include "wino/extension.hpp"

namespace wino::kernels {

// Row-parallel OpenMP kernels. Every output row is produced by one thread
// with the same inner loop as the serial reference, so the two variants are
// bitwise identical (asserted in tests, timed against each other in the
// benchmark target).

bool openmp_enabled();
int max_threads();

// out[n,m] = a[n,k] . b[k,m], row-major.
void matmul(const float* a, const float* b, float* out, int n, int k, int m);

// out[n,d]: per-row normalization with gain/bias, eps 1e-5.
void layer_norm(const float* x, const float* gain, const float* bias, float* out, int n, int d);

// In-place rotary encoding of adjacent pairs, driven by position_ids.
// inv_freq has head_dim/2 entries.
void rope(float* x, const int* position_ids, int n, int n_heads, int head_dim,
          const float* inv_freq);

// out[n,h*d]: per-head masked attention; disallowed keys are skipped, which
// is exactly a -inf pre-softmax logit.
void attention(const float* q, const float* k, const float* v, const AttnMask& mask, float* out,
               int n, int n_heads, int head_dim);

// x += y over n elements.
void add_inplace(float* x, const float* y, std::int64_t n);

// In-place exact gelu.
void gelu(float* x, std::int64_t n);

// Per-row softmax over m columns; banned_col (if >= 0) is forced to
// probability zero.
void masked_softmax_rows(float* x, int n, int m, int banned_col);

// Serial reference implementations, kept for parity tests and benchmarks.
namespace ref {
void matmul(const float* a, const float* b, float* out, int n, int k, int m);
void layer_norm(const float* x, const float* gain, const float* bias, float* out, int n, int d);
void rope(float* x, const int* position_ids, int n, int n_heads, int head_dim,
          const float* inv_freq);
void attention(const float* q, const float* k, const float* v, const AttnMask& mask, float* out,
               int n, int n_heads, int head_dim);
void add_inplace(float* x, const float* y, std::int64_t n);
void gelu(float* x, std::int64_t n);
void masked_softmax_rows(float* x, int n, int m, int banned_col);
} // namespace ref

// Dispatch table so callers pick the execution mode once.
struct Ops {
    void (*matmul)(const float*, const float*, float*, int, int, int);
    void (*layer_norm)(const float*, const float*, const float*, float*, int, int);
    void (*rope)(float*, const int*, int, int, int, const float*);
    void (*attention)(const float*, const float*, const float*, const AttnMask&, float*, int, int,
                      int);
    void (*add_inplace)(float*, const float*, std::int64_t);
    void (*gelu)(float*, std::int64_t);
    void (*masked_softmax_rows)(float*, int, int, int);
};

const Ops& parallel_ops();
const Ops& serial_ops();

} // namespace wino::kernels
