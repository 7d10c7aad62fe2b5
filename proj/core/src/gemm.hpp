#pragma once

#include <cstddef>
#include <vector>

namespace bordernet::detail {

// C[M,N] (+)= op(A) * B with row-major operands.
// op(A) is A[M,K], or A^T when `a_transposed` (A then stored as [K,M]).
// Each output row is accumulated in double in ascending k order, so the
// result is independent of vector width. Zero entries of A are skipped;
// post-ReLU activations and max-pool gradients are mostly zeros.
// C may be float or double; a double C carries sums across calls unrounded.
template <class Out>
void gemm(bool a_transposed, std::size_t M, std::size_t N, std::size_t K, const float* A, const float* B, Out* C,
          bool accumulate) {
  std::vector<double> acc(N);
  for (std::size_t i = 0; i < M; ++i) {
    Out* c = C + i * N;
    if (accumulate) {
      for (std::size_t j = 0; j < N; ++j) acc[j] = c[j];
    } else {
      for (std::size_t j = 0; j < N; ++j) acc[j] = 0.0;
    }
    for (std::size_t k = 0; k < K; ++k) {
      const float a = a_transposed ? A[k * M + i] : A[i * K + k];
      if (a == 0.0f) continue;
      const double ad = a;
      const float* b = B + k * N;
      double* out = acc.data();
      for (std::size_t j = 0; j < N; ++j) out[j] += ad * static_cast<double>(b[j]);
    }
    for (std::size_t j = 0; j < N; ++j) c[j] = static_cast<Out>(acc[j]);
  }
}

// out[cols,rows] = in[rows,cols]^T
inline void transpose(std::size_t rows, std::size_t cols, const float* in, float* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[c * rows + r] = in[r * cols + c];
  }
}

}  // namespace bordernet::detail
