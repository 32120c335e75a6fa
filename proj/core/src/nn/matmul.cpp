#include "mprkit/nn/matmul.hpp"

#include <cstring>
#include <mutex>

#if defined(MPRKIT_USE_CBLAS)
#include <cblas.h>

// Present when the linked CBLAS is OpenBLAS; weak so other BLAS libraries
// still link. Training parallelism lives at the split level, so BLAS itself
// must stay single-threaded.
extern "C" void openblas_set_num_threads(int) __attribute__((weak));
#endif

namespace mprkit::nn {

void matmul(bool trans_a, bool trans_b, int m, int n, int k, const double* a, const double* b,
            double* c, bool accumulate) {
#if defined(MPRKIT_USE_CBLAS)
  static std::once_flag once;
  std::call_once(once, [] {
    if (openblas_set_num_threads) openblas_set_num_threads(1);
  });
  cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, m, n, k, 1.0, a, trans_a ? m : k, b,
              trans_b ? k : n, accumulate ? 1.0 : 0.0, c, n);
#else
  if (!accumulate) std::memset(c, 0, sizeof(double) * static_cast<size_t>(m) * n);
  // c[i][j] += a(i,l) * b(l,j); loop order keeps the b row hot in cache.
  for (int i = 0; i < m; ++i) {
    double* crow = c + static_cast<size_t>(i) * n;
    for (int l = 0; l < k; ++l) {
      const double av = trans_a ? a[static_cast<size_t>(l) * m + i] : a[static_cast<size_t>(i) * k + l];
      if (av == 0.0) continue;
      if (trans_b) {
        for (int j = 0; j < n; ++j) crow[j] += av * b[static_cast<size_t>(j) * k + l];
      } else {
        const double* brow = b + static_cast<size_t>(l) * n;
        for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  }
#endif
}

}  // namespace mprkit::nn
