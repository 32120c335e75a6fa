#pragma once

namespace mprkit::nn {

// Row-major matrix product: C[m x n] = op(A) * op(B) (accumulating into C
// when `accumulate`), where op(A) is [m x k] and op(B) is [k x n]. A and B
// are stored with their natural (pre-transpose) leading dimensions. Backed
// by CBLAS dgemm when available, otherwise a straightforward loop; both are
// deterministic for fixed inputs within one build.
void matmul(bool trans_a, bool trans_b, int m, int n, int k, const double* a, const double* b,
            double* c, bool accumulate = false);

}  // namespace mprkit::nn
