#pragma once

#include <cstddef>

namespace sofa::kernels {

// Thread count used by the OpenMP paths. 0 = runtime default.
void set_threads(int n);
int threads();

// c[n,m] = a[n,k] * b[k,m].  The parallel path splits over output rows, so
// each element is accumulated serially and results are bitwise identical to
// the serial reference regardless of thread count.
void matmul_serial(const double* a, const double* b, double* c,
                   std::size_t n, std::size_t k, std::size_t m);
void matmul(const double* a, const double* b, double* c,
            std::size_t n, std::size_t k, std::size_t m);

// c[n,m] += a[n,k] * b[k,m]
void matmul_acc_serial(const double* a, const double* b, double* c,
                       std::size_t n, std::size_t k, std::size_t m);
void matmul_acc(const double* a, const double* b, double* c,
                std::size_t n, std::size_t k, std::size_t m);

// c[n,m] += a[k,n]^T-style products used by the backward pass:
// grad_a[n,k] += adj[n,m] * b[k,m]^T
void matmul_bt_acc_serial(const double* adj, const double* b, double* grad_a,
                          std::size_t n, std::size_t k, std::size_t m);
void matmul_bt_acc(const double* adj, const double* b, double* grad_a,
                   std::size_t n, std::size_t k, std::size_t m);
// grad_b[k,m] += a[n,k]^T * adj[n,m]
void matmul_at_acc_serial(const double* a, const double* adj, double* grad_b,
                          std::size_t n, std::size_t k, std::size_t m);
void matmul_at_acc(const double* a, const double* adj, double* grad_b,
                   std::size_t n, std::size_t k, std::size_t m);

}  // namespace sofa::kernels
