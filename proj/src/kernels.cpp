#include "sofa/kernels.hpp"

#include <cstring>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sofa::kernels {

namespace {
int g_threads = 0;
}

void set_threads(int n) { g_threads = n < 0 ? 0 : n; }

int threads() {
#ifdef _OPENMP
    return g_threads > 0 ? g_threads : omp_get_max_threads();
#else
    return 1;
#endif
}

// Parallelism is only worth it for reasonably sized products.
static constexpr std::size_t kParallelCutoff = 16 * 1024;

void matmul_acc_serial(const double* a, const double* b, double* c,
                       std::size_t n, std::size_t k, std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) {
        const double* ai = a + i * k;
        double* ci = c + i * m;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ai[p];
            if (av == 0.0) continue;
            const double* bp = b + p * m;
            for (std::size_t j = 0; j < m; ++j) ci[j] += av * bp[j];
        }
    }
}

void matmul_acc(const double* a, const double* b, double* c,
                std::size_t n, std::size_t k, std::size_t m) {
#ifdef _OPENMP
    if (n * k * m >= kParallelCutoff && n > 1) {
#pragma omp parallel for schedule(static) num_threads(threads())
        for (long long i = 0; i < (long long)n; ++i)
            matmul_acc_serial(a + i * k, b, c + i * m, 1, k, m);
        return;
    }
#endif
    matmul_acc_serial(a, b, c, n, k, m);
}

void matmul_serial(const double* a, const double* b, double* c,
                   std::size_t n, std::size_t k, std::size_t m) {
    std::memset(c, 0, n * m * sizeof(double));
    matmul_acc_serial(a, b, c, n, k, m);
}

void matmul(const double* a, const double* b, double* c,
            std::size_t n, std::size_t k, std::size_t m) {
    std::memset(c, 0, n * m * sizeof(double));
    matmul_acc(a, b, c, n, k, m);
}

void matmul_bt_acc_serial(const double* adj, const double* b, double* grad_a,
                          std::size_t n, std::size_t k, std::size_t m) {
    // grad_a[i,p] += sum_j adj[i,j] * b[p,j]
    for (std::size_t i = 0; i < n; ++i) {
        const double* ri = adj + i * m;
        double* gi = grad_a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double* bp = b + p * m;
            double acc = 0.0;
            for (std::size_t j = 0; j < m; ++j) acc += ri[j] * bp[j];
            gi[p] += acc;
        }
    }
}

void matmul_bt_acc(const double* adj, const double* b, double* grad_a,
                   std::size_t n, std::size_t k, std::size_t m) {
#ifdef _OPENMP
    if (n * k * m >= kParallelCutoff && n > 1) {
#pragma omp parallel for schedule(static) num_threads(threads())
        for (long long i = 0; i < (long long)n; ++i)
            matmul_bt_acc_serial(adj + i * m, b, grad_a + i * k, 1, k, m);
        return;
    }
#endif
    matmul_bt_acc_serial(adj, b, grad_a, n, k, m);
}

void matmul_at_acc_serial(const double* a, const double* adj, double* grad_b,
                          std::size_t n, std::size_t k, std::size_t m) {
    // grad_b[p,j] += sum_i a[i,p] * adj[i,j]
    for (std::size_t i = 0; i < n; ++i) {
        const double* ai = a + i * k;
        const double* ri = adj + i * m;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ai[p];
            if (av == 0.0) continue;
            double* gp = grad_b + p * m;
            for (std::size_t j = 0; j < m; ++j) gp[j] += av * ri[j];
        }
    }
}

void matmul_at_acc(const double* a, const double* adj, double* grad_b,
                   std::size_t n, std::size_t k, std::size_t m) {
#ifdef _OPENMP
    if (n * k * m >= kParallelCutoff && k > 1) {
        // split over rows of grad_b: each thread owns columns p of a
#pragma omp parallel for schedule(static) num_threads(threads())
        for (long long p = 0; p < (long long)k; ++p) {
            double* gp = grad_b + p * m;
            for (std::size_t i = 0; i < n; ++i) {
                const double av = a[i * k + p];
                if (av == 0.0) continue;
                const double* ri = adj + i * m;
                for (std::size_t j = 0; j < m; ++j) gp[j] += av * ri[j];
            }
        }
        return;
    }
#endif
    matmul_at_acc_serial(a, adj, grad_b, n, k, m);
}

}  // namespace sofa::kernels
