// Compares the serial reference kernels against the OpenMP paths and checks
// that both produce bitwise-identical output. Run with no arguments; an
// optional argument overrides the repeat count.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <vector>

#include "sofa/kernels.hpp"
#include "sofa/models.hpp"
#include "sofa/rng.hpp"

using namespace sofa;

namespace {

double now_s() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

template <class F>
double time_best(F&& f, int repeats) {
    double best = 1e300;
    for (int r = 0; r < repeats; ++r) {
        const double t0 = now_s();
        f();
        best = std::min(best, now_s() - t0);
    }
    return best;
}

void bench_matmul(std::size_t n, std::size_t k, std::size_t m, int repeats) {
    Rng rng(n * 31 + k * 7 + m);
    std::vector<double> a(n * k), b(k * m), c_serial(n * m), c_par(n * m);
    for (auto& x : a) x = rng.normal();
    for (auto& x : b) x = rng.normal();

    const double ts = time_best([&] { kernels::matmul_serial(a.data(), b.data(), c_serial.data(), n, k, m); },
                                repeats);
    const double tp = time_best([&] { kernels::matmul(a.data(), b.data(), c_par.data(), n, k, m); },
                                repeats);
    const bool identical = c_serial == c_par;
    const double gflops = 2.0 * double(n) * double(k) * double(m) * 1e-9;
    std::printf("matmul %5zux%-5zux%-5zu  serial %8.3f ms (%5.2f GF/s)  omp %8.3f ms (%5.2f GF/s)  speedup %5.2fx  bitwise %s\n",
                n, k, m, ts * 1e3, gflops / ts, tp * 1e3, gflops / tp, ts / tp,
                identical ? "ok" : "MISMATCH");
    if (!identical) std::exit(1);
}

// forward pass of the GRU classifier on a full batch; exercises the tape's
// matmul mix with realistically small inner dimensions
void bench_model(std::size_t batch, std::size_t t_len, std::size_t d_in, std::size_t d_enc,
                 int repeats) {
    models::ModelConfig mc;
    mc.d_in = d_in;
    mc.t_len = t_len;
    mc.d_enc = d_enc;
    mc.d_emb = d_enc;
    mc.n_classes = 10;
    auto model = models::ClassifierModel::init(mc, 1);
    Rng rng(2);
    Tensor x = Tensor::zeros({batch, t_len, d_in});
    for (auto& v : x.v) v = rng.normal();

    const double t = time_best([&] { (void)model.forward(x); }, repeats);
    std::printf("gru-forward batch=%-4zu T=%-4zu d_in=%-4zu d_enc=%-4zu  %8.3f ms  (%d thread%s)\n",
                batch, t_len, d_in, d_enc, t * 1e3, kernels::threads(),
                kernels::threads() == 1 ? "" : "s");
}

}  // namespace

int main(int argc, char** argv) {
    const int repeats = argc > 1 ? std::atoi(argv[1]) : 5;
    std::printf("threads: %d, repeats: %d (best-of shown)\n\n", kernels::threads(), repeats);

    bench_matmul(64, 64, 64, repeats);
    bench_matmul(256, 256, 256, repeats);
    bench_matmul(512, 512, 512, repeats);
    bench_matmul(1200, 128, 128, repeats);   // adaptation-scale batch
    bench_matmul(1200, 168, 128, repeats);   // GRU input block at full scale
    std::printf("\n");

    bench_model(256, 32, 16, 32, repeats);   // desk scale
    bench_model(128, 160, 128, 128, std::max(1, repeats / 2));  // full scale
    return 0;
}
