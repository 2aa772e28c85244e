// Times the OpenMP kernels against the serial reference implementations and
// checks that both produce bit-identical results. Exit code 1 on any mismatch,
// so this doubles as a standalone consistency check.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "sgym/nn.hpp"
#include "sgym/rng.hpp"
#include "sgym/tensor.hpp"

using sgym::Rng;
using sgym::Tensor;

namespace {

bool g_all_equal = true;

void fill(Tensor& t, Rng& rng) {
    for (double& x : t.data) x = rng.uniform(-1.0, 1.0);
}

bool bits_equal(const Tensor& a, const Tensor& b) {
    return a.shape == b.shape &&
           std::memcmp(a.data.data(), b.data.data(),
                       a.data.size() * sizeof(double)) == 0;
}

// Runs fn repeatedly until ~0.3 s has elapsed; returns mean seconds per call.
double time_call(const std::function<void()>& fn) {
    using clock = std::chrono::steady_clock;
    fn();  // warm-up
    int reps = 1;
    for (;;) {
        auto t0 = clock::now();
        for (int i = 0; i < reps; ++i) fn();
        double s = std::chrono::duration<double>(clock::now() - t0).count();
        if (s >= 0.3 || reps >= (1 << 20)) return s / reps;
        reps *= 2;
    }
}

void report(const std::string& name, double serial_s, double omp_s, bool equal) {
    g_all_equal = g_all_equal && equal;
    std::printf("%-28s %10.3f us %10.3f us   x%-6.2f %s\n", name.c_str(),
                serial_s * 1e6, omp_s * 1e6, serial_s / omp_s,
                equal ? "bit-equal" : "MISMATCH");
}

void bench_conv3d(const std::string& tag, int W, int T, int L, int C, int O,
                  int KW, int KT, int KL, Rng& rng) {
    Tensor in({W, T, L, C}), w({O, KW, KT, KL, C}), b({O});
    fill(in, rng);
    fill(w, rng);
    fill(b, rng);
    Tensor out_r({W - KW + 1, T - KT + 1, L - KL + 1, O}), out_o = out_r;
    double sr = time_call([&] { sgym::nn::ref::conv3d_forward(in, w, b, out_r); });
    double so = time_call([&] { sgym::nn::conv3d_forward(in, w, b, out_o); });
    report("conv3d fwd " + tag, sr, so, bits_equal(out_r, out_o));

    Tensor dout = out_r;
    fill(dout, rng);
    Tensor din_r = in, din_o = in;
    Tensor dw_r = w, dw_o = w, db_r = b, db_o = b;
    double br = time_call([&] {
        dw_r.zero();
        db_r.zero();
        sgym::nn::ref::conv3d_backward(in, w, dout, din_r, dw_r, db_r);
    });
    double bo = time_call([&] {
        dw_o.zero();
        db_o.zero();
        sgym::nn::conv3d_backward(in, w, dout, din_o, dw_o, db_o);
    });
    report("conv3d bwd " + tag, br, bo,
           bits_equal(din_r, din_o) && bits_equal(dw_r, dw_o) && bits_equal(db_r, db_o));
}

void bench_conv1d(const std::string& tag, int T, int C, int O, int K, Rng& rng) {
    Tensor in({T, C}), w({O, K, C}), b({O});
    fill(in, rng);
    fill(w, rng);
    fill(b, rng);
    Tensor out_r({T - K + 1, O}), out_o = out_r;
    double sr = time_call([&] { sgym::nn::ref::conv1d_forward(in, w, b, out_r); });
    double so = time_call([&] { sgym::nn::conv1d_forward(in, w, b, out_o); });
    report("conv1d fwd " + tag, sr, so, bits_equal(out_r, out_o));

    Tensor dout = out_r;
    fill(dout, rng);
    Tensor din_r = in, din_o = in, dw_r = w, dw_o = w, db_r = b, db_o = b;
    double br = time_call([&] {
        dw_r.zero();
        db_r.zero();
        sgym::nn::ref::conv1d_backward(in, w, dout, din_r, dw_r, db_r);
    });
    double bo = time_call([&] {
        dw_o.zero();
        db_o.zero();
        sgym::nn::conv1d_backward(in, w, dout, din_o, dw_o, db_o);
    });
    report("conv1d bwd " + tag, br, bo,
           bits_equal(din_r, din_o) && bits_equal(dw_r, dw_o) && bits_equal(db_r, db_o));
}

void bench_dense(const std::string& tag, int N, int O, Rng& rng) {
    Tensor in({N}), w({O, N}), b({O});
    fill(in, rng);
    fill(w, rng);
    fill(b, rng);
    Tensor out_r({O}), out_o({O});
    double sr = time_call([&] { sgym::nn::ref::dense_forward(in, w, b, out_r); });
    double so = time_call([&] { sgym::nn::dense_forward(in, w, b, out_o); });
    report("dense  fwd " + tag, sr, so, bits_equal(out_r, out_o));

    Tensor dout = out_r;
    fill(dout, rng);
    Tensor din_r = in, din_o = in, dw_r = w, dw_o = w, db_r = b, db_o = b;
    double br = time_call([&] {
        dw_r.zero();
        db_r.zero();
        sgym::nn::ref::dense_backward(in, w, dout, din_r, dw_r, db_r);
    });
    double bo = time_call([&] {
        dw_o.zero();
        db_o.zero();
        sgym::nn::dense_backward(in, w, dout, din_o, dw_o, db_o);
    });
    report("dense  bwd " + tag, br, bo,
           bits_equal(din_r, din_o) && bits_equal(dw_r, dw_o) && bits_equal(db_r, db_o));
}

}  // namespace

int main() {
    int threads = 1;
#ifdef _OPENMP
    threads = omp_get_max_threads();
#endif
    std::printf("OpenMP threads: %d\n", threads);
    std::printf("%-28s %13s %13s   %-7s %s\n", "kernel", "serial", "openmp",
                "speedup", "check");

    Rng rng(20260823);
    // Shapes used by the Q-network on the 120x51 observation.
    bench_conv3d("book", 12, 10, 10, 2, 8, 2, 3, 3, rng);
    bench_conv1d("trade", 120, 11, 16, 5, rng);
    bench_dense("fc", 13120, 100, rng);
    // Larger shapes where the parallel loops have room to pay off.
    bench_conv3d("big", 24, 20, 20, 4, 16, 3, 5, 5, rng);
    bench_conv1d("big", 1024, 16, 32, 9, rng);
    bench_dense("big", 8192, 512, rng);

    if (!g_all_equal) {
        std::printf("FAILURE: OpenMP and serial kernels disagree\n");
        return 1;
    }
    std::printf("all kernels bit-equal across implementations\n");
    return 0;
}
