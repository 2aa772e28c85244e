#include "sgym/nn.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include "sgym/errors.hpp"

namespace sgym::nn {

namespace {

constexpr int64_t kParallelMin = 4096;  // below this, OpenMP overhead dominates

void check_conv3d(const Tensor& in, const Tensor& w, const Tensor& out) {
    if (in.rank() != 4 || w.rank() != 5 || out.rank() != 4)
        throw ShapeMismatch("conv3d: bad tensor ranks");
    if (w.shape[4] != in.shape[3]) throw ShapeMismatch("conv3d: channel mismatch");
    const int ow = in.shape[0] - w.shape[1] + 1;
    const int ot = in.shape[1] - w.shape[2] + 1;
    const int ol = in.shape[2] - w.shape[3] + 1;
    if (ow < 1 || ot < 1 || ol < 1) throw ShapeMismatch("conv3d: kernel larger than input");
    if (out.shape != std::vector<int>{ow, ot, ol, w.shape[0]})
        throw ShapeMismatch("conv3d: bad output shape");
}

void check_conv1d(const Tensor& in, const Tensor& w, const Tensor& out) {
    if (in.rank() != 2 || w.rank() != 3 || out.rank() != 2)
        throw ShapeMismatch("conv1d: bad tensor ranks");
    if (w.shape[2] != in.shape[1]) throw ShapeMismatch("conv1d: channel mismatch");
    const int ot = in.shape[0] - w.shape[1] + 1;
    if (ot < 1) throw ShapeMismatch("conv1d: kernel larger than input");
    if (out.shape != std::vector<int>{ot, w.shape[0]})
        throw ShapeMismatch("conv1d: bad output shape");
}

void check_dense(const Tensor& in, const Tensor& w, const Tensor& out) {
    if (in.rank() != 1 || w.rank() != 2 || out.rank() != 1)
        throw ShapeMismatch("dense: bad tensor ranks");
    if (w.shape[1] != in.shape[0]) throw ShapeMismatch("dense: input width mismatch");
    if (out.shape[0] != w.shape[0]) throw ShapeMismatch("dense: output width mismatch");
}

void check_bias(const Tensor& b, int channels, const char* what) {
    if (b.rank() != 1 || b.shape[0] != channels)
        throw ShapeMismatch(std::string(what) + ": bad bias shape");
}

}  // namespace

// ---------------------------------------------------------------------------
// OpenMP kernels. One thread owns each output cell (gather form) and the
// inner summation order is fixed, so results are identical at any thread
// count and bit-equal to the serial reference below.
// ---------------------------------------------------------------------------

void conv3d_forward(const Tensor& in, const Tensor& w, const Tensor& b, Tensor& out) {
    check_conv3d(in, w, out);
    check_bias(b, w.shape[0], "conv3d");
    const int T = in.shape[1], L = in.shape[2], C = in.shape[3];
    const int O = w.shape[0], KW = w.shape[1], KT = w.shape[2], KL = w.shape[3];
    const int OW = out.shape[0], OT = out.shape[1], OL = out.shape[2];
    const double* ind = in.data.data();
    const double* wd = w.data.data();
    const double* bd = b.data.data();
    double* od = out.data.data();
    const int64_t n = static_cast<int64_t>(OW) * OT * OL * O;
#pragma omp parallel for if (n >= kParallelMin) schedule(static)
    for (int64_t idx = 0; idx < n; ++idx) {
        int64_t rem = idx;
        const int o = static_cast<int>(rem % O);
        rem /= O;
        const int ol = static_cast<int>(rem % OL);
        rem /= OL;
        const int ot = static_cast<int>(rem % OT);
        const int ow = static_cast<int>(rem / OT);
        double acc = 0.0;
        for (int kw = 0; kw < KW; ++kw)
            for (int kt = 0; kt < KT; ++kt)
                for (int kl = 0; kl < KL; ++kl) {
                    const double* ip =
                        ind + ((static_cast<int64_t>(ow + kw) * T + (ot + kt)) * L + (ol + kl)) * C;
                    const double* wp =
                        wd + (((static_cast<int64_t>(o) * KW + kw) * KT + kt) * KL + kl) * C;
                    for (int c = 0; c < C; ++c) acc += ip[c] * wp[c];
                }
        od[idx] = acc + bd[o];
    }
}

void conv3d_backward(const Tensor& in, const Tensor& w, const Tensor& dout, Tensor& din,
                     Tensor& dw, Tensor& db) {
    check_conv3d(in, w, dout);
    if (din.shape != in.shape || dw.shape != w.shape)
        throw ShapeMismatch("conv3d backward: gradient shape mismatch");
    check_bias(db, w.shape[0], "conv3d backward");
    const int W = in.shape[0], T = in.shape[1], L = in.shape[2], C = in.shape[3];
    const int O = w.shape[0], KW = w.shape[1], KT = w.shape[2], KL = w.shape[3];
    const int OW = dout.shape[0], OT = dout.shape[1], OL = dout.shape[2];
    const double* ind = in.data.data();
    const double* wd = w.data.data();
    const double* gd = dout.data.data();

    // d_input: gather over the kernel positions that cover each input cell.
    {
        double* dp = din.data.data();
        const int64_t n = static_cast<int64_t>(W) * T * L * C;
#pragma omp parallel for if (n >= kParallelMin) schedule(static)
        for (int64_t idx = 0; idx < n; ++idx) {
            int64_t rem = idx;
            const int c = static_cast<int>(rem % C);
            rem /= C;
            const int il = static_cast<int>(rem % L);
            rem /= L;
            const int it = static_cast<int>(rem % T);
            const int iw = static_cast<int>(rem / T);
            double acc = 0.0;
            for (int o = 0; o < O; ++o)
                for (int kw = 0; kw < KW; ++kw) {
                    const int ow = iw - kw;
                    if (ow < 0 || ow >= OW) continue;
                    for (int kt = 0; kt < KT; ++kt) {
                        const int ot = it - kt;
                        if (ot < 0 || ot >= OT) continue;
                        for (int kl = 0; kl < KL; ++kl) {
                            const int ol = il - kl;
                            if (ol < 0 || ol >= OL) continue;
                            acc += gd[((static_cast<int64_t>(ow) * OT + ot) * OL + ol) * O + o] *
                                   wd[(((static_cast<int64_t>(o) * KW + kw) * KT + kt) * KL + kl) *
                                          C +
                                      c];
                        }
                    }
                }
            dp[idx] = acc;
        }
    }

    // d_weight: each weight cell sums over all output positions (accumulated).
    {
        double* dwp = dw.data.data();
        const int64_t n = static_cast<int64_t>(O) * KW * KT * KL * C;
#pragma omp parallel for if (n >= kParallelMin) schedule(static)
        for (int64_t idx = 0; idx < n; ++idx) {
            int64_t rem = idx;
            const int c = static_cast<int>(rem % C);
            rem /= C;
            const int kl = static_cast<int>(rem % KL);
            rem /= KL;
            const int kt = static_cast<int>(rem % KT);
            rem /= KT;
            const int kw = static_cast<int>(rem % KW);
            const int o = static_cast<int>(rem / KW);
            double acc = 0.0;
            for (int ow = 0; ow < OW; ++ow)
                for (int ot = 0; ot < OT; ++ot)
                    for (int ol = 0; ol < OL; ++ol)
                        acc += gd[((static_cast<int64_t>(ow) * OT + ot) * OL + ol) * O + o] *
                               ind[((static_cast<int64_t>(ow + kw) * T + (ot + kt)) * L +
                                    (ol + kl)) *
                                       C +
                                   c];
            dwp[idx] += acc;
        }
    }

    // d_bias.
    {
        double* dbp = db.data.data();
#pragma omp parallel for if (static_cast<int64_t>(O) * OW * OT * OL >= kParallelMin) \
    schedule(static)
        for (int o = 0; o < O; ++o) {
            double acc = 0.0;
            for (int ow = 0; ow < OW; ++ow)
                for (int ot = 0; ot < OT; ++ot)
                    for (int ol = 0; ol < OL; ++ol)
                        acc += gd[((static_cast<int64_t>(ow) * OT + ot) * OL + ol) * O + o];
            dbp[o] += acc;
        }
    }
}

void conv1d_forward(const Tensor& in, const Tensor& w, const Tensor& b, Tensor& out) {
    check_conv1d(in, w, out);
    check_bias(b, w.shape[0], "conv1d");
    const int C = in.shape[1];
    const int O = w.shape[0], K = w.shape[1];
    const int OT = out.shape[0];
    const double* ind = in.data.data();
    const double* wd = w.data.data();
    const double* bd = b.data.data();
    double* od = out.data.data();
    const int64_t n = static_cast<int64_t>(OT) * O;
#pragma omp parallel for if (n >= kParallelMin) schedule(static)
    for (int64_t idx = 0; idx < n; ++idx) {
        const int o = static_cast<int>(idx % O);
        const int t = static_cast<int>(idx / O);
        double acc = 0.0;
        for (int k = 0; k < K; ++k) {
            const double* ip = ind + static_cast<int64_t>(t + k) * C;
            const double* wp = wd + (static_cast<int64_t>(o) * K + k) * C;
            for (int c = 0; c < C; ++c) acc += ip[c] * wp[c];
        }
        od[idx] = acc + bd[o];
    }
}

void conv1d_backward(const Tensor& in, const Tensor& w, const Tensor& dout, Tensor& din,
                     Tensor& dw, Tensor& db) {
    check_conv1d(in, w, dout);
    if (din.shape != in.shape || dw.shape != w.shape)
        throw ShapeMismatch("conv1d backward: gradient shape mismatch");
    check_bias(db, w.shape[0], "conv1d backward");
    const int T = in.shape[0], C = in.shape[1];
    const int O = w.shape[0], K = w.shape[1];
    const int OT = dout.shape[0];
    const double* ind = in.data.data();
    const double* wd = w.data.data();
    const double* gd = dout.data.data();

    {
        double* dp = din.data.data();
        const int64_t n = static_cast<int64_t>(T) * C;
#pragma omp parallel for if (n >= kParallelMin) schedule(static)
        for (int64_t idx = 0; idx < n; ++idx) {
            const int c = static_cast<int>(idx % C);
            const int it = static_cast<int>(idx / C);
            double acc = 0.0;
            for (int o = 0; o < O; ++o)
                for (int k = 0; k < K; ++k) {
                    const int t = it - k;
                    if (t < 0 || t >= OT) continue;
                    acc += gd[static_cast<int64_t>(t) * O + o] *
                           wd[(static_cast<int64_t>(o) * K + k) * C + c];
                }
            dp[idx] = acc;
        }
    }
    {
        double* dwp = dw.data.data();
        const int64_t n = static_cast<int64_t>(O) * K * C;
#pragma omp parallel for if (n >= kParallelMin) schedule(static)
        for (int64_t idx = 0; idx < n; ++idx) {
            int64_t rem = idx;
            const int c = static_cast<int>(rem % C);
            rem /= C;
            const int k = static_cast<int>(rem % K);
            const int o = static_cast<int>(rem / K);
            double acc = 0.0;
            for (int t = 0; t < OT; ++t)
                acc += gd[static_cast<int64_t>(t) * O + o] *
                       ind[static_cast<int64_t>(t + k) * C + c];
            dwp[idx] += acc;
        }
    }
    {
        double* dbp = db.data.data();
        for (int o = 0; o < O; ++o) {
            double acc = 0.0;
            for (int t = 0; t < OT; ++t) acc += gd[static_cast<int64_t>(t) * O + o];
            dbp[o] += acc;
        }
    }
}

void dense_forward(const Tensor& in, const Tensor& w, const Tensor& b, Tensor& out) {
    check_dense(in, w, out);
    check_bias(b, w.shape[0], "dense");
    const int O = w.shape[0], N = w.shape[1];
    const double* ind = in.data.data();
    const double* wd = w.data.data();
    const double* bd = b.data.data();
    double* od = out.data.data();
#pragma omp parallel for if (static_cast<int64_t>(O) * N >= kParallelMin) schedule(static)
    for (int o = 0; o < O; ++o) {
        const double* wp = wd + static_cast<int64_t>(o) * N;
        double acc = 0.0;
        for (int i = 0; i < N; ++i) acc += wp[i] * ind[i];
        od[o] = acc + bd[o];
    }
}

void dense_backward(const Tensor& in, const Tensor& w, const Tensor& dout, Tensor& din,
                    Tensor& dw, Tensor& db) {
    check_dense(in, w, dout);
    if (din.shape != in.shape || dw.shape != w.shape)
        throw ShapeMismatch("dense backward: gradient shape mismatch");
    check_bias(db, w.shape[0], "dense backward");
    const int O = w.shape[0], N = w.shape[1];
    const double* ind = in.data.data();
    const double* wd = w.data.data();
    const double* gd = dout.data.data();
    {
        double* dp = din.data.data();
#pragma omp parallel for if (static_cast<int64_t>(O) * N >= kParallelMin) schedule(static)
        for (int i = 0; i < N; ++i) {
            double acc = 0.0;
            for (int o = 0; o < O; ++o) acc += gd[o] * wd[static_cast<int64_t>(o) * N + i];
            dp[i] = acc;
        }
    }
    {
        double* dwp = dw.data.data();
        const int64_t n = static_cast<int64_t>(O) * N;
#pragma omp parallel for if (n >= kParallelMin) schedule(static)
        for (int64_t idx = 0; idx < n; ++idx) {
            const int i = static_cast<int>(idx % N);
            const int o = static_cast<int>(idx / N);
            dwp[idx] += gd[o] * ind[i];
        }
    }
    for (int o = 0; o < O; ++o) db.data[o] += gd[o];
}

void relu_forward(const Tensor& in, Tensor& out) {
    if (in.shape != out.shape) throw ShapeMismatch("relu: shape mismatch");
    const int64_t n = static_cast<int64_t>(in.size());
#pragma omp parallel for if (n >= kParallelMin) schedule(static)
    for (int64_t i = 0; i < n; ++i) out.data[i] = in.data[i] > 0.0 ? in.data[i] : 0.0;
}

void relu_backward(const Tensor& in, const Tensor& dout, Tensor& din) {
    if (in.shape != dout.shape || in.shape != din.shape)
        throw ShapeMismatch("relu backward: shape mismatch");
    const int64_t n = static_cast<int64_t>(in.size());
#pragma omp parallel for if (n >= kParallelMin) schedule(static)
    for (int64_t i = 0; i < n; ++i) din.data[i] = in.data[i] > 0.0 ? dout.data[i] : 0.0;
}

// ---------------------------------------------------------------------------
// Serial reference: naive textbook loops, written independently of the
// OpenMP versions but with the same per-cell summation order. Kept as the
// correctness oracle for the parallel kernels.
// ---------------------------------------------------------------------------

namespace ref {

void conv3d_forward(const Tensor& in, const Tensor& w, const Tensor& b, Tensor& out) {
    check_conv3d(in, w, out);
    check_bias(b, w.shape[0], "conv3d");
    const int O = w.shape[0], KW = w.shape[1], KT = w.shape[2], KL = w.shape[3], C = w.shape[4];
    for (int ow = 0; ow < out.shape[0]; ++ow)
        for (int ot = 0; ot < out.shape[1]; ++ot)
            for (int ol = 0; ol < out.shape[2]; ++ol)
                for (int o = 0; o < O; ++o) {
                    double acc = 0.0;
                    for (int kw = 0; kw < KW; ++kw)
                        for (int kt = 0; kt < KT; ++kt)
                            for (int kl = 0; kl < KL; ++kl)
                                for (int c = 0; c < C; ++c)
                                    acc += in.at4(ow + kw, ot + kt, ol + kl, c) *
                                           w.at5(o, kw, kt, kl, c);
                    out.at4(ow, ot, ol, o) = acc + b[static_cast<size_t>(o)];
                }
}

void conv3d_backward(const Tensor& in, const Tensor& w, const Tensor& dout, Tensor& din,
                     Tensor& dw, Tensor& db) {
    check_conv3d(in, w, dout);
    if (din.shape != in.shape || dw.shape != w.shape)
        throw ShapeMismatch("conv3d backward: gradient shape mismatch");
    check_bias(db, w.shape[0], "conv3d backward");
    const int O = w.shape[0], KW = w.shape[1], KT = w.shape[2], KL = w.shape[3], C = w.shape[4];
    const int OW = dout.shape[0], OT = dout.shape[1], OL = dout.shape[2];
    for (int iw = 0; iw < in.shape[0]; ++iw)
        for (int it = 0; it < in.shape[1]; ++it)
            for (int il = 0; il < in.shape[2]; ++il)
                for (int c = 0; c < C; ++c) {
                    double acc = 0.0;
                    for (int o = 0; o < O; ++o)
                        for (int kw = 0; kw < KW; ++kw)
                            for (int kt = 0; kt < KT; ++kt)
                                for (int kl = 0; kl < KL; ++kl) {
                                    const int ow = iw - kw, ot = it - kt, ol = il - kl;
                                    if (ow < 0 || ow >= OW || ot < 0 || ot >= OT || ol < 0 ||
                                        ol >= OL)
                                        continue;
                                    acc += dout.at4(ow, ot, ol, o) * w.at5(o, kw, kt, kl, c);
                                }
                    din.at4(iw, it, il, c) = acc;
                }
    for (int o = 0; o < O; ++o)
        for (int kw = 0; kw < KW; ++kw)
            for (int kt = 0; kt < KT; ++kt)
                for (int kl = 0; kl < KL; ++kl)
                    for (int c = 0; c < C; ++c) {
                        double acc = 0.0;
                        for (int ow = 0; ow < OW; ++ow)
                            for (int ot = 0; ot < OT; ++ot)
                                for (int ol = 0; ol < OL; ++ol)
                                    acc += dout.at4(ow, ot, ol, o) *
                                           in.at4(ow + kw, ot + kt, ol + kl, c);
                        dw.at5(o, kw, kt, kl, c) += acc;
                    }
    for (int o = 0; o < O; ++o) {
        double acc = 0.0;
        for (int ow = 0; ow < OW; ++ow)
            for (int ot = 0; ot < OT; ++ot)
                for (int ol = 0; ol < OL; ++ol) acc += dout.at4(ow, ot, ol, o);
        db[static_cast<size_t>(o)] += acc;
    }
}

void conv1d_forward(const Tensor& in, const Tensor& w, const Tensor& b, Tensor& out) {
    check_conv1d(in, w, out);
    check_bias(b, w.shape[0], "conv1d");
    const int O = w.shape[0], K = w.shape[1], C = w.shape[2];
    for (int t = 0; t < out.shape[0]; ++t)
        for (int o = 0; o < O; ++o) {
            double acc = 0.0;
            for (int k = 0; k < K; ++k)
                for (int c = 0; c < C; ++c) acc += in.at2(t + k, c) * w.at3(o, k, c);
            out.at2(t, o) = acc + b[static_cast<size_t>(o)];
        }
}

void conv1d_backward(const Tensor& in, const Tensor& w, const Tensor& dout, Tensor& din,
                     Tensor& dw, Tensor& db) {
    check_conv1d(in, w, dout);
    if (din.shape != in.shape || dw.shape != w.shape)
        throw ShapeMismatch("conv1d backward: gradient shape mismatch");
    check_bias(db, w.shape[0], "conv1d backward");
    const int O = w.shape[0], K = w.shape[1], C = w.shape[2];
    const int OT = dout.shape[0];
    for (int it = 0; it < in.shape[0]; ++it)
        for (int c = 0; c < C; ++c) {
            double acc = 0.0;
            for (int o = 0; o < O; ++o)
                for (int k = 0; k < K; ++k) {
                    const int t = it - k;
                    if (t < 0 || t >= OT) continue;
                    acc += dout.at2(t, o) * w.at3(o, k, c);
                }
            din.at2(it, c) = acc;
        }
    for (int o = 0; o < O; ++o)
        for (int k = 0; k < K; ++k)
            for (int c = 0; c < C; ++c) {
                double acc = 0.0;
                for (int t = 0; t < OT; ++t) acc += dout.at2(t, o) * in.at2(t + k, c);
                dw.at3(o, k, c) += acc;
            }
    for (int o = 0; o < O; ++o) {
        double acc = 0.0;
        for (int t = 0; t < OT; ++t) acc += dout.at2(t, o);
        db[static_cast<size_t>(o)] += acc;
    }
}

void dense_forward(const Tensor& in, const Tensor& w, const Tensor& b, Tensor& out) {
    check_dense(in, w, out);
    check_bias(b, w.shape[0], "dense");
    const int O = w.shape[0], N = w.shape[1];
    for (int o = 0; o < O; ++o) {
        double acc = 0.0;
        for (int i = 0; i < N; ++i) acc += w.at2(o, i) * in[static_cast<size_t>(i)];
        out[static_cast<size_t>(o)] = acc + b[static_cast<size_t>(o)];
    }
}

void dense_backward(const Tensor& in, const Tensor& w, const Tensor& dout, Tensor& din,
                    Tensor& dw, Tensor& db) {
    check_dense(in, w, dout);
    if (din.shape != in.shape || dw.shape != w.shape)
        throw ShapeMismatch("dense backward: gradient shape mismatch");
    check_bias(db, w.shape[0], "dense backward");
    const int O = w.shape[0], N = w.shape[1];
    for (int i = 0; i < N; ++i) {
        double acc = 0.0;
        for (int o = 0; o < O; ++o) acc += dout[static_cast<size_t>(o)] * w.at2(o, i);
        din[static_cast<size_t>(i)] = acc;
    }
    for (int o = 0; o < O; ++o)
        for (int i = 0; i < N; ++i)
            dw.at2(o, i) += dout[static_cast<size_t>(o)] * in[static_cast<size_t>(i)];
    for (int o = 0; o < O; ++o) db[static_cast<size_t>(o)] += dout[static_cast<size_t>(o)];
}

void relu_forward(const Tensor& in, Tensor& out) {
    if (in.shape != out.shape) throw ShapeMismatch("relu: shape mismatch");
    for (size_t i = 0; i < in.size(); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
}

void relu_backward(const Tensor& in, const Tensor& dout, Tensor& din) {
    if (in.shape != dout.shape || in.shape != din.shape)
        throw ShapeMismatch("relu backward: shape mismatch");
    for (size_t i = 0; i < in.size(); ++i) din[i] = in[i] > 0.0 ? dout[i] : 0.0;
}

}  // namespace ref

// ---------------------------------------------------------------------------
// Network
// ---------------------------------------------------------------------------

void NetworkSpec::validate() const {
    if (book_windows < 1 || book_seconds < 1 || book_levels < 1 || book_channels < 1 ||
        trade_len < 1 || trade_channels < 1)
        throw ShapeMismatch("network spec: bad input geometry");
    if (c3_ow() < 1 || c3_ot() < 1 || c3_ol() < 1)
        throw ShapeMismatch("network spec: Conv3D kernel larger than input");
    if (c1_ot() < 1) throw ShapeMismatch("network spec: Conv1D kernel larger than input");
    if (c3_out < 1 || c1_out < 1 || dense_width < 1)
        throw ShapeMismatch("network spec: layer widths must be positive");
}

std::vector<std::string> NetworkSpec::describe() const {
    validate();
    auto dim4 = [](int a, int b, int c, int d) {
        return std::to_string(a) + "x" + std::to_string(b) + "x" + std::to_string(c) + "x" +
               std::to_string(d);
    };
    std::vector<std::string> out;
    out.push_back("Conv3D[ask " + dim4(book_windows, book_seconds, book_levels, book_channels) +
                  " -> " + dim4(c3_ow(), c3_ot(), c3_ol(), c3_out) + ", kernel " +
                  std::to_string(c3_kw) + "x" + std::to_string(c3_kt) + "x" +
                  std::to_string(c3_kl) + "] + ReLU");
    out.push_back("Conv3D[bid " + dim4(book_windows, book_seconds, book_levels, book_channels) +
                  " -> " + dim4(c3_ow(), c3_ot(), c3_ol(), c3_out) + ", kernel " +
                  std::to_string(c3_kw) + "x" + std::to_string(c3_kt) + "x" +
                  std::to_string(c3_kl) + "] + ReLU");
    out.push_back("Conv1D[trade " + std::to_string(trade_len) + "x" +
                  std::to_string(trade_channels) + " -> " + std::to_string(c1_ot()) + "x" +
                  std::to_string(c1_out) + ", kernel " + std::to_string(c1_k) + "] + ReLU");
    out.push_back("Flatten+Concat[" + std::to_string(flat_size()) + "]" +
                  (use_lt ? " (includes remaining-time input)" : ""));
    out.push_back("Dense[" + std::to_string(flat_size()) + " -> " +
                  std::to_string(dense_width) + "] + ReLU");
    out.push_back("Dense[" + std::to_string(dense_width) + " -> " +
                  std::to_string(static_cast<int>(head_width)) + "]");
    return out;
}

QNetwork::QNetwork(const NetworkSpec& spec) : spec_(spec) {
    spec_.validate();
    const std::vector<int> book{spec_.book_windows, spec_.book_seconds, spec_.book_levels,
                                spec_.book_channels};
    const std::vector<int> w3{spec_.c3_out, spec_.c3_kw, spec_.c3_kt, spec_.c3_kl,
                              spec_.book_channels};
    ask_w_ = Tensor(w3);
    ask_b_ = Tensor({spec_.c3_out});
    bid_w_ = Tensor(w3);
    bid_b_ = Tensor({spec_.c3_out});
    trade_w_ = Tensor({spec_.c1_out, spec_.c1_k, spec_.trade_channels});
    trade_b_ = Tensor({spec_.c1_out});
    fc_w_ = Tensor({spec_.dense_width, spec_.flat_size()});
    fc_b_ = Tensor({spec_.dense_width});
    head_w_ = Tensor({NetworkSpec::head_width, spec_.dense_width});
    head_b_ = Tensor({NetworkSpec::head_width});
    g_ask_w_ = Tensor(ask_w_.shape);
    g_ask_b_ = Tensor(ask_b_.shape);
    g_bid_w_ = Tensor(bid_w_.shape);
    g_bid_b_ = Tensor(bid_b_.shape);
    g_trade_w_ = Tensor(trade_w_.shape);
    g_trade_b_ = Tensor(trade_b_.shape);
    g_fc_w_ = Tensor(fc_w_.shape);
    g_fc_b_ = Tensor(fc_b_.shape);
    g_head_w_ = Tensor(head_w_.shape);
    g_head_b_ = Tensor(head_b_.shape);
    (void)book;
}

namespace {

void init_pair(Tensor& w, Tensor& b, int fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& x : w.data) x = rng.uniform(-bound, bound);
    for (double& x : b.data) x = rng.uniform(-bound, bound);
}

}  // namespace

void QNetwork::init(Rng& rng) {
    const int fan3 = spec_.c3_kw * spec_.c3_kt * spec_.c3_kl * spec_.book_channels;
    init_pair(ask_w_, ask_b_, fan3, rng);
    init_pair(bid_w_, bid_b_, fan3, rng);
    init_pair(trade_w_, trade_b_, spec_.c1_k * spec_.trade_channels, rng);
    init_pair(fc_w_, fc_b_, spec_.flat_size(), rng);
    init_pair(head_w_, head_b_, spec_.dense_width, rng);
}

std::array<double, 2> QNetwork::forward(const ObsViews& v, std::optional<double> lt) {
    require_shape(v.ask,
                  {spec_.book_windows, spec_.book_seconds, spec_.book_levels, spec_.book_channels},
                  "ask view");
    require_shape(v.bid,
                  {spec_.book_windows, spec_.book_seconds, spec_.book_levels, spec_.book_channels},
                  "bid view");
    require_shape(v.trade, {spec_.trade_len, spec_.trade_channels}, "trade view");
    if (spec_.use_lt && !lt.has_value())
        throw ShapeMismatch("network expects a remaining-time input");

    in_ask_ = v.ask;
    in_bid_ = v.bid;
    in_trade_ = v.trade;
    const std::vector<int> out3{spec_.c3_ow(), spec_.c3_ot(), spec_.c3_ol(), spec_.c3_out};
    if (ask_pre_.shape != out3) {
        ask_pre_ = Tensor(out3);
        ask_act_ = Tensor(out3);
        bid_pre_ = Tensor(out3);
        bid_act_ = Tensor(out3);
        trade_pre_ = Tensor({spec_.c1_ot(), spec_.c1_out});
        trade_act_ = Tensor({spec_.c1_ot(), spec_.c1_out});
        flat_ = Tensor({spec_.flat_size()});
        fc_pre_ = Tensor({spec_.dense_width});
        fc_act_ = Tensor({spec_.dense_width});
        head_out_ = Tensor({NetworkSpec::head_width});
    }
    conv3d_forward(in_ask_, ask_w_, ask_b_, ask_pre_);
    relu_forward(ask_pre_, ask_act_);
    conv3d_forward(in_bid_, bid_w_, bid_b_, bid_pre_);
    relu_forward(bid_pre_, bid_act_);
    conv1d_forward(in_trade_, trade_w_, trade_b_, trade_pre_);
    relu_forward(trade_pre_, trade_act_);

    const size_t n3 = ask_act_.size();
    const size_t n1 = trade_act_.size();
    std::memcpy(flat_.data.data(), ask_act_.data.data(), n3 * sizeof(double));
    std::memcpy(flat_.data.data() + n3, bid_act_.data.data(), n3 * sizeof(double));
    std::memcpy(flat_.data.data() + 2 * n3, trade_act_.data.data(), n1 * sizeof(double));
    if (spec_.use_lt) flat_.data[2 * n3 + n1] = *lt / spec_.lt_denom;

    dense_forward(flat_, fc_w_, fc_b_, fc_pre_);
    relu_forward(fc_pre_, fc_act_);
    dense_forward(fc_act_, head_w_, head_b_, head_out_);
    have_cache_ = true;
    return {head_out_[0], head_out_[1]};
}

void QNetwork::zero_grad() {
    for (Tensor* g : grads()) g->zero();
}

void QNetwork::backward(const std::array<double, 2>& dout) {
    if (!have_cache_) throw TrainError("backward without a cached forward pass");
    Tensor d_head(std::vector<int>{NetworkSpec::head_width});
    d_head[0] = dout[0];
    d_head[1] = dout[1];

    Tensor d_fc_act(fc_act_.shape);
    dense_backward(fc_act_, head_w_, d_head, d_fc_act, g_head_w_, g_head_b_);
    Tensor d_fc_pre(fc_pre_.shape);
    relu_backward(fc_pre_, d_fc_act, d_fc_pre);
    Tensor d_flat(flat_.shape);
    dense_backward(flat_, fc_w_, d_fc_pre, d_flat, g_fc_w_, g_fc_b_);

    const size_t n3 = ask_act_.size();
    const size_t n1 = trade_act_.size();
    Tensor d_ask_act(ask_act_.shape), d_bid_act(bid_act_.shape), d_trade_act(trade_act_.shape);
    std::memcpy(d_ask_act.data.data(), d_flat.data.data(), n3 * sizeof(double));
    std::memcpy(d_bid_act.data.data(), d_flat.data.data() + n3, n3 * sizeof(double));
    std::memcpy(d_trade_act.data.data(), d_flat.data.data() + 2 * n3, n1 * sizeof(double));

    Tensor d_pre(ask_pre_.shape), d_in3(in_ask_.shape);
    relu_backward(ask_pre_, d_ask_act, d_pre);
    conv3d_backward(in_ask_, ask_w_, d_pre, d_in3, g_ask_w_, g_ask_b_);
    relu_backward(bid_pre_, d_bid_act, d_pre);
    conv3d_backward(in_bid_, bid_w_, d_pre, d_in3, g_bid_w_, g_bid_b_);

    Tensor d_tpre(trade_pre_.shape), d_in1(in_trade_.shape);
    relu_backward(trade_pre_, d_trade_act, d_tpre);
    conv1d_backward(in_trade_, trade_w_, d_tpre, d_in1, g_trade_w_, g_trade_b_);
}

std::vector<std::pair<std::string, Tensor*>> QNetwork::named_params() {
    return {{"ask_w", &ask_w_},     {"ask_b", &ask_b_},   {"bid_w", &bid_w_},
            {"bid_b", &bid_b_},     {"trade_w", &trade_w_}, {"trade_b", &trade_b_},
            {"fc_w", &fc_w_},       {"fc_b", &fc_b_},     {"head_w", &head_w_},
            {"head_b", &head_b_}};
}

std::vector<std::pair<std::string, const Tensor*>> QNetwork::named_params() const {
    auto* self = const_cast<QNetwork*>(this);
    std::vector<std::pair<std::string, const Tensor*>> out;
    for (auto& [name, t] : self->named_params()) out.emplace_back(name, t);
    return out;
}

std::vector<Tensor*> QNetwork::params() {
    std::vector<Tensor*> out;
    for (auto& [name, t] : named_params()) out.push_back(t);
    return out;
}

std::vector<Tensor*> QNetwork::grads() {
    return {&g_ask_w_, &g_ask_b_, &g_bid_w_, &g_bid_b_, &g_trade_w_,
            &g_trade_b_, &g_fc_w_, &g_fc_b_, &g_head_w_, &g_head_b_};
}

void QNetwork::copy_params_from(const QNetwork& other) {
    auto dst = params();
    auto* src_net = const_cast<QNetwork*>(&other);
    auto src = src_net->params();
    if (dst.size() != src.size()) throw ShapeMismatch("copy between different networks");
    for (size_t i = 0; i < dst.size(); ++i) {
        if (dst[i]->shape != src[i]->shape)
            throw ShapeMismatch("copy between different network shapes");
        dst[i]->data = src[i]->data;
    }
}

uint64_t QNetwork::param_checksum() const {
    uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a 64
    for (const auto& [name, t] : named_params()) {
        for (double x : t->data) {
            const uint64_t bits = std::bit_cast<uint64_t>(x);
            for (int byte = 0; byte < 8; ++byte) {
                h ^= (bits >> (8 * byte)) & 0xffu;
                h *= 0x100000001b3ULL;
            }
        }
    }
    return h;
}

double squared_error(const std::array<double, 2>& out, const std::array<double, 2>& target,
                     const std::array<bool, 2>& mask, std::array<double, 2>& dout) {
    double loss = 0.0;
    for (int i = 0; i < 2; ++i) {
        if (mask[static_cast<size_t>(i)]) {
            const double diff = out[static_cast<size_t>(i)] - target[static_cast<size_t>(i)];
            loss += diff * diff;
            dout[static_cast<size_t>(i)] = 2.0 * diff;
        } else {
            dout[static_cast<size_t>(i)] = 0.0;
        }
    }
    if (!std::isfinite(loss)) throw NonFiniteLoss("loss is not finite");
    return loss;
}

void AdamState::init_like(const std::vector<Tensor*>& params) {
    m.clear();
    v.clear();
    for (const Tensor* p : params) {
        m.emplace_back(p->shape);
        v.emplace_back(p->shape);
    }
    t = 0;
}

void adam_step(const std::vector<Tensor*>& params, const std::vector<Tensor*>& grads,
               AdamState& state, double lr) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw ShapeMismatch("optimizer state does not match parameters");
    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        const Tensor& g = *grads[i];
        Tensor& m = state.m[i];
        Tensor& v = state.v[i];
        if (p.shape != g.shape || p.shape != m.shape)
            throw ShapeMismatch("optimizer shape mismatch");
        for (size_t j = 0; j < p.size(); ++j) {
            m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
            v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            p[j] -= lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

}  // namespace sgym::nn
