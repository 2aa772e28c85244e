#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sgym/observation.hpp"
#include "sgym/rng.hpp"
#include "sgym/tensor.hpp"

namespace sgym::nn {

// ---------------------------------------------------------------------------
// Kernels. The primary entry points parallelize over independent output cells
// with OpenMP; sgym::nn::ref holds serial implementations with the identical
// per-cell summation order, kept as the test oracle (results must be
// bit-equal). Backward convention: d_input is overwritten, d_weight and
// d_bias are accumulated (+=) so minibatch gradients can be summed in place.
// ---------------------------------------------------------------------------

// conv3d: input {W,T,L,C}, weight {O,KW,KT,KL,C}, bias {O},
// output {W-KW+1, T-KT+1, L-KL+1, O}; valid padding, stride 1.
void conv3d_forward(const Tensor& in, const Tensor& w, const Tensor& b, Tensor& out);
void conv3d_backward(const Tensor& in, const Tensor& w, const Tensor& dout, Tensor& din,
                     Tensor& dw, Tensor& db);

// conv1d: input {T,C}, weight {O,K,C}, bias {O}, output {T-K+1, O}.
void conv1d_forward(const Tensor& in, const Tensor& w, const Tensor& b, Tensor& out);
void conv1d_backward(const Tensor& in, const Tensor& w, const Tensor& dout, Tensor& din,
                     Tensor& dw, Tensor& db);

// dense: input {N}, weight {O,N}, bias {O}, output {O}.
void dense_forward(const Tensor& in, const Tensor& w, const Tensor& b, Tensor& out);
void dense_backward(const Tensor& in, const Tensor& w, const Tensor& dout, Tensor& din,
                    Tensor& dw, Tensor& db);

void relu_forward(const Tensor& in, Tensor& out);
void relu_backward(const Tensor& in, const Tensor& dout, Tensor& din);

namespace ref {
void conv3d_forward(const Tensor& in, const Tensor& w, const Tensor& b, Tensor& out);
void conv3d_backward(const Tensor& in, const Tensor& w, const Tensor& dout, Tensor& din,
                     Tensor& dw, Tensor& db);
void conv1d_forward(const Tensor& in, const Tensor& w, const Tensor& b, Tensor& out);
void conv1d_backward(const Tensor& in, const Tensor& w, const Tensor& dout, Tensor& din,
                     Tensor& dw, Tensor& db);
void dense_forward(const Tensor& in, const Tensor& w, const Tensor& b, Tensor& out);
void dense_backward(const Tensor& in, const Tensor& w, const Tensor& dout, Tensor& din,
                    Tensor& dw, Tensor& db);
void relu_forward(const Tensor& in, Tensor& out);
void relu_backward(const Tensor& in, const Tensor& dout, Tensor& din);
}  // namespace ref

// ---------------------------------------------------------------------------
// Network: two Conv3D branches (ask book, bid book), one Conv1D branch
// (trade history), flattened and concatenated (plus the optional remaining-
// time input), then Dense -> ReLU -> Dense(2). Doubles throughout.
// ---------------------------------------------------------------------------

struct NetworkSpec {
    // Input geometry (fixed by the observation layout).
    int book_windows = kSubWindows;
    int book_seconds = kSubWindowLen;
    int book_levels = kBookLevels;
    int book_channels = 2;
    int trade_len = kObsWindow;
    int trade_channels = kTradeCols;
    // Layer hyperparameters.
    int c3_kw = 2, c3_kt = 3, c3_kl = 3;  // Conv3D kernel (windows, seconds, levels)
    int c3_out = 8;
    int c1_k = 5;  // Conv1D kernel length
    int c1_out = 16;
    int dense_width = 100;
    bool use_lt = false;       // append remaining-time input (order/sell agents)
    double lt_denom = 120.0;   // remaining seconds are fed as lt / lt_denom
    static constexpr int head_width = 2;

    int c3_ow() const { return book_windows - c3_kw + 1; }
    int c3_ot() const { return book_seconds - c3_kt + 1; }
    int c3_ol() const { return book_levels - c3_kl + 1; }
    int c1_ot() const { return trade_len - c1_k + 1; }
    int branch3d_size() const { return c3_ow() * c3_ot() * c3_ol() * c3_out; }
    int branch1d_size() const { return c1_ot() * c1_out; }
    int flat_size() const { return 2 * branch3d_size() + branch1d_size() + (use_lt ? 1 : 0); }

    void validate() const;               // throws ShapeMismatch
    std::vector<std::string> describe() const;  // ordered layer descriptors
};

class QNetwork {
public:
    QNetwork() = default;
    explicit QNetwork(const NetworkSpec& spec);

    // Fan-in-scaled uniform init, deterministic in rng.
    void init(Rng& rng);

    const NetworkSpec& spec() const { return spec_; }

    // Forward pass; caches activations for a following backward().
    std::array<double, 2> forward(const ObsViews& v, std::optional<double> lt);

    void zero_grad();
    // Reverse-mode gradients of (dout · output); accumulates into grads.
    void backward(const std::array<double, 2>& dout);

    std::vector<std::pair<std::string, Tensor*>> named_params();
    std::vector<std::pair<std::string, const Tensor*>> named_params() const;
    std::vector<Tensor*> params();
    std::vector<Tensor*> grads();

    void copy_params_from(const QNetwork& other);
    uint64_t param_checksum() const;  // FNV-1a over raw parameter bytes

private:
    NetworkSpec spec_;
    // Parameters and their gradients.
    Tensor ask_w_, ask_b_, bid_w_, bid_b_, trade_w_, trade_b_;
    Tensor fc_w_, fc_b_, head_w_, head_b_;
    Tensor g_ask_w_, g_ask_b_, g_bid_w_, g_bid_b_, g_trade_w_, g_trade_b_;
    Tensor g_fc_w_, g_fc_b_, g_head_w_, g_head_b_;
    // Forward caches.
    Tensor in_ask_, in_bid_, in_trade_;
    Tensor ask_pre_, ask_act_, bid_pre_, bid_act_, trade_pre_, trade_act_;
    Tensor flat_, fc_pre_, fc_act_, head_out_;
    bool have_cache_ = false;
};

// Squared-error loss on the 2-wide head; mask selects which outputs count.
// Returns the loss and writes dL/d_output. Throws NonFiniteLoss.
double squared_error(const std::array<double, 2>& out, const std::array<double, 2>& target,
                     const std::array<bool, 2>& mask, std::array<double, 2>& dout);

// Adam with bias correction.
struct AdamState {
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    int64_t t = 0;
    std::vector<Tensor> m, v;

    void init_like(const std::vector<Tensor*>& params);
};

void adam_step(const std::vector<Tensor*>& params, const std::vector<Tensor*>& grads,
               AdamState& state, double lr);

}  // namespace sgym::nn
