#pragma once

#include <cstdint>
#include <span>

#include "sgym/tensor.hpp"
#include "sgym/tick.hpp"

namespace sgym {

// Observation geometry: 120 seconds of history × 51 scaled features.
constexpr int kObsWindow = 120;
constexpr int kObsFeatures = 51;
constexpr int kSubWindows = 12;   // Conv3D input: 12 sub-windows ...
constexpr int kSubWindowLen = 10;  // ... of 10 seconds each
constexpr int kBookLevels = 10;
constexpr int kTradeCols = 11;  // columns 40..50

// Column layout (fixed): 0-9 bid prices, 10-19 ask prices, 20-29 bid amounts,
// 30-39 ask amounts, 40 last, 41 trade vol, 42 sell-dir vol, 43 wavg sell,
// 44 buy-dir vol, 45 wavg buy, 46 total-dir vol, 47 wavg total, 48 open,
// 49 high, 50 low.
enum ObsCol : int {
    kColBidPrice0 = 0,
    kColAskPrice0 = 10,
    kColBidAmount0 = 20,
    kColAskAmount0 = 30,
    kColLast = 40,
    kColTradeVol = 41,
    kColSellVol = 42,
    kColWavgSell = 43,
    kColBuyVol = 44,
    kColWavgBuy = 45,
    kColTotalVol = 46,
    kColWavgTotal = 47,
    kColOpen = 48,
    kColHigh = 49,
    kColLow = 50,
};

// 120×51 matrix of scaled values, row 0 oldest, row 119 = time t.
struct ObservationTensor {
    std::vector<double> m;  // row-major 120×51

    ObservationTensor() : m(static_cast<size_t>(kObsWindow) * kObsFeatures, 0.0) {}

    double& at(int row, int col) { return m[static_cast<size_t>(row) * kObsFeatures + col]; }
    double at(int row, int col) const { return m[static_cast<size_t>(row) * kObsFeatures + col]; }
};

// Percent change versus previous close: (p_t - p_y) / p_y × 100.
double scale_price(double p_t, double p_y);

// Log share ratio: ln(v_t / free_float). Zero volume substitutes 1 share so
// the logarithm stays finite while preserving ordering.
double scale_shares(double v_t, const TickerMeta& meta);

// Scale one record into a 51-wide row (helper shared with build_observation).
void scale_record(const TickRecord& rec, const TickerMeta& meta, double* row51);

// Window of the 120 records ending at timestamp t, scaled. records must be
// the gap-free per-second day sequence from parse_ticks.
ObservationTensor build_observation(std::span<const TickRecord> records, int64_t t,
                                    const TickerMeta& meta);

// Network-facing views: per-side book tensors 12×10×10×2 (sub-window, second,
// level, channel{price,amount}) and the 120×11 trade matrix (columns 40-50).
struct ObsViews {
    Tensor ask;    // {12,10,10,2}
    Tensor bid;    // {12,10,10,2}
    Tensor trade;  // {120,11}
};

ObsViews split_views(const ObservationTensor& obs);

}  // namespace sgym
