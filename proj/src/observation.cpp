#include "sgym/observation.hpp"

#include <cmath>

#include "sgym/errors.hpp"

namespace sgym {

double scale_price(double p_t, double p_y) {
    if (!(p_y > 0.0)) throw NonPositiveBase("price base must be > 0");
    return (p_t - p_y) / p_y * 100.0;
}

double scale_shares(double v_t, const TickerMeta& meta) {
    const double free_float = meta.free_float();
    if (!(free_float > 0.0) || !std::isfinite(free_float))
        throw InvalidFloat("free float must be > 0");
    const double v = v_t > 0.0 ? v_t : 1.0;  // zero volume counts as one share
    return std::log(v / free_float);
}

void scale_record(const TickRecord& rec, const TickerMeta& meta, double* row) {
    const double py = meta.prev_close;
    for (int l = 0; l < kBookLevels; ++l) {
        row[kColBidPrice0 + l] = scale_price(rec.bid_price[l], py);
        row[kColAskPrice0 + l] = scale_price(rec.ask_price[l], py);
        row[kColBidAmount0 + l] = scale_shares(rec.bid_amount[l], meta);
        row[kColAskAmount0 + l] = scale_shares(rec.ask_amount[l], meta);
    }
    row[kColLast] = scale_price(rec.last_price, py);
    row[kColTradeVol] = scale_shares(rec.trade_volume, meta);
    row[kColSellVol] = scale_shares(rec.sell_dir_volume, meta);
    row[kColWavgSell] = scale_price(rec.wavg_sell_price, py);
    row[kColBuyVol] = scale_shares(rec.buy_dir_volume, meta);
    row[kColWavgBuy] = scale_price(rec.wavg_buy_price, py);
    row[kColTotalVol] = scale_shares(rec.total_dir_volume, meta);
    row[kColWavgTotal] = scale_price(rec.wavg_total_price, py);
    row[kColOpen] = scale_price(rec.open_price, py);
    row[kColHigh] = scale_price(rec.high_price, py);
    row[kColLow] = scale_price(rec.low_price, py);
}

ObservationTensor build_observation(std::span<const TickRecord> records, int64_t t,
                                    const TickerMeta& meta) {
    validate_meta(meta);
    if (records.empty()) throw InsufficientHistory("no records");
    const int64_t first_ts = records.front().ts;
    const int64_t idx = t - first_ts;
    if (idx < 0 || idx >= static_cast<int64_t>(records.size()))
        throw InsufficientHistory("timestamp " + std::to_string(t) + " outside record range");
    if (idx + 1 < kObsWindow)
        throw InsufficientHistory("need " + std::to_string(kObsWindow) +
                                  " records at or before t, have " + std::to_string(idx + 1));
    ObservationTensor obs;
    for (int row = 0; row < kObsWindow; ++row) {
        const TickRecord& rec = records[static_cast<size_t>(idx - (kObsWindow - 1 - row))];
        scale_record(rec, meta, &obs.m[static_cast<size_t>(row) * kObsFeatures]);
    }
    return obs;
}

ObsViews split_views(const ObservationTensor& obs) {
    ObsViews v{Tensor({kSubWindows, kSubWindowLen, kBookLevels, 2}),
               Tensor({kSubWindows, kSubWindowLen, kBookLevels, 2}),
               Tensor({kObsWindow, kTradeCols})};
    for (int w = 0; w < kSubWindows; ++w) {
        for (int s = 0; s < kSubWindowLen; ++s) {
            const int row = w * kSubWindowLen + s;
            for (int l = 0; l < kBookLevels; ++l) {
                v.ask.at4(w, s, l, 0) = obs.at(row, kColAskPrice0 + l);
                v.ask.at4(w, s, l, 1) = obs.at(row, kColAskAmount0 + l);
                v.bid.at4(w, s, l, 0) = obs.at(row, kColBidPrice0 + l);
                v.bid.at4(w, s, l, 1) = obs.at(row, kColBidAmount0 + l);
            }
        }
    }
    for (int row = 0; row < kObsWindow; ++row)
        for (int c = 0; c < kTradeCols; ++c) v.trade.at2(row, c) = obs.at(row, kColLast + c);
    return v;
}

}  // namespace sgym
