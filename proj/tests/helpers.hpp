#pragma once

// Shared fixtures for the unit tests: fabricated tick days plus brute-force
// reward oracles. The oracles re-derive each quantity with naive loops on
// purpose — they must stay independent of the library implementations they
// check.

#include <cmath>
#include <cstdint>
#include <vector>

#include "sgym/episode.hpp"
#include "sgym/tick.hpp"

namespace testutil {

constexpr int64_t kTs0 = 34200;

inline sgym::TickerMeta basic_meta(double prev_close = 100.0) {
    sgym::TickerMeta m;
    m.ticker = "TST0";
    m.prev_close = prev_close;
    m.shares_outstanding = 10'000'000.0;
    m.shares_majority = 3'000'000.0;
    return m;
}

// A fully valid record around one last price.
inline sgym::TickRecord make_record(int64_t ts, double price, double open,
                                    double high, double low) {
    sgym::TickRecord r;
    r.ts = ts;
    r.last_price = price;
    const double tick = 0.01;
    for (int l = 0; l < 10; ++l) {
        r.ask_price[l] = price + tick * (l + 1);
        r.bid_price[l] = price - tick * (l + 1);
        r.bid_amount[l] = 100.0 + l;
        r.ask_amount[l] = 200.0 + l;
    }
    r.trade_volume = 50.0;
    r.sell_dir_volume = 20.0;
    r.buy_dir_volume = 30.0;
    r.total_dir_volume = 50.0;
    r.wavg_sell_price = price;
    r.wavg_buy_price = price;
    r.wavg_total_price = price;
    r.open_price = open;
    r.high_price = high;
    r.low_price = low;
    return r;
}

// One record per second from a last-price path, open/high/low kept honest.
inline std::vector<sgym::TickRecord> records_from_path(
    const std::vector<double>& prices, int64_t ts0 = kTs0) {
    std::vector<sgym::TickRecord> out;
    double high = prices.at(0), low = prices.at(0);
    for (size_t i = 0; i < prices.size(); ++i) {
        high = std::max(high, prices[i]);
        low = std::min(low, prices[i]);
        out.push_back(make_record(ts0 + int64_t(i), prices[i], prices[0], high, low));
    }
    return out;
}

inline sgym::EpisodePtr episode_from_path(const std::vector<double>& prices,
                                          double prev_close = 100.0,
                                          const std::string& ticker = "TST0",
                                          const std::string& date = "2018-04-02") {
    sgym::TickerMeta meta = basic_meta(prev_close);
    meta.ticker = ticker;
    return sgym::make_episode(ticker, date, records_from_path(prices), meta);
}

// ---- Independent reward oracles ----

inline double oracle_bsa(const std::vector<double>& p, size_t i1, int deadline) {
    double acc = 0.0;
    for (int k = 1; k <= deadline; ++k)
        acc += (p.at(i1 + size_t(k)) - p.at(i1)) / p.at(i1) * 100.0;
    return acc / double(deadline);
}

inline double oracle_boa(const std::vector<double>& p, size_t i1, size_t i2) {
    double lo = p.at(i1);
    for (size_t i = i1; i <= i2; ++i) lo = std::min(lo, p.at(i));
    return (p.at(i2) - lo) / lo * 100.0;
}

inline double oracle_ssa(const std::vector<double>& p, size_t i3, int lt) {
    if (lt <= 0) return 0.0;
    double acc = 0.0;
    for (int k = 1; k <= lt; ++k)
        acc += -(p.at(i3 + size_t(k)) - p.at(i3)) / p.at(i3) * 100.0;
    return acc / double(lt);
}

inline double oracle_soa(double p2, double p4) { return (p4 - p2) / p2 * 100.0; }

}  // namespace testutil
