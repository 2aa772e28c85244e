#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace sgym {

// One second of market state: 10-level order book plus trade aggregates.
struct TickRecord {
    int64_t ts = 0;  // epoch-like seconds, monotone within a day
    std::array<double, 10> bid_price{};
    std::array<double, 10> ask_price{};
    std::array<double, 10> bid_amount{};
    std::array<double, 10> ask_amount{};
    double last_price = 0.0;
    double trade_volume = 0.0;
    double sell_dir_volume = 0.0;
    double buy_dir_volume = 0.0;
    double total_dir_volume = 0.0;
    double wavg_sell_price = 0.0;
    double wavg_buy_price = 0.0;
    double wavg_total_price = 0.0;
    double open_price = 0.0;
    double high_price = 0.0;
    double low_price = 0.0;
};

struct TickerMeta {
    std::string ticker;
    double prev_close = 0.0;          // P_y: previous day's close
    double shares_outstanding = 0.0;  // total shares
    double shares_majority = 0.0;     // majority-holder stake (excluded from float)

    double free_float() const { return shares_outstanding - shares_majority; }
};

// Throws NonPositiveBase / InvalidFloat when the meta values cannot support
// the price/volume scaling below.
void validate_meta(const TickerMeta& meta);

// CSV contract: one row per second, header required.
extern const char* const kTickCsvHeader;
constexpr int kTickCsvColumns = 52;

// Parses the tick CSV contract. Records come back sorted, one per second;
// missing seconds are forward-filled from the prior record with the four
// trade-flow volumes zeroed (book and price fields carry forward).
std::vector<TickRecord> parse_ticks(std::istream& in, const TickerMeta& meta);

std::vector<TickRecord> load_ticks(const std::string& path, const TickerMeta& meta);
TickerMeta load_meta(const std::string& path);

void write_ticks(std::ostream& out, const std::vector<TickRecord>& records);
void write_ticks_file(const std::string& path, const std::vector<TickRecord>& records);
void write_meta_file(const std::string& path, const TickerMeta& meta);

}  // namespace sgym
