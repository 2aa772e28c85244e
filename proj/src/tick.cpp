#include "sgym/tick.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string_view>

#include <json.hpp>

#include "sgym/errors.hpp"

namespace sgym {

const char* const kTickCsvHeader =
    "ts,"
    "bp1,bp2,bp3,bp4,bp5,bp6,bp7,bp8,bp9,bp10,"
    "bv1,bv2,bv3,bv4,bv5,bv6,bv7,bv8,bv9,bv10,"
    "ap1,ap2,ap3,ap4,ap5,ap6,ap7,ap8,ap9,ap10,"
    "av1,av2,av3,av4,av5,av6,av7,av8,av9,av10,"
    "last,vol,svol,swap,bvol,bwap,tvol,twap,open,high,low";

void validate_meta(const TickerMeta& meta) {
    if (!(meta.prev_close > 0.0) || !std::isfinite(meta.prev_close))
        throw NonPositiveBase("prev_close must be > 0 for ticker " + meta.ticker);
    if (!(meta.shares_outstanding > meta.shares_majority) || !(meta.shares_majority >= 0.0) ||
        !std::isfinite(meta.free_float()))
        throw InvalidFloat("free float must be > 0 for ticker " + meta.ticker);
}

namespace {

double parse_double(std::string_view field, size_t line_no) {
    double v = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v))
        throw MalformedRow(line_no, "bad numeric field '" + std::string(field) + "'");
    return v;
}

int64_t parse_ts(std::string_view field, size_t line_no) {
    int64_t v = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size())
        throw MalformedRow(line_no, "bad timestamp '" + std::string(field) + "'");
    return v;
}

void split_row(std::string_view line, std::vector<std::string_view>& out) {
    out.clear();
    size_t start = 0;
    while (true) {
        const size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            return;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

void check_row_invariants(const TickRecord& r, size_t line_no) {
    if (!(r.bid_price[0] > 0.0))
        throw MalformedRow(line_no, "best bid must be > 0");
    if (r.ask_price[0] < r.bid_price[0])
        throw MalformedRow(line_no, "best ask below best bid");
    for (int l = 1; l < 10; ++l) {
        if (r.ask_price[l] < r.ask_price[l - 1])
            throw MalformedRow(line_no, "ask levels must be nondecreasing");
        if (r.bid_price[l] > r.bid_price[l - 1])
            throw MalformedRow(line_no, "bid levels must be nonincreasing");
    }
    for (int l = 0; l < 10; ++l) {
        if (r.bid_amount[l] < 0.0 || r.ask_amount[l] < 0.0)
            throw MalformedRow(line_no, "amounts must be >= 0");
    }
    if (!(r.low_price <= r.last_price && r.last_price <= r.high_price))
        throw MalformedRow(line_no, "last outside [low, high]");
}

TickRecord forward_fill(const TickRecord& prev, int64_t ts) {
    TickRecord r = prev;
    r.ts = ts;
    r.trade_volume = 0.0;
    r.sell_dir_volume = 0.0;
    r.buy_dir_volume = 0.0;
    r.total_dir_volume = 0.0;
    return r;
}

}  // namespace

std::vector<TickRecord> parse_ticks(std::istream& in, const TickerMeta& meta) {
    validate_meta(meta);
    std::vector<TickRecord> out;
    std::string line;
    std::vector<std::string_view> fields;
    fields.reserve(kTickCsvColumns);

    size_t line_no = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!saw_header) {
            if (line != kTickCsvHeader)
                throw MalformedRow(line_no, "missing or unexpected header");
            saw_header = true;
            continue;
        }
        split_row(line, fields);
        if (fields.size() != static_cast<size_t>(kTickCsvColumns))
            throw MalformedRow(line_no, "expected " + std::to_string(kTickCsvColumns) +
                                            " columns, got " + std::to_string(fields.size()));
        TickRecord r;
        size_t f = 0;
        r.ts = parse_ts(fields[f++], line_no);
        for (int l = 0; l < 10; ++l) r.bid_price[l] = parse_double(fields[f++], line_no);
        for (int l = 0; l < 10; ++l) r.bid_amount[l] = parse_double(fields[f++], line_no);
        for (int l = 0; l < 10; ++l) r.ask_price[l] = parse_double(fields[f++], line_no);
        for (int l = 0; l < 10; ++l) r.ask_amount[l] = parse_double(fields[f++], line_no);
        r.last_price = parse_double(fields[f++], line_no);
        r.trade_volume = parse_double(fields[f++], line_no);
        r.sell_dir_volume = parse_double(fields[f++], line_no);
        r.wavg_sell_price = parse_double(fields[f++], line_no);
        r.buy_dir_volume = parse_double(fields[f++], line_no);
        r.wavg_buy_price = parse_double(fields[f++], line_no);
        r.total_dir_volume = parse_double(fields[f++], line_no);
        r.wavg_total_price = parse_double(fields[f++], line_no);
        r.open_price = parse_double(fields[f++], line_no);
        r.high_price = parse_double(fields[f++], line_no);
        r.low_price = parse_double(fields[f++], line_no);
        check_row_invariants(r, line_no);

        if (!out.empty()) {
            if (r.ts <= out.back().ts)
                throw NonMonotoneTime("timestamp " + std::to_string(r.ts) +
                                      " not after previous row at line " + std::to_string(line_no));
            for (int64_t gap = out.back().ts + 1; gap < r.ts; ++gap)
                out.push_back(forward_fill(out.back(), gap));
        }
        out.push_back(r);
    }
    if (out.empty()) throw EmptyStream("no data rows in tick stream");
    return out;
}

std::vector<TickRecord> load_ticks(const std::string& path, const TickerMeta& meta) {
    std::ifstream in(path);
    if (!in) throw IoFailure("cannot open tick file: " + path);
    return parse_ticks(in, meta);
}

TickerMeta load_meta(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoFailure("cannot open meta file: " + path);
    nlohmann::json j;
    try {
        in >> j;
        TickerMeta meta;
        meta.ticker = j.at("ticker").get<std::string>();
        meta.prev_close = j.at("prev_close").get<double>();
        meta.shares_outstanding = j.at("shares_outstanding").get<double>();
        meta.shares_majority = j.at("shares_majority").get<double>();
        validate_meta(meta);
        return meta;
    } catch (const nlohmann::json::exception& e) {
        throw MalformedRow(0, "bad meta json " + path + ": " + e.what());
    }
}

namespace {

void append_double(std::string& s, double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    s.append(buf, ptr);
}

}  // namespace

void write_ticks(std::ostream& out, const std::vector<TickRecord>& records) {
    out << kTickCsvHeader << '\n';
    std::string row;
    for (const TickRecord& r : records) {
        row.clear();
        row += std::to_string(r.ts);
        for (int l = 0; l < 10; ++l) { row += ','; append_double(row, r.bid_price[l]); }
        for (int l = 0; l < 10; ++l) { row += ','; append_double(row, r.bid_amount[l]); }
        for (int l = 0; l < 10; ++l) { row += ','; append_double(row, r.ask_price[l]); }
        for (int l = 0; l < 10; ++l) { row += ','; append_double(row, r.ask_amount[l]); }
        for (double v : {r.last_price, r.trade_volume, r.sell_dir_volume, r.wavg_sell_price,
                         r.buy_dir_volume, r.wavg_buy_price, r.total_dir_volume,
                         r.wavg_total_price, r.open_price, r.high_price, r.low_price}) {
            row += ',';
            append_double(row, v);
        }
        row += '\n';
        out << row;
    }
}

void write_ticks_file(const std::string& path, const std::vector<TickRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure("cannot write tick file: " + path);
    write_ticks(out, records);
    if (!out) throw IoFailure("write failed: " + path);
}

void write_meta_file(const std::string& path, const TickerMeta& meta) {
    nlohmann::json j{{"ticker", meta.ticker},
                     {"prev_close", meta.prev_close},
                     {"shares_outstanding", meta.shares_outstanding},
                     {"shares_majority", meta.shares_majority}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure("cannot write meta file: " + path);
    out << j.dump(2) << '\n';
}

}  // namespace sgym
