#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "sgym/errors.hpp"
#include "sgym/observation.hpp"
#include "sgym/tick.hpp"

using namespace sgym;
using namespace testutil;

TEST_CASE("csv round trip preserves every field exactly") {
    std::vector<TickRecord> recs =
        records_from_path({100.0, 100.5, 99.875, 101.25, 100.0 / 3.0});
    recs[2].trade_volume = 0.123456789012345;
    std::ostringstream os;
    write_ticks(os, recs);
    std::istringstream is(os.str());
    auto back = parse_ticks(is, basic_meta());
    REQUIRE(back.size() == recs.size());
    for (size_t i = 0; i < recs.size(); ++i) {
        CHECK(back[i].ts == recs[i].ts);
        CHECK(back[i].last_price == recs[i].last_price);  // bit-exact
        for (int l = 0; l < 10; ++l) {
            CHECK(back[i].bid_price[l] == recs[i].bid_price[l]);
            CHECK(back[i].ask_price[l] == recs[i].ask_price[l]);
            CHECK(back[i].bid_amount[l] == recs[i].bid_amount[l]);
            CHECK(back[i].ask_amount[l] == recs[i].ask_amount[l]);
        }
        CHECK(back[i].trade_volume == recs[i].trade_volume);
        CHECK(back[i].wavg_total_price == recs[i].wavg_total_price);
        CHECK(back[i].open_price == recs[i].open_price);
        CHECK(back[i].high_price == recs[i].high_price);
        CHECK(back[i].low_price == recs[i].low_price);
    }
}

TEST_CASE("header is mandatory and exact") {
    std::istringstream is("nonsense\n1,2,3\n");
    CHECK_THROWS_AS(parse_ticks(is, basic_meta()), MalformedRow);
}

TEST_CASE("short rows are rejected with their line number") {
    std::ostringstream os;
    write_ticks(os, records_from_path({100.0, 101.0}));
    std::string text = os.str() + "1,2,3\n";
    std::istringstream is(text);
    try {
        parse_ticks(is, basic_meta());
        FAIL("expected MalformedRow");
    } catch (const MalformedRow& e) {
        CHECK(e.line == 4);  // header + 2 rows + the bad one
    }
}

TEST_CASE("timestamps must strictly increase") {
    auto recs = records_from_path({100.0, 101.0, 102.0});
    recs[2].ts = recs[1].ts;  // duplicate second
    std::ostringstream os;
    write_ticks(os, recs);
    std::istringstream is(os.str());
    CHECK_THROWS_AS(parse_ticks(is, basic_meta()), NonMonotoneTime);
}

TEST_CASE("gaps are forward-filled with trade flow zeroed") {
    auto recs = records_from_path({100.0, 101.0});
    recs[1].ts = recs[0].ts + 3;  // two missing seconds
    std::ostringstream os;
    write_ticks(os, recs);
    std::istringstream is(os.str());
    auto back = parse_ticks(is, basic_meta());
    REQUIRE(back.size() == 4);
    for (size_t i = 1; i <= 2; ++i) {
        CHECK(back[i].ts == recs[0].ts + int64_t(i));
        CHECK(back[i].last_price == recs[0].last_price);
        CHECK(back[i].bid_price[0] == recs[0].bid_price[0]);
        CHECK(back[i].bid_amount[5] == recs[0].bid_amount[5]);
        CHECK(back[i].trade_volume == 0.0);
        CHECK(back[i].sell_dir_volume == 0.0);
        CHECK(back[i].buy_dir_volume == 0.0);
        CHECK(back[i].total_dir_volume == 0.0);
        CHECK(back[i].wavg_total_price == recs[0].wavg_total_price);
    }
    CHECK(back[3].last_price == 101.0);
    CHECK(back[3].trade_volume == 50.0);
}

TEST_CASE("book invariants are enforced per row") {
    auto write_one = [](TickRecord r) {
        std::ostringstream os;
        write_ticks(os, {r});
        return os.str();
    };
    TickRecord good = make_record(kTs0, 100.0, 100.0, 100.0, 100.0);

    SUBCASE("ask below bid") {
        TickRecord r = good;
        r.ask_price[0] = r.bid_price[0] - 1.0;
        std::istringstream is(write_one(r));
        CHECK_THROWS_AS(parse_ticks(is, basic_meta()), MalformedRow);
    }
    SUBCASE("negative amount") {
        TickRecord r = good;
        r.ask_amount[3] = -1.0;
        std::istringstream is(write_one(r));
        CHECK_THROWS_AS(parse_ticks(is, basic_meta()), MalformedRow);
    }
    SUBCASE("last above high") {
        TickRecord r = good;
        r.last_price = r.high_price + 5.0;
        std::istringstream is(write_one(r));
        CHECK_THROWS_AS(parse_ticks(is, basic_meta()), MalformedRow);
    }
    SUBCASE("non-positive best bid") {
        TickRecord r = good;
        r.bid_price[0] = 0.0;
        std::istringstream is(write_one(r));
        CHECK_THROWS_AS(parse_ticks(is, basic_meta()), MalformedRow);
    }
    SUBCASE("bid levels must not increase with depth") {
        TickRecord r = good;
        r.bid_price[4] = r.bid_price[3] + 1.0;
        std::istringstream is(write_one(r));
        CHECK_THROWS_AS(parse_ticks(is, basic_meta()), MalformedRow);
    }
}

TEST_CASE("header-only stream is empty") {
    std::istringstream is(std::string(kTickCsvHeader) + "\n");
    CHECK_THROWS_AS(parse_ticks(is, basic_meta()), EmptyStream);
}

TEST_CASE("price scaling is percent change versus previous close") {
    CHECK(scale_price(110.0, 100.0) == doctest::Approx(10.0));
    CHECK(scale_price(95.0, 100.0) == doctest::Approx(-5.0));
    CHECK(scale_price(100.0, 100.0) == 0.0);
    CHECK_THROWS_AS(scale_price(100.0, 0.0), NonPositiveBase);
    CHECK_THROWS_AS(scale_price(100.0, -5.0), NonPositiveBase);
}

TEST_CASE("share scaling is log of the free-float ratio") {
    TickerMeta m = basic_meta();
    const double ff = m.free_float();
    CHECK(ff == 7'000'000.0);
    CHECK(scale_shares(700.0, m) == doctest::Approx(std::log(700.0 / ff)));
    // Zero volume substitutes a single share to keep the log finite.
    CHECK(scale_shares(0.0, m) == doctest::Approx(std::log(1.0 / ff)));
    CHECK(scale_shares(0.0, m) < scale_shares(1.5, m));
}

TEST_CASE("meta json round trip and validation") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "sgym_meta_test";
    fs::create_directories(dir);
    TickerMeta m = basic_meta();
    write_meta_file((dir / "t.json").string(), m);
    TickerMeta back = load_meta((dir / "t.json").string());
    CHECK(back.ticker == m.ticker);
    CHECK(back.prev_close == m.prev_close);
    CHECK(back.shares_outstanding == m.shares_outstanding);
    CHECK(back.shares_majority == m.shares_majority);

    TickerMeta bad = m;
    bad.prev_close = 0.0;
    CHECK_THROWS_AS(validate_meta(bad), NonPositiveBase);
    bad = m;
    bad.shares_majority = bad.shares_outstanding;  // zero float
    CHECK_THROWS_AS(validate_meta(bad), InvalidFloat);
    fs::remove_all(dir);
}
