#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "helpers.hpp"
#include "sgym/env.hpp"
#include "sgym/errors.hpp"
#include "sgym/observation.hpp"
#include "sgym/rng.hpp"

using namespace sgym;
using namespace testutil;

// ---------------------------------------------------------------------------
// Reward operations
// ---------------------------------------------------------------------------

TEST_CASE("buy-signal reward: constant, held-step and ramp values") {
    std::vector<double> flat(121, 100.0);
    CHECK(reward_bsa(flat, 0) == 0.0);

    std::vector<double> held(121, 101.0);
    held[0] = 100.0;
    CHECK(reward_bsa(held, 0) == doctest::Approx(1.0).epsilon(1e-12));

    std::vector<double> ramp(121);
    for (int k = 0; k <= 120; ++k) ramp[size_t(k)] = 100.0 + 0.01 * k;
    CHECK(reward_bsa(ramp, 0) == doctest::Approx(0.605).epsilon(1e-12));

    std::vector<double> shortpath(100, 100.0);
    CHECK_THROWS_AS(reward_bsa(shortpath, 0), InsufficientFuture);
}

TEST_CASE("buy-order reward: window minimum, never negative") {
    std::vector<double> w = {102.0, 100.0, 101.0};
    CHECK(reward_boa(w, 0, 2) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(reward_boa(w, 0, 1) == 0.0);  // bought at the minimum
    CHECK(reward_boa(w, 1, 1) == 0.0);  // single point
}

TEST_CASE("sell-signal reward: two-step worked value and zero remaining time") {
    std::vector<double> p = {100.0, 99.0, 98.0};
    CHECK(reward_ssa(p, 0, 2) == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(reward_ssa(p, 0, 0) == 0.0);  // signal at the deadline second

    std::vector<double> drop = {100.0, 99.0, 99.0, 99.0};
    CHECK(reward_ssa(drop, 0, 3) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sell-order reward is the round-trip gross return") {
    CHECK(reward_soa(100.0, 100.0) == 0.0);
    CHECK(reward_soa(100.0, 101.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(reward_soa(100.0, 98.5) == doctest::Approx(-1.5).epsilon(1e-12));
}

TEST_CASE("shared rewards halve the sum of the other three") {
    auto sh = shared_rewards({1.0, 2.0, 3.0, 4.0});
    CHECK(sh[0] == doctest::Approx(4.5).epsilon(1e-12));
    CHECK(sh[1] == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(sh[2] == doctest::Approx(3.5).epsilon(1e-12));
    CHECK(sh[3] == doctest::Approx(3.0).epsilon(1e-12));
    auto zero = shared_rewards({0.0, 0.0, 0.0, 0.0});
    for (double v : zero) CHECK(v == 0.0);
    auto one = shared_rewards({2.0, 0.0, 0.0, 0.0});
    CHECK(one[0] == 0.0);
    CHECK(one[1] == 1.0);
    CHECK(one[2] == 1.0);
    CHECK(one[3] == 1.0);
}

TEST_CASE("cost model: flat deduction and per-leg compounding") {
    EnvConfig cfg;  // 0.30 tax + 0.03 fee
    CHECK(apply_costs(1.0, cfg) == doctest::Approx(0.67).epsilon(1e-12));
    CHECK(apply_costs(0.33, cfg) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(apply_costs(0.0, cfg) == doctest::Approx(-0.33).epsilon(1e-12));

    EnvConfig leg = cfg;
    leg.cost_mode = EnvConfig::CostMode::PerLeg;
    // Buy pays fee/2 on entry, sell pays fee/2 + tax on exit, multiplicative.
    const double g = 1.0;
    const double expect =
        ((1.0 + g / 100.0) * (1.0 - (0.015 + 0.30) / 100.0) / (1.0 + 0.015 / 100.0) -
         1.0) *
        100.0;
    CHECK(apply_costs(g, leg) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(apply_costs(g, leg) < apply_costs(g, cfg) + 0.01);
}

TEST_CASE("reward operations agree with brute-force oracles on random paths") {
    Rng rng(9001);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> p(200);
        p[0] = rng.uniform(50.0, 150.0);
        for (size_t i = 1; i < p.size(); ++i)
            p[i] = std::max(1.0, p[i - 1] * (1.0 + rng.uniform(-0.004, 0.004)));

        const int d = int(rng.between(1, 60));
        const size_t i1 = size_t(rng.below(int64_t(p.size()) - d - 1));
        CHECK(reward_bsa(p, i1, d) ==
              doctest::Approx(oracle_bsa(p, i1, d)).epsilon(1e-11));

        const size_t i2 = i1 + size_t(rng.below(d));
        CHECK(reward_boa(p, i1, i2) ==
              doctest::Approx(oracle_boa(p, i1, i2)).epsilon(1e-11));
        CHECK(reward_boa(p, i1, i2) >= 0.0);

        const int lt = int(rng.between(0, d));
        CHECK(reward_ssa(p, i1, lt) ==
              doctest::Approx(oracle_ssa(p, i1, lt)).epsilon(1e-11));
    }
}

// ---------------------------------------------------------------------------
// Observation building
// ---------------------------------------------------------------------------

TEST_CASE("observation window is the 120 scaled seconds ending at t") {
    std::vector<double> path(300);
    for (size_t i = 0; i < path.size(); ++i) path[i] = 100.0 + 0.01 * double(i);
    auto ep = episode_from_path(path);
    const int64_t t = kTs0 + 200;
    ObservationTensor obs = build_observation(ep->records, t, ep->meta);

    // Row 119 is time t, row 0 is t-119.
    CHECK(obs.at(119, kColLast) ==
          doctest::Approx(scale_price(path[200], 100.0)).epsilon(1e-12));
    CHECK(obs.at(0, kColLast) ==
          doctest::Approx(scale_price(path[81], 100.0)).epsilon(1e-12));
    // Prices scale as percent change, amounts as log share ratios.
    CHECK(obs.at(119, kColBidPrice0) ==
          doctest::Approx(scale_price(ep->records[200].bid_price[0], 100.0)));
    CHECK(obs.at(119, kColBidAmount0) ==
          doctest::Approx(scale_shares(ep->records[200].bid_amount[0], ep->meta)));

    CHECK_THROWS_AS(build_observation(ep->records, kTs0 + 118, ep->meta),
                    InsufficientHistory);
    CHECK_NOTHROW(build_observation(ep->records, kTs0 + 119, ep->meta));
    CHECK_THROWS_AS(build_observation(ep->records, kTs0 + 300, ep->meta),
                    InsufficientHistory);  // past the last record
}

TEST_CASE("view split partitions all 6120 observation cells bijectively") {
    // Distinct values everywhere so any mixed-up index would be caught.
    std::vector<double> path(200);
    for (size_t i = 0; i < path.size(); ++i)
        path[i] = 100.0 + 0.001 * double(i) + 0.0001 * double(i % 7);
    auto ep = episode_from_path(path);
    ObservationTensor obs = build_observation(ep->records, kTs0 + 150, ep->meta);
    for (size_t i = 0; i < obs.m.size(); ++i) obs.m[i] += 1e-7 * double(i);

    ObsViews v = split_views(obs);
    REQUIRE(v.ask.shape == std::vector<int>({12, 10, 10, 2}));
    REQUIRE(v.bid.shape == std::vector<int>({12, 10, 10, 2}));
    REQUIRE(v.trade.shape == std::vector<int>({120, 11}));
    CHECK(v.ask.size() + v.bid.size() + v.trade.size() == 120 * 51);

    // Channel 0 carries prices, channel 1 amounts; sub-window w covers rows
    // [10w, 10w+9]; trade columns are the last 11 in row order.
    for (int w = 0; w < 12; ++w)
        for (int s = 0; s < 10; ++s)
            for (int l = 0; l < 10; ++l) {
                const int row = w * 10 + s;
                CHECK(v.ask.at4(w, s, l, 0) == obs.at(row, kColAskPrice0 + l));
                CHECK(v.ask.at4(w, s, l, 1) == obs.at(row, kColAskAmount0 + l));
                CHECK(v.bid.at4(w, s, l, 0) == obs.at(row, kColBidPrice0 + l));
                CHECK(v.bid.at4(w, s, l, 1) == obs.at(row, kColBidAmount0 + l));
            }
    for (int row = 0; row < 120; ++row)
        for (int c = 0; c < 11; ++c)
            CHECK(v.trade.at2(row, c) == obs.at(row, kColLast + c));
}

// ---------------------------------------------------------------------------
// Phase machine
// ---------------------------------------------------------------------------

namespace {

EpisodePtr long_flat_episode(int seconds = 400, double price = 100.0) {
    return episode_from_path(std::vector<double>(size_t(seconds), price));
}

}  // namespace

TEST_CASE("immediate action chain trades within one second") {
    auto ep = long_flat_episode();
    TradingEnv env;
    ObsBundle ob = env.reset(ep);
    CHECK(ob.active == Agent::BSA);
    CHECK_FALSE(ob.lt.has_value());
    const int64_t start = ob.t;

    auto r1 = env.step({Agent::BSA, 1});
    CHECK_FALSE(r1.done);
    CHECK(r1.obs.active == Agent::BOA);
    REQUIRE(r1.obs.lt.has_value());
    CHECK(*r1.obs.lt == 120.0);
    CHECK(r1.obs.t == start);  // same-second handoff

    auto r2 = env.step({Agent::BOA, 1});
    CHECK(r2.obs.active == Agent::SSA);
    auto r3 = env.step({Agent::SSA, 1});
    CHECK(r3.obs.active == Agent::SOA);
    auto r4 = env.step({Agent::SOA, 1});
    CHECK(r4.done);
    CHECK(r4.info == "traded");
    REQUIRE(r4.reward.has_value());

    const EpisodeOutcome& out = env.outcome();
    CHECK(out.traded);
    CHECK(*out.t1 == start);
    CHECK(*out.t2 == start);
    CHECK(*out.t3 == start);
    CHECK(*out.t4 == start);
    CHECK(out.rewards.gross_return == 0.0);
    CHECK(out.rewards.net_return == doctest::Approx(-0.33).epsilon(1e-12));
    // Flat path: all primaries zero, shares zero.
    for (int i = 0; i < 4; ++i) {
        CHECK(out.rewards.primary[size_t(i)] == 0.0);
        CHECK(out.rewards.shared[size_t(i)] == 0.0);
    }
}

TEST_CASE("waiting past the deadline forces the chain at t1+120") {
    auto ep = long_flat_episode();
    TradingEnv env;
    ObsBundle ob = env.reset(ep);
    const int64_t start = ob.t;
    env.step({Agent::BSA, 1});
    TradingEnv::StepResult last{};
    int waits = 0;
    while (!env.done()) {
        last = env.step({env.active_agent(), 0});
        ++waits;
        REQUIRE(waits < 200);
    }
    CHECK(last.info == "forced");
    const EpisodeOutcome& out = env.outcome();
    CHECK(out.traded);
    CHECK(*out.t1 == start);
    CHECK(*out.t2 == start + 120);
    CHECK(*out.t3 == start + 120);
    CHECK(*out.t4 == start + 120);
    CHECK(out.rewards.gross_return == 0.0);
    CHECK(out.rewards.net_return == doctest::Approx(-0.33).epsilon(1e-12));
    CHECK(out.rewards.primary[2] == 0.0);  // sell signal at zero remaining time
}

TEST_CASE("buy signal never fires when the rest of the day is too short") {
    auto ep = long_flat_episode(400);
    TradingEnv env;
    env.reset(ep);
    TradingEnv::StepResult last{};
    while (!env.done()) last = env.step({Agent::BSA, 0});
    CHECK(last.info == "no_trade");
    CHECK_FALSE(env.outcome().traded);
    REQUIRE(last.reward.has_value());
    CHECK(last.reward->net_return == 0.0);
    for (double v : last.reward->primary) CHECK(v == 0.0);
    // The last tradable signal second leaves exactly deadline seconds of day.
    CHECK(env.state().t + 120 > ep->end_ts());
}

TEST_CASE("scripted profitable round trip prices and rewards correctly") {
    // 100 for the warmup, buy at 100, price steps to 101, sell at 101.
    std::vector<double> path(400, 100.0);
    for (size_t i = 210; i < path.size(); ++i) path[i] = 101.0;
    auto ep = episode_from_path(path);
    TradingEnv env;
    env.reset(ep, kTs0 + 200);

    env.step({Agent::BSA, 1});                       // t1 = 200
    env.step({Agent::BOA, 1});                       // buy at 100 (t2 = 200)
    for (int i = 0; i < 15; ++i) env.step({Agent::SSA, 0});
    env.step({Agent::SSA, 1});                       // t3 = 215, price 101
    auto r = env.step({Agent::SOA, 1});              // sell at 101
    REQUIRE(r.done);
    const RewardVector& rw = env.outcome().rewards;
    CHECK(rw.gross_return == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rw.net_return == doctest::Approx(0.67).epsilon(1e-12));
    // Sell-order primary is the gross return; buy-order primary uses the
    // window minimum (bought at the low -> 0).
    CHECK(rw.primary[3] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rw.primary[1] == 0.0);
    // Buy-signal primary: mean forward gain over the 120 s window from t1.
    std::vector<double> sub(path.begin() + 200, path.end());
    CHECK(rw.primary[0] == doctest::Approx(oracle_bsa(sub, 0, 120)).epsilon(1e-9));
    // Sell-signal primary: mean decline over the remaining 105 s (price flat
    // at 101 afterwards -> 0).
    CHECK(rw.primary[2] == 0.0);
    for (int i = 0; i < 4; ++i) {
        double sum = 0.0;
        for (int j = 0; j < 4; ++j)
            if (j != i) sum += rw.primary[size_t(j)];
        CHECK(rw.shared[size_t(i)] == doctest::Approx(0.5 * sum).epsilon(1e-12));
    }
}

TEST_CASE("buy-order reward tracks the running minimum since the signal") {
    // Price dips to 98 after the signal, then recovers; buy on the rebound.
    std::vector<double> path(400, 100.0);
    path[202] = 99.0;
    path[203] = 98.0;
    path[204] = 99.5;
    auto ep = episode_from_path(path);
    TradingEnv env;
    env.reset(ep, kTs0 + 200);
    env.step({Agent::BSA, 1});
    for (int i = 0; i < 4; ++i) env.step({Agent::BOA, 0});  // now at t=204
    env.step({Agent::BOA, 1});                              // buy at 99.5
    env.step({Agent::SSA, 1});
    env.step({Agent::SOA, 1});
    const RewardVector& rw = env.outcome().rewards;
    CHECK(rw.primary[1] ==
          doctest::Approx((99.5 - 98.0) / 98.0 * 100.0).epsilon(1e-12));
    CHECK(*env.outcome().p_t2 == 99.5);
}

TEST_CASE("sign flip makes cheaper buys score higher") {
    std::vector<double> path(400, 100.0);
    path[202] = 98.0;
    path[203] = 99.5;
    auto run = [&](int sign) {
        EnvConfig cfg;
        cfg.boa_reward_sign = sign;
        TradingEnv env(cfg);
        env.reset(episode_from_path(path), kTs0 + 200);
        env.step({Agent::BSA, 1});
        for (int i = 0; i < 3; ++i) env.step({Agent::BOA, 0});
        env.step({Agent::BOA, 1});
        env.step({Agent::SSA, 1});
        env.step({Agent::SOA, 1});
        return env.outcome().rewards.primary[1];
    };
    // Buys on the rebound at 99.5 after a dip to 98.
    const double as_written = run(+1);
    const double flipped = run(-1);
    CHECK(as_written == doctest::Approx((99.5 - 98.0) / 98.0 * 100.0));
    CHECK(flipped == doctest::Approx(-as_written));
}

TEST_CASE("protocol violations throw") {
    auto ep = long_flat_episode();
    TradingEnv env;
    env.reset(ep);
    CHECK_THROWS_AS(env.step({Agent::SOA, 1}), WrongAgent);
    env.step({Agent::BSA, 1});
    CHECK_THROWS_AS(env.step({Agent::BSA, 0}), WrongAgent);
    env.step({Agent::BOA, 1});
    env.step({Agent::SSA, 1});
    env.step({Agent::SOA, 1});
    CHECK(env.done());
    CHECK_THROWS_AS(env.step({Agent::BSA, 0}), SteppedAfterDone);
}

TEST_CASE("reset validates history and remaining-day requirements") {
    auto ep = long_flat_episode(400);
    TradingEnv env;
    CHECK_THROWS_AS(env.reset(ep, kTs0 + 100), InsufficientHistory);
    CHECK_THROWS_AS(env.reset(ep, kTs0 + 350), EpisodeTooShort);
    CHECK_NOTHROW(env.reset(ep, kTs0 + 200));
    auto tiny = long_flat_episode(200);  // no second admits 120 warmup + 121 tail
    CHECK_THROWS_AS(env.reset(tiny), EpisodeTooShort);
}

TEST_CASE("trace is valid JSON lines ending in a terminal summary") {
    auto ep = long_flat_episode();
    TradingEnv env;
    env.reset(ep);
    env.step({Agent::BSA, 1});
    env.step({Agent::BOA, 1});
    env.step({Agent::SSA, 0});
    env.step({Agent::SSA, 1});
    env.step({Agent::SOA, 1});
    std::ostringstream os;
    env.write_trace(os);
    std::istringstream is(os.str());
    std::string line, last;
    size_t lines = 0;
    while (std::getline(is, line)) {
        ++lines;
        last = line;
    }
    CHECK(lines == 6);  // five steps + summary
    CHECK(last.find("\"net\"") != std::string::npos);
    CHECK(last.find("\"traded\":true") != std::string::npos);
}
