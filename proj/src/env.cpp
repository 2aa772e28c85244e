#include "sgym/env.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <json.hpp>

#include "sgym/errors.hpp"

namespace sgym {

const char* to_string(Agent a) {
    switch (a) {
        case Agent::BSA: return "BSA";
        case Agent::BOA: return "BOA";
        case Agent::SSA: return "SSA";
        case Agent::SOA: return "SOA";
    }
    return "?";
}

const char* to_string(Phase p) {
    switch (p) {
        case Phase::WaitBuySignal: return "WaitBuySignal";
        case Phase::WaitBuyOrder: return "WaitBuyOrder";
        case Phase::WaitSellSignal: return "WaitSellSignal";
        case Phase::WaitSellOrder: return "WaitSellOrder";
        case Phase::Done: return "Done";
    }
    return "?";
}

double reward_bsa(std::span<const double> prices, size_t i1, int deadline_s) {
    if (i1 + static_cast<size_t>(deadline_s) >= prices.size())
        throw InsufficientFuture("buy-signal reward needs " + std::to_string(deadline_s) +
                                 " seconds of future prices");
    const double base = prices[i1];
    double sum = 0.0;
    for (int k = 1; k <= deadline_s; ++k)
        sum += (prices[i1 + static_cast<size_t>(k)] - base) / base * 100.0;
    return sum / static_cast<double>(deadline_s);
}

double reward_boa(std::span<const double> prices, size_t i1, size_t i2) {
    double lo = prices[i1];
    for (size_t i = i1 + 1; i <= i2; ++i) lo = std::min(lo, prices[i]);
    return (prices[i2] - lo) / lo * 100.0;
}

double reward_ssa(std::span<const double> prices, size_t i3, int lt3) {
    if (lt3 <= 0) return 0.0;  // forced sell signal at the deadline: empty sum
    const double base = prices[i3];
    double sum = 0.0;
    for (int k = 1; k <= lt3; ++k)
        sum += -(prices[i3 + static_cast<size_t>(k)] - base) / base * 100.0;
    return sum / static_cast<double>(lt3);
}

double reward_soa(double p_t2, double p_t4) { return (p_t4 - p_t2) / p_t2 * 100.0; }

std::array<double, 4> shared_rewards(const std::array<double, 4>& primary) {
    const double total = primary[0] + primary[1] + primary[2] + primary[3];
    std::array<double, 4> shared{};
    for (int i = 0; i < 4; ++i) shared[i] = 0.5 * (total - primary[i]);
    return shared;
}

double apply_costs(double gross_pct, const EnvConfig& cfg) {
    if (cfg.cost_mode == EnvConfig::CostMode::Flat) return gross_pct - cfg.cost_pct();
    // Per-leg: commission split across both legs, tax charged on the sale.
    const double buy_cost = 0.5 * cfg.fee_pct / 100.0;
    const double sell_cost = (0.5 * cfg.fee_pct + cfg.tax_pct) / 100.0;
    const double gross = gross_pct / 100.0;
    return ((1.0 + gross) * (1.0 - sell_cost) / (1.0 + buy_cost) - 1.0) * 100.0;
}

ObsBundle TradingEnv::reset(EpisodePtr episode) {
    if (!episode || episode->records.empty()) throw EmptyStream("reset with empty episode");
    return reset(std::move(episode), episode->start_ts() + kObsWindow);
}

ObsBundle TradingEnv::reset(EpisodePtr episode, int64_t start) {
    if (!episode || episode->records.empty()) throw EmptyStream("reset with empty episode");
    if (start < episode->start_ts() + kObsWindow)
        throw InsufficientHistory("start must allow a full " + std::to_string(kObsWindow) +
                                  " s observation window");
    if (episode->end_ts() - start < cfg_.deadline_s + 1)
        throw EpisodeTooShort("episode must extend more than " +
                              std::to_string(cfg_.deadline_s) + " s past start");
    ep_ = std::move(episode);
    st_ = PhaseState{};
    st_.t = start;
    outcome_ = EpisodeOutcome{};
    trace_.clear();
    last_info_.clear();
    return make_bundle();
}

Agent TradingEnv::active_agent() const {
    switch (st_.phase) {
        case Phase::WaitBuySignal: return Agent::BSA;
        case Phase::WaitBuyOrder: return Agent::BOA;
        case Phase::WaitSellSignal: return Agent::SSA;
        case Phase::WaitSellOrder: return Agent::SOA;
        case Phase::Done: break;
    }
    throw SteppedAfterDone("no active agent: episode is done");
}

double TradingEnv::last_at(int64_t t) const {
    return ep_->records[static_cast<size_t>(t - ep_->start_ts())].last_price;
}

double TradingEnv::fill_buy(int64_t t) const {
    if (cfg_.fill == EnvConfig::Fill::Last) return last_at(t);
    return ep_->records[static_cast<size_t>(t - ep_->start_ts())].ask_price[0];
}

double TradingEnv::fill_sell(int64_t t) const {
    if (cfg_.fill == EnvConfig::Fill::Last) return last_at(t);
    return ep_->records[static_cast<size_t>(t - ep_->start_ts())].bid_price[0];
}

ObsBundle TradingEnv::make_bundle() const {
    ObsBundle b;
    b.obs = build_observation(ep_->records, st_.t, ep_->meta);
    b.t = st_.t;
    if (st_.phase == Phase::Done) {
        b.active = Agent::SOA;  // terminal context; not a decision point
    } else {
        b.active = active_agent();
    }
    if (st_.t1 && st_.phase != Phase::WaitBuySignal)
        b.lt = static_cast<double>(*st_.t1 + cfg_.deadline_s - st_.t);
    return b;
}

TradingEnv::StepResult TradingEnv::step(AgentAction action) {
    if (done()) throw SteppedAfterDone("step after episode end");
    const Agent active = active_agent();
    if (action.agent != active)
        throw WrongAgent(std::string("expected ") + to_string(active) + ", got " +
                         to_string(action.agent));
    if (action.a != 0 && action.a != 1)
        throw ConfigError("action must be 0 or 1");

    trace_.push_back({st_.t, st_.phase, action.agent, action.a, last_at(st_.t)});
    last_info_.clear();

    if (action.a == 1) {
        switch (st_.phase) {
            case Phase::WaitBuySignal:
                st_.t1 = st_.t;
                st_.p_t1 = last_at(st_.t);
                st_.min_since_t1 = last_at(st_.t);
                st_.phase = Phase::WaitBuyOrder;
                break;
            case Phase::WaitBuyOrder:
                st_.t2 = st_.t;
                st_.p_t2 = fill_buy(st_.t);
                st_.phase = Phase::WaitSellSignal;
                break;
            case Phase::WaitSellSignal:
                st_.t3 = st_.t;
                st_.p_t3 = last_at(st_.t);
                st_.phase = Phase::WaitSellOrder;
                break;
            case Phase::WaitSellOrder:
                st_.t4 = st_.t;
                st_.p_t4 = fill_sell(st_.t);
                st_.phase = Phase::Done;
                finalize_trade();
                last_info_ = "traded";
                break;
            case Phase::Done: break;  // unreachable
        }
    } else {
        st_.t += 1;
        if (st_.phase == Phase::WaitBuySignal) {
            // The buy-signal reward needs a full deadline window of future
            // prices; when the day cannot provide one, no trade happens.
            if (st_.t + cfg_.deadline_s > ep_->end_ts()) {
                finalize_no_trade();
                last_info_ = "no_trade";
            }
        } else {
            if (st_.phase == Phase::WaitBuyOrder)
                st_.min_since_t1 = std::min(st_.min_since_t1, last_at(st_.t));
            if (st_.t == *st_.t1 + cfg_.deadline_s) {
                force_chain();
                last_info_ = "forced";
            }
        }
    }

    StepResult res;
    res.done = done();
    res.info = last_info_;
    res.obs = make_bundle();
    if (res.done) res.reward = outcome_.rewards;
    return res;
}

void TradingEnv::force_chain() {
    const int64_t td = st_.t;
    if (st_.phase == Phase::WaitBuyOrder) {
        st_.t2 = td;
        st_.p_t2 = fill_buy(td);
        st_.phase = Phase::WaitSellSignal;
    }
    if (st_.phase == Phase::WaitSellSignal) {
        st_.t3 = td;
        st_.p_t3 = last_at(td);
        st_.phase = Phase::WaitSellOrder;
    }
    if (st_.phase == Phase::WaitSellOrder) {
        st_.t4 = td;
        st_.p_t4 = fill_sell(td);
        st_.phase = Phase::Done;
        finalize_trade();
    }
}

void TradingEnv::finalize_trade() {
    std::vector<double> lasts;
    lasts.reserve(ep_->records.size());
    for (const TickRecord& r : ep_->records) lasts.push_back(r.last_price);
    const int64_t ts0 = ep_->start_ts();
    const size_t i1 = static_cast<size_t>(*st_.t1 - ts0);
    const size_t i2 = static_cast<size_t>(*st_.t2 - ts0);
    const size_t i3 = static_cast<size_t>(*st_.t3 - ts0);

    RewardVector rv;
    rv.primary[static_cast<int>(Agent::BSA)] = reward_bsa(lasts, i1, cfg_.deadline_s);
    rv.primary[static_cast<int>(Agent::BOA)] =
        cfg_.boa_reward_sign * reward_boa(lasts, i1, i2);
    const int lt3 = static_cast<int>(*st_.t1 + cfg_.deadline_s - *st_.t3);
    rv.primary[static_cast<int>(Agent::SSA)] = reward_ssa(lasts, i3, lt3);
    rv.primary[static_cast<int>(Agent::SOA)] = reward_soa(*st_.p_t2, *st_.p_t4);
    rv.shared = shared_rewards(rv.primary);
    rv.gross_return = reward_soa(*st_.p_t2, *st_.p_t4);
    rv.net_return = apply_costs(rv.gross_return, cfg_);

    outcome_.traded = true;
    outcome_.t1 = st_.t1;
    outcome_.t2 = st_.t2;
    outcome_.t3 = st_.t3;
    outcome_.t4 = st_.t4;
    outcome_.p_t1 = st_.p_t1;
    outcome_.p_t2 = st_.p_t2;
    outcome_.p_t3 = st_.p_t3;
    outcome_.p_t4 = st_.p_t4;
    outcome_.rewards = rv;
}

void TradingEnv::finalize_no_trade() {
    st_.phase = Phase::Done;
    outcome_ = EpisodeOutcome{};  // traded=false, all rewards zero
}

void TradingEnv::write_trace(std::ostream& out) const {
    using nlohmann::json;
    for (const TraceStep& s : trace_) {
        json j{{"t", s.t},
               {"phase", to_string(s.phase)},
               {"agent", to_string(s.agent)},
               {"action", s.action},
               {"last_price", s.last_price}};
        out << j.dump() << '\n';
    }
    const EpisodeOutcome& o = outcome_;
    json term;
    auto put_ts = [&term](const char* key, const std::optional<int64_t>& v) {
        if (v) term[key] = *v; else term[key] = nullptr;
    };
    auto put_px = [&term](const char* key, const std::optional<double>& v) {
        if (v) term[key] = *v; else term[key] = nullptr;
    };
    put_ts("t1", o.t1);
    put_ts("t2", o.t2);
    put_ts("t3", o.t3);
    put_ts("t4", o.t4);
    put_px("p_t2", o.p_t2);
    put_px("p_t4", o.p_t4);
    term["gross"] = o.rewards.gross_return;
    term["net"] = o.rewards.net_return;
    term["primary"] = o.rewards.primary;
    term["shared"] = o.rewards.shared;
    term["traded"] = o.traded;
    out << term.dump() << '\n';
}

}  // namespace sgym
