#include "sgym/synth.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>
#include "sgym/errors.hpp"
#include "sgym/rng.hpp"

namespace sgym {

namespace {

constexpr int64_t kDayStartTs = 34200;  // 09:30:00 as seconds of day

std::string date_for_day(int day_index) {
    using namespace std::chrono;
    const sys_days base = sys_days{year{2018} / April / 2};
    const year_month_day ymd{base + days{day_index}};
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", int(ymd.year()),
                  unsigned(ymd.month()), unsigned(ymd.day()));
    return std::string(buf);
}

std::vector<int> schedule_spikes(const SynthConfig& cfg, Rng& rng) {
    const int lo = 150;
    const int hi = cfg.day_len - cfg.jump_delay_s - 130;
    if (hi < lo)
        throw ConfigError("pattern day_len too short for a planted spike: need >= " +
                          std::to_string(lo + cfg.jump_delay_s + 130) + " seconds");
    const int want = int(rng.between(cfg.spikes_min, cfg.spikes_max));
    std::vector<int> starts;
    for (int attempt = 0; attempt < 200 && int(starts.size()) < want; ++attempt) {
        const int s = int(rng.between(lo, hi));
        bool ok = true;
        for (int prev : starts)
            if (std::abs(s - prev) < cfg.spike_gap_min) ok = false;
        if (ok) starts.push_back(s);
    }
    if (starts.empty())
        throw ConfigError("could not place any spike; lower spike_gap_min or raise day_len");
    std::sort(starts.begin(), starts.end());
    return starts;
}

SynthDay make_day(const SynthConfig& cfg, int day_index) {
    Rng rng(Rng::mix(cfg.seed, uint64_t(day_index)));
    SynthDay day;
    day.ticker = cfg.ticker;
    day.date = date_for_day(day_index);
    day.meta.ticker = day.ticker;
    day.meta.prev_close = cfg.base_price;
    day.meta.shares_outstanding = 10'000'000.0;
    day.meta.shares_majority = 3'000'000.0;

    if (cfg.day_len < 2) throw ConfigError("day_len must be at least 2 seconds");
    if (cfg.base_price <= 0.0) throw ConfigError("base_price must be positive");

    std::vector<int> spikes;
    std::set<int> jump_at;
    if (cfg.kind == SynthConfig::Kind::Pattern) {
        spikes = schedule_spikes(cfg, rng);
        for (int s : spikes) {
            jump_at.insert(s + cfg.jump_delay_s);
            day.patterns.push_back(
                {kDayStartTs + s, kDayStartTs + s + cfg.jump_delay_s});
        }
    }
    auto in_spike = [&](int t) {
        for (int s : spikes)
            if (t >= s && t < s + cfg.spike_len) return true;
        return false;
    };

    const double p0 = cfg.kind == SynthConfig::Kind::Pattern
                          ? cfg.base_price * (1.0 + cfg.open_gap_pct / 100.0)
                          : cfg.base_price;
    const double tick = std::max(0.01, std::round(p0 * 1e-4 * 100.0) / 100.0);

    day.records.resize(size_t(cfg.day_len));
    double price = p0;
    double high = p0, low = p0;
    for (int t = 0; t < cfg.day_len; ++t) {
        if (t > 0) {
            switch (cfg.kind) {
                case SynthConfig::Kind::RandomWalk:
                    price *= std::exp(cfg.rw_sigma * rng.normal());
                    break;
                case SynthConfig::Kind::Ramp:
                    price = p0 * (1.0 + cfg.ramp_total_pct / 100.0 * double(t) /
                                            double(cfg.day_len - 1));
                    break;
                case SynthConfig::Kind::Pattern:
                    if (jump_at.count(t)) {
                        // The planted move: exact multiplier, no noise or decay,
                        // so last[t] == (1 + jump_pct/100) * last[t-1] holds bit
                        // for bit after a CSV round trip.
                        price *= 1.0 + cfg.jump_pct / 100.0;
                    } else {
                        price *= (1.0 - cfg.decay_per_s) *
                                 std::exp(cfg.noise_sigma * rng.normal());
                    }
                    break;
            }
        }
        high = std::max(high, price);
        low = std::min(low, price);

        TickRecord& r = day.records[size_t(t)];
        r.ts = kDayStartTs + t;
        r.last_price = price;
        for (int l = 0; l < 10; ++l) {
            r.ask_price[l] = price + tick * double(l + 1);
            r.bid_price[l] = price - tick * double(l + 1);
            r.bid_amount[l] = std::max(
                1.0, std::round(cfg.base_volume * (1.0 + 0.3 * l) *
                                std::exp(0.25 * rng.normal())));
            r.ask_amount[l] = std::max(
                1.0, std::round(cfg.base_volume * (1.0 + 0.3 * l) *
                                std::exp(0.25 * rng.normal())));
        }
        if (in_spike(t))
            r.bid_amount[0] = std::round(r.bid_amount[0] * cfg.spike_mult);

        const double u = rng.uniform();
        if (u < 0.05) {
            r.trade_volume = 0.0;
            r.sell_dir_volume = r.buy_dir_volume = r.total_dir_volume = 0.0;
            r.wavg_sell_price = r.wavg_buy_price = r.wavg_total_price = price;
        } else {
            const double vol = std::max(
                1.0, std::round(cfg.base_volume * 0.2 * std::exp(0.5 * rng.normal())));
            const double bvol = std::round(vol * rng.uniform(0.3, 0.7));
            r.trade_volume = vol;
            r.buy_dir_volume = bvol;
            r.sell_dir_volume = vol - bvol;
            r.total_dir_volume = vol;
            r.wavg_sell_price = price * (1.0 + 1e-4 * rng.normal());
            r.wavg_buy_price = price * (1.0 + 1e-4 * rng.normal());
            r.wavg_total_price = price * (1.0 + 1e-4 * rng.normal());
        }
        r.open_price = p0;
        r.high_price = high;
        r.low_price = low;
    }
    return day;
}

}  // namespace

SynthConfig::Kind synth_kind_from_string(const std::string& s) {
    if (s == "random-walk") return SynthConfig::Kind::RandomWalk;
    if (s == "pattern") return SynthConfig::Kind::Pattern;
    if (s == "ramp") return SynthConfig::Kind::Ramp;
    throw ConfigError("unknown synth kind '" + s +
                      "' (expected random-walk, pattern, or ramp)");
}

std::vector<SynthDay> synth_days(const SynthConfig& cfg) {
    if (cfg.days < 1) throw ConfigError("synth days must be at least 1");
    std::vector<SynthDay> out;
    out.reserve(size_t(cfg.days));
    for (int d = 0; d < cfg.days; ++d) out.push_back(make_day(cfg, d));
    return out;
}

void synth_generate(const SynthConfig& cfg) {
    if (cfg.out_dir.empty()) throw ConfigError("synth out_dir must be set");
    std::filesystem::create_directories(cfg.out_dir);
    for (const SynthDay& day : synth_days(cfg)) {
        const std::string stem = cfg.out_dir + "/" + day.ticker + "_" + day.date;
        write_ticks_file(stem + ".csv", day.records);
        write_meta_file(stem + ".json", day.meta);
        if (cfg.kind == SynthConfig::Kind::Pattern) {
            nlohmann::json ev;
            ev["patterns"] = nlohmann::json::array();
            for (const PlantedPattern& p : day.patterns)
                ev["patterns"].push_back(
                    {{"spike_ts", p.spike_ts}, {"jump_ts", p.jump_ts}});
            std::ofstream os(stem + ".events.json");
            if (!os) throw IoFailure("cannot write " + stem + ".events.json");
            os << ev.dump(2) << "\n";
        }
    }
}

std::vector<EpisodePtr> synth_episodes(const SynthConfig& cfg) {
    std::vector<EpisodePtr> eps;
    for (SynthDay& day : synth_days(cfg))
        eps.push_back(make_episode(day.ticker, day.date, std::move(day.records),
                                   day.meta));
    return eps;
}

}  // namespace sgym
