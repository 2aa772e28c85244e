#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sgym/episode.hpp"
#include "sgym/tick.hpp"

namespace sgym {

// Synthetic tick-day generators standing in for proprietary exchange data.
//  random-walk : geometric per-second random walk (null-hypothesis market)
//  pattern     : gap-up open, slow decay, and a planted precursor — a level-1
//                bid-volume spike followed exactly jump_delay_s later by a
//                deterministic +jump_pct price move (the learnability fixture)
//  ramp        : noiseless linear rise (known intraday peak, filter fixtures)
struct SynthConfig {
    enum class Kind { RandomWalk, Pattern, Ramp };
    Kind kind = Kind::RandomWalk;
    uint64_t seed = 0;
    int days = 10;
    int day_len = 900;  // seconds per day
    std::string out_dir;
    std::string ticker = "SYN0";
    double base_price = 10000.0;
    double base_volume = 2000.0;
    // random-walk
    double rw_sigma = 0.0005;  // per-second log-return stdev
    // ramp
    double ramp_total_pct = 20.0;  // rise over the whole day
    // pattern
    double open_gap_pct = 15.5;    // open above prev close (clears the filter)
    double decay_per_s = 0.00004;  // slow multiplicative bleed
    double noise_sigma = 0.0001;   // per-second log noise
    int spikes_min = 1, spikes_max = 2;
    int spike_gap_min = 260;  // min seconds between spike starts
    int spike_len = 3;
    double spike_mult = 50.0;  // level-1 bid amount multiplier during spikes
    int jump_delay_s = 20;     // seconds from spike start to the price move
    double jump_pct = 1.0;     // deterministic move size
};

SynthConfig::Kind synth_kind_from_string(const std::string& s);

struct PlantedPattern {
    int64_t spike_ts = 0;  // first second of the volume spike
    int64_t jump_ts = 0;   // second of the deterministic price move
};

struct SynthDay {
    std::string ticker;
    std::string date;
    TickerMeta meta;
    std::vector<TickRecord> records;
    std::vector<PlantedPattern> patterns;  // pattern kind only
};

// Deterministic in (seed, day index): same config -> identical days.
std::vector<SynthDay> synth_days(const SynthConfig& cfg);

// Writes <ticker>_<date>.csv + .json (and .events.json for the pattern kind)
// under cfg.out_dir.
void synth_generate(const SynthConfig& cfg);

// In-memory convenience: generated days as gym-ready episodes.
std::vector<EpisodePtr> synth_episodes(const SynthConfig& cfg);

}  // namespace sgym
