#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "sgym/tick.hpp"

namespace sgym {

// One ticker-day of gap-free per-second records plus the scaling context.
struct Episode {
    std::string ticker;
    std::string date;  // YYYY-MM-DD
    std::vector<TickRecord> records;
    TickerMeta meta;
    double rise_pct = 0.0;  // max intraday last_price scaled vs prev_close

    int64_t start_ts() const { return records.front().ts; }
    int64_t end_ts() const { return records.back().ts; }
    std::string id() const { return ticker + "," + date; }
};

using EpisodePtr = std::shared_ptr<const Episode>;

// Computes rise_pct and wraps the pieces into an immutable Episode.
EpisodePtr make_episode(std::string ticker, std::string date, std::vector<TickRecord> records,
                        TickerMeta meta);

// Loads every <ticker>_<date>.csv + .json pair under dir, sorted by (ticker, date).
std::vector<EpisodePtr> load_universe(const std::string& dir);

// Episodes whose intraday peak gain vs prev_close reaches threshold (inclusive).
std::vector<EpisodePtr> filter_universe(const std::vector<EpisodePtr>& episodes,
                                        double threshold_pct = 15.0);

struct DatasetSplit {
    std::vector<EpisodePtr> train;
    std::vector<EpisodePtr> test;
    uint64_t seed = 0;
    double ratio = 0.7;
};

// Seeded shuffle, then floor(ratio*n) train / remainder test.
DatasetSplit split_train_test(std::vector<EpisodePtr> episodes, double ratio, uint64_t seed);

// Manifest files: one "ticker,date" per line.
void write_manifest(const std::string& path, const std::vector<EpisodePtr>& episodes);
std::vector<std::pair<std::string, std::string>> read_manifest(const std::string& path);
std::vector<EpisodePtr> select_by_manifest(const std::vector<EpisodePtr>& universe,
                                           const std::string& manifest_path);

}  // namespace sgym
