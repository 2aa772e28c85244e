#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sgym {

struct EpisodeResult {
    std::string id;            // "<ticker>,<date>" or trace file stem
    double net_return = 0.0;   // percent, after costs; 0 when no trade
    bool traded = false;
    std::optional<int64_t> t1, t2, t3, t4;
};

// Arithmetic mean of net returns, percent.
double profit_per_episode(std::span<const EpisodeResult> results);

// mean / sample standard deviation (n-1), per-episode, unannualized.
double sharpe(std::span<const EpisodeResult> results);

// Largest peak-to-trough decline of the compounded equity curve
// E_k = prod(1 + r_i/100), starting from E_0 = 1 (included in peaks). <= 0.
double max_drawdown(std::span<const EpisodeResult> results);

// Total compounded return percent divided by |max drawdown|.
double calmar(std::span<const EpisodeResult> results);

double total_compounded_return_pct(std::span<const EpisodeResult> results);

struct MetricsReport {
    double profit_per_episode = 0.0;
    std::optional<double> sharpe;  // absent when returns are degenerate
    double mdd = 0.0;
    std::optional<double> calmar;  // absent when drawdown is zero
    size_t episodes = 0;
    double trade_rate = 0.0;
};

// Degenerate cases (zero sigma, zero drawdown) become absent fields instead
// of errors so a report can always be produced.
MetricsReport compute_report(std::span<const EpisodeResult> results);

// Reads every episode trace (*.jsonl) under dir; uses the terminal summary
// line of each file.
std::vector<EpisodeResult> read_trace_dir(const std::string& dir);

// report.json with one four-row metrics block per split.
void write_report(const std::string& path, const MetricsReport& train,
                  const MetricsReport& test, uint64_t seed, uint64_t config_hash);

// --- Regression-quality metrics for the pretraining stage ---

double mae(std::span<const double> pred, std::span<const double> actual);
// Mean absolute percent error; terms with |actual| <= 1e-12 are skipped.
double mape(std::span<const double> pred, std::span<const double> actual);
// Theil's U1: RMSE / (RMS(pred) + RMS(actual)); 0 for a perfect predictor.
double theils_u(std::span<const double> pred, std::span<const double> actual);
double correlation(std::span<const double> pred, std::span<const double> actual);

}  // namespace sgym
