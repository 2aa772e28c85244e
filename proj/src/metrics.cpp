#include "sgym/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "sgym/errors.hpp"

namespace fs = std::filesystem;

namespace sgym {

double profit_per_episode(std::span<const EpisodeResult> results) {
    if (results.empty()) throw EmptyResults("no episode results");
    double sum = 0.0;
    for (const EpisodeResult& r : results) sum += r.net_return;
    return sum / static_cast<double>(results.size());
}

double sharpe(std::span<const EpisodeResult> results) {
    if (results.size() < 2) throw SigmaZero("sharpe needs at least 2 results");
    const double mean = profit_per_episode(results);
    double ss = 0.0;
    for (const EpisodeResult& r : results) {
        const double d = r.net_return - mean;
        ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(results.size() - 1));
    if (sd == 0.0) throw SigmaZero("returns have zero standard deviation");
    return mean / sd;
}

double max_drawdown(std::span<const EpisodeResult> results) {
    if (results.empty()) throw EmptyResults("no episode results");
    double equity = 1.0;
    double peak = 1.0;  // initial equity counts as a peak
    double mdd = 0.0;
    for (const EpisodeResult& r : results) {
        equity *= 1.0 + r.net_return / 100.0;
        peak = std::max(peak, equity);
        mdd = std::min(mdd, (equity / peak - 1.0) * 100.0);
    }
    return mdd;
}

double total_compounded_return_pct(std::span<const EpisodeResult> results) {
    if (results.empty()) throw EmptyResults("no episode results");
    double equity = 1.0;
    for (const EpisodeResult& r : results) equity *= 1.0 + r.net_return / 100.0;
    return (equity - 1.0) * 100.0;
}

double calmar(std::span<const EpisodeResult> results) {
    const double mdd = max_drawdown(results);
    if (mdd == 0.0) throw ZeroDrawdown("calmar undefined for monotone equity");
    return total_compounded_return_pct(results) / std::abs(mdd);
}

MetricsReport compute_report(std::span<const EpisodeResult> results) {
    MetricsReport rep;
    rep.episodes = results.size();
    rep.profit_per_episode = profit_per_episode(results);
    try {
        rep.sharpe = sharpe(results);
    } catch (const SigmaZero&) {
    }
    rep.mdd = max_drawdown(results);
    try {
        rep.calmar = calmar(results);
    } catch (const ZeroDrawdown&) {
    }
    size_t traded = 0;
    for (const EpisodeResult& r : results) traded += r.traded ? 1 : 0;
    rep.trade_rate = static_cast<double>(traded) / static_cast<double>(results.size());
    return rep;
}

std::vector<EpisodeResult> read_trace_dir(const std::string& dir) {
    if (!fs::is_directory(dir)) throw IoFailure("not a directory: " + dir);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw EmptyResults("no episode traces under " + dir);

    std::vector<EpisodeResult> out;
    for (const fs::path& f : files) {
        std::ifstream in(f);
        if (!in) throw IoFailure("cannot open trace: " + f.string());
        std::string line, last_line;
        while (std::getline(in, line))
            if (!line.empty()) last_line = line;
        if (last_line.empty()) throw EmptyResults("empty trace file: " + f.string());
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(last_line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError("bad trace terminal line in " + f.string() + ": " + e.what());
        }
        EpisodeResult r;
        r.id = f.stem().string();
        r.net_return = j.value("traded", false) ? j.at("net").get<double>() : 0.0;
        r.traded = j.value("traded", false);
        auto opt_ts = [&j](const char* key) -> std::optional<int64_t> {
            if (j.contains(key) && !j.at(key).is_null()) return j.at(key).get<int64_t>();
            return std::nullopt;
        };
        r.t1 = opt_ts("t1");
        r.t2 = opt_ts("t2");
        r.t3 = opt_ts("t3");
        r.t4 = opt_ts("t4");
        out.push_back(std::move(r));
    }
    return out;
}

namespace {

nlohmann::json report_block(const MetricsReport& rep) {
    nlohmann::json j;
    j["profit_per_episode_pct"] = rep.profit_per_episode;
    if (rep.sharpe) j["sharpe_ratio"] = *rep.sharpe; else j["sharpe_ratio"] = nullptr;
    j["mdd_pct"] = rep.mdd;
    if (rep.calmar) j["calmar_ratio"] = *rep.calmar; else j["calmar_ratio"] = nullptr;
    j["episodes"] = rep.episodes;
    j["trade_rate"] = rep.trade_rate;
    return j;
}

}  // namespace

void write_report(const std::string& path, const MetricsReport& train,
                  const MetricsReport& test, uint64_t seed, uint64_t config_hash) {
    nlohmann::json j;
    j["train"] = report_block(train);
    j["test"] = report_block(test);
    j["seed"] = seed;
    j["config_hash"] = config_hash;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure("cannot write report: " + path);
    out << j.dump(2) << '\n';
}

double mae(std::span<const double> pred, std::span<const double> actual) {
    if (pred.empty() || pred.size() != actual.size())
        throw EmptyResults("mae needs matching nonempty inputs");
    double sum = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) sum += std::abs(pred[i] - actual[i]);
    return sum / static_cast<double>(pred.size());
}

double mape(std::span<const double> pred, std::span<const double> actual) {
    if (pred.empty() || pred.size() != actual.size())
        throw EmptyResults("mape needs matching nonempty inputs");
    double sum = 0.0;
    size_t n = 0;
    for (size_t i = 0; i < pred.size(); ++i) {
        if (std::abs(actual[i]) <= 1e-12) continue;  // percent error undefined
        sum += std::abs((pred[i] - actual[i]) / actual[i]);
        ++n;
    }
    if (n == 0) throw EmptyResults("mape: all actual values are ~0");
    return sum / static_cast<double>(n) * 100.0;
}

double theils_u(std::span<const double> pred, std::span<const double> actual) {
    if (pred.empty() || pred.size() != actual.size())
        throw EmptyResults("theils_u needs matching nonempty inputs");
    double se = 0.0, sp = 0.0, sa = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - actual[i];
        se += d * d;
        sp += pred[i] * pred[i];
        sa += actual[i] * actual[i];
    }
    const double n = static_cast<double>(pred.size());
    const double denom = std::sqrt(sp / n) + std::sqrt(sa / n);
    if (denom == 0.0) return 0.0;  // both identically zero: perfect agreement
    return std::sqrt(se / n) / denom;
}

double correlation(std::span<const double> pred, std::span<const double> actual) {
    if (pred.size() < 2 || pred.size() != actual.size())
        throw EmptyResults("correlation needs >= 2 matching points");
    const double n = static_cast<double>(pred.size());
    double mp = 0.0, ma = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) {
        mp += pred[i];
        ma += actual[i];
    }
    mp /= n;
    ma /= n;
    double spa = 0.0, spp = 0.0, saa = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) {
        spa += (pred[i] - mp) * (actual[i] - ma);
        spp += (pred[i] - mp) * (pred[i] - mp);
        saa += (actual[i] - ma) * (actual[i] - ma);
    }
    if (spp == 0.0 || saa == 0.0) throw SigmaZero("correlation undefined for constant series");
    return spa / std::sqrt(spp * saa);
}

}  // namespace sgym
