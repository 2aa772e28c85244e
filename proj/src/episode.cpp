#include "sgym/episode.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "sgym/errors.hpp"
#include "sgym/observation.hpp"
#include "sgym/rng.hpp"

namespace fs = std::filesystem;

namespace sgym {

EpisodePtr make_episode(std::string ticker, std::string date, std::vector<TickRecord> records,
                        TickerMeta meta) {
    if (records.empty()) throw EmptyStream("episode " + ticker + " " + date + " has no records");
    validate_meta(meta);
    auto ep = std::make_shared<Episode>();
    ep->ticker = std::move(ticker);
    ep->date = std::move(date);
    ep->records = std::move(records);
    ep->meta = std::move(meta);
    double peak = -1e300;
    for (const TickRecord& r : ep->records)
        peak = std::max(peak, scale_price(r.last_price, ep->meta.prev_close));
    ep->rise_pct = peak;
    return ep;
}

std::vector<EpisodePtr> load_universe(const std::string& dir) {
    if (!fs::is_directory(dir)) throw IoFailure("not a directory: " + dir);
    std::vector<fs::path> csvs;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".csv")
            csvs.push_back(entry.path());
    std::sort(csvs.begin(), csvs.end());

    std::vector<EpisodePtr> out;
    out.reserve(csvs.size());
    for (const fs::path& csv : csvs) {
        const std::string stem = csv.stem().string();  // <ticker>_<date>
        const size_t sep = stem.rfind('_');
        if (sep == std::string::npos)
            throw IoFailure("tick file name must be <ticker>_<date>.csv: " + csv.string());
        const std::string ticker = stem.substr(0, sep);
        const std::string date = stem.substr(sep + 1);
        fs::path meta_path = csv;
        meta_path.replace_extension(".json");
        TickerMeta meta = load_meta(meta_path.string());
        out.push_back(make_episode(ticker, date, load_ticks(csv.string(), meta), std::move(meta)));
    }
    return out;
}

std::vector<EpisodePtr> filter_universe(const std::vector<EpisodePtr>& episodes,
                                        double threshold_pct) {
    std::vector<EpisodePtr> out;
    for (const EpisodePtr& ep : episodes)
        if (ep->rise_pct >= threshold_pct) out.push_back(ep);
    return out;
}

DatasetSplit split_train_test(std::vector<EpisodePtr> episodes, double ratio, uint64_t seed) {
    if (episodes.size() < 2)
        throw TooFewEpisodes("need at least 2 episodes to split, have " +
                             std::to_string(episodes.size()));
    if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("split ratio must be in (0,1)");
    Rng rng(Rng::mix(seed, 0x54117ULL));
    rng.shuffle(episodes);
    const size_t n_train = static_cast<size_t>(ratio * static_cast<double>(episodes.size()));
    DatasetSplit split;
    split.seed = seed;
    split.ratio = ratio;
    split.train.assign(episodes.begin(), episodes.begin() + n_train);
    split.test.assign(episodes.begin() + n_train, episodes.end());
    return split;
}

void write_manifest(const std::string& path, const std::vector<EpisodePtr>& episodes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure("cannot write manifest: " + path);
    for (const EpisodePtr& ep : episodes) out << ep->ticker << ',' << ep->date << '\n';
    if (!out) throw IoFailure("write failed: " + path);
}

std::vector<std::pair<std::string, std::string>> read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoFailure("cannot open manifest: " + path);
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const size_t comma = line.find(',');
        if (comma == std::string::npos) throw IoFailure("bad manifest line: " + line);
        out.emplace_back(line.substr(0, comma), line.substr(comma + 1));
    }
    return out;
}

std::vector<EpisodePtr> select_by_manifest(const std::vector<EpisodePtr>& universe,
                                           const std::string& manifest_path) {
    std::vector<EpisodePtr> out;
    for (const auto& [ticker, date] : read_manifest(manifest_path)) {
        auto it = std::find_if(universe.begin(), universe.end(), [&](const EpisodePtr& ep) {
            return ep->ticker == ticker && ep->date == date;
        });
        if (it == universe.end())
            throw IoFailure("manifest entry not found in universe: " + ticker + "," + date);
        out.push_back(*it);
    }
    return out;
}

}  // namespace sgym
