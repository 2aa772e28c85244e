#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "sgym/episode.hpp"
#include "sgym/errors.hpp"
#include "sgym/pipeline.hpp"
#include "sgym/synth.hpp"

using namespace sgym;
namespace fs = std::filesystem;

namespace {

struct TempTree {
    fs::path root;
    TempTree() {
        root = fs::temp_directory_path() / ("sgym_pipe_" + std::to_string(::getpid()));
        fs::remove_all(root);
        fs::create_directories(root);
    }
    ~TempTree() { fs::remove_all(root); }
    std::string sub(const char* name) const { return (root / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(bool(is));
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

size_t line_count(const std::string& text) {
    size_t n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

// A deliberately small end-to-end configuration: 4 pattern days of 450
// seconds, a tiny network, one pretrain epoch, six RL episodes.
RunConfig small_config(const TempTree& tree) {
    return RunConfig::from_kv({
        {"data.dir", tree.sub("data")},
        {"out.dir", tree.sub("out")},
        {"seed", "9"},
        {"net.c3_out", "2"},
        {"net.c1_out", "4"},
        {"net.dense_width", "16"},
        {"pretrain.epochs", "1"},
        {"pretrain.batch", "8"},
        {"pretrain.stride", "50"},
        {"pretrain.samples_per_episode", "8"},
        {"train.episodes", "6"},
        {"train.batch", "4"},
        {"train.learn_start", "4"},
        {"train.update_every", "64"},
        {"train.target_sync", "50"},
        {"synth.kind", "pattern"},
        {"synth.days", "4"},
        {"synth.day_len", "450"},
        {"synth.spikes_max", "1"},
    });
}

}  // namespace

TEST_CASE("full pipeline run produces every artifact and is resumable") {
    TempTree tree;
    RunConfig cfg = small_config(tree);
    fs::create_directories(cfg.data_dir);
    synth_generate(cfg.synth);

    Pipeline pipe(cfg);
    pipe.run_all();
    const OutPaths& p = pipe.paths();

    // Filter stage: all four pattern days clear the 15% bar; the split takes
    // floor(0.7 * 4) = 2 for training.
    REQUIRE(fs::exists(p.train_list()));
    REQUIRE(fs::exists(p.test_list()));
    CHECK(line_count(slurp(p.train_list())) == 2);
    CHECK(line_count(slurp(p.test_list())) == 2);

    // Pretrain stage: one checkpoint per role plus the metrics file.
    for (int i = 0; i < 4; ++i)
        CHECK(fs::exists(p.pretrain_ckpt(Agent(i))));
    REQUIRE(fs::exists(p.pretrain_metrics()));
    {
        auto m = nlohmann::json::parse(slurp(p.pretrain_metrics()));
        for (const char* role : {"bsa", "boa", "ssa", "soa"}) {
            REQUIRE(m.contains(role));
            CHECK(m[role].contains("mae"));
            CHECK(m[role].contains("theils_u"));
            CHECK(m[role]["n_train"].get<size_t>() > 0);
        }
    }

    // RL stage: curves plus frozen/learner checkpoints per role.
    REQUIRE(fs::exists(p.curves_csv()));
    CHECK(line_count(slurp(p.curves_csv())) == 7);  // header + 6 episodes
    CHECK(slurp(p.curves_csv()).rfind("episode,reward_bsa,", 0) == 0);
    for (int i = 0; i < 4; ++i) {
        CHECK(fs::exists(p.frozen_ckpt(Agent(i))));
        CHECK(fs::exists(p.learn_ckpt(Agent(i))));
    }

    // The frozen checkpoint must equal the pretrain checkpoint bit for bit
    // (same parameters, same metadata).
    for (int i = 0; i < 4; ++i)
        CHECK(slurp(p.frozen_ckpt(Agent(i))) == slurp(p.pretrain_ckpt(Agent(i))));

    // Backtest stage: one trace per episode per split, and the report.
    CHECK(std::distance(fs::directory_iterator(p.trace_dir("train")),
                        fs::directory_iterator{}) == 2);
    CHECK(std::distance(fs::directory_iterator(p.trace_dir("test")),
                        fs::directory_iterator{}) == 2);
    REQUIRE(fs::exists(p.report()));
    {
        auto r = nlohmann::json::parse(slurp(p.report()));
        for (const char* split : {"train", "test"}) {
            REQUIRE(r.contains(split));
            for (const char* key : {"profit_per_episode_pct", "sharpe_ratio", "mdd_pct",
                                    "calmar_ratio", "episodes", "trade_rate"})
                CHECK(r[split].contains(key));
        }
        CHECK(r["train"]["episodes"].get<int>() == 2);
        CHECK(r["test"]["episodes"].get<int>() == 2);
        CHECK(r["seed"].get<uint64_t>() == 9);
    }

    // Run manifest records every stage plus the config identity.
    {
        auto m = nlohmann::json::parse(slurp(p.run_manifest()));
        CHECK(m["seed"].get<uint64_t>() == 9);
        CHECK(m["config_hash"].get<std::string>().size() == 16);
        for (const char* stage : {"filter", "pretrain", "train", "backtest"})
            CHECK(m["stages"].contains(stage));
        CHECK(m["stages"]["train"]["frozen_unchanged"].get<std::string>() == "true");
    }

    // Second run: completed stages skip, the backtest recomputes to identical
    // bytes (greedy evaluation is deterministic).
    const std::string report_before = slurp(p.report());
    const std::string curves_before = slurp(p.curves_csv());
    const std::string pre_before = slurp(p.pretrain_ckpt(Agent::BSA));
    Pipeline again(cfg);
    again.run_all();
    CHECK(slurp(p.report()) == report_before);
    CHECK(slurp(p.curves_csv()) == curves_before);
    CHECK(slurp(p.pretrain_ckpt(Agent::BSA)) == pre_before);
}

TEST_CASE("stages demand their prerequisites") {
    TempTree tree;
    RunConfig cfg = small_config(tree);
    fs::create_directories(cfg.data_dir);
    synth_generate(cfg.synth);

    Pipeline pipe(cfg);
    CHECK_THROWS_AS(pipe.run_train(), DataError);           // no episode lists yet
    CHECK_THROWS_AS(pipe.run_backtest(), MissingPretrain);  // no checkpoints either
    pipe.run_filter();
    CHECK_THROWS_AS(pipe.run_train(), MissingPretrain);
    CHECK_THROWS_AS(pipe.run_backtest(), MissingPretrain);

    // A fresh out.dir so the filter stage cannot resume from earlier lists;
    // it must then notice that data.dir was never set.
    RunConfig no_data = cfg;
    no_data.data_dir.clear();
    no_data.out_dir = tree.sub("out2");
    Pipeline broken(no_data);
    CHECK_THROWS_AS(broken.run_filter(), ConfigError);
}
