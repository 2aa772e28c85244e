// Command-line driver for the scalping-gym pipeline.
//
//   sgym synth-gen --set synth.kind=pattern ...   generate synthetic tick days
//   sgym filter    --config run.cfg               filter + split the universe
//   sgym pretrain  --config run.cfg               supervised stage (4 roles)
//   sgym train     --config run.cfg               DDQN fine-tuning stage
//   sgym backtest  --config run.cfg               greedy replay + report.json
//   sgym run       --config run.cfg               all stages in order
//
// Exit codes: 0 ok, 1 unexpected error, 2 configuration, 3 data, 4 training.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sgym/config.hpp"
#include "sgym/errors.hpp"
#include "sgym/pipeline.hpp"
#include "sgym/synth.hpp"

namespace {

struct CliOpts {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string data_dir, out_dir;
    std::optional<uint64_t> seed;
};

sgym::RunConfig load_config(const CliOpts& o) {
    std::vector<std::string> ov = o.overrides;
    if (!o.data_dir.empty()) ov.push_back("data.dir=" + o.data_dir);
    if (!o.out_dir.empty()) ov.push_back("out.dir=" + o.out_dir);
    if (o.seed) ov.push_back("seed=" + std::to_string(*o.seed));
    if (!o.config_path.empty()) return sgym::RunConfig::from_file(o.config_path, ov);
    std::map<std::string, std::string> kv;
    for (const std::string& s : ov) {
        auto eq = s.find('=');
        if (eq == std::string::npos)
            throw sgym::ConfigError("override must be key=value, got '" + s + "'");
        kv[s.substr(0, eq)] = s.substr(eq + 1);
    }
    return sgym::RunConfig::from_kv(kv);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tick-replay scalping gym: episode filtering, supervised "
                 "pretraining, DDQN fine-tuning, and backtesting"};
    app.require_subcommand(1);

    CliOpts opts;
    app.add_option("-c,--config", opts.config_path, "key=value config file");
    app.add_option("-s,--set", opts.overrides,
                   "override a config key, e.g. --set train.episodes=500");
    app.add_option("--data", opts.data_dir, "override data.dir");
    app.add_option("--out", opts.out_dir, "override out.dir");
    app.add_option("--seed", opts.seed, "override seed");

    auto* synth_cmd = app.add_subcommand(
        "synth-gen", "generate synthetic tick days into data.dir");
    auto* filter_cmd = app.add_subcommand(
        "filter", "filter the universe by intraday rise and split train/test");
    auto* pretrain_cmd =
        app.add_subcommand("pretrain", "supervised pretraining of all four roles");
    auto* train_cmd =
        app.add_subcommand("train", "DDQN fine-tuning on top of frozen pretrained Q");
    auto* backtest_cmd = app.add_subcommand(
        "backtest", "greedy policy replay over train+test with metrics report");
    auto* run_cmd = app.add_subcommand("run", "filter, pretrain, train, backtest");

    // Global options are documented after the subcommand (sgym run --config
    // ...), so unmatched subcommand arguments must fall through to the app.
    for (CLI::App* sub :
         {synth_cmd, filter_cmd, pretrain_cmd, train_cmd, backtest_cmd, run_cmd})
        sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        sgym::RunConfig cfg = load_config(opts);
        if (synth_cmd->parsed()) {
            if (cfg.synth.out_dir.empty())
                throw sgym::ConfigError("synth-gen needs data.dir (or --data)");
            sgym::synth_generate(cfg.synth);
            std::cout << "[synth] wrote " << cfg.synth.days << " day(s) to "
                      << cfg.synth.out_dir << "\n";
            return 0;
        }
        sgym::Pipeline pipe(cfg);
        if (filter_cmd->parsed()) pipe.run_filter();
        if (pretrain_cmd->parsed()) pipe.run_pretrain();
        if (train_cmd->parsed()) pipe.run_train();
        if (backtest_cmd->parsed()) pipe.run_backtest();
        if (run_cmd->parsed()) pipe.run_all();
        return 0;
    } catch (const sgym::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const sgym::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const sgym::TrainError& e) {
        std::cerr << "training error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
