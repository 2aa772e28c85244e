#include "sgym/pipeline.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>
#include "sgym/checkpoint.hpp"
#include "sgym/errors.hpp"
#include "sgym/metrics.hpp"

namespace sgym {

namespace fs = std::filesystem;

namespace {

std::string role_slug(Agent a) {
    switch (a) {
        case Agent::BSA: return "bsa";
        case Agent::BOA: return "boa";
        case Agent::SSA: return "ssa";
        case Agent::SOA: return "soa";
    }
    return "bsa";
}

std::string hash_hex(uint64_t h) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

constexpr std::array<Agent, 4> kRoles{Agent::BSA, Agent::BOA, Agent::SSA, Agent::SOA};

}  // namespace

std::string OutPaths::pretrain_ckpt(Agent a) const {
    return root + "/pretrain_" + role_slug(a) + ".ckpt";
}
std::string OutPaths::frozen_ckpt(Agent a) const {
    return root + "/frozen_" + role_slug(a) + ".ckpt";
}
std::string OutPaths::learn_ckpt(Agent a) const {
    return root + "/learn_" + role_slug(a) + ".ckpt";
}

Pipeline::Pipeline(RunConfig cfg) : cfg_(std::move(cfg)), paths_{cfg_.out_dir} {
    if (cfg_.out_dir.empty()) throw ConfigError("out.dir must be set");
    fs::create_directories(cfg_.out_dir);
}

std::vector<EpisodePtr> Pipeline::universe() const {
    if (cfg_.data_dir.empty()) throw ConfigError("data.dir must be set");
    return load_universe(cfg_.data_dir);
}

std::vector<EpisodePtr> Pipeline::split_episodes(const std::string& list_path) const {
    if (!fs::exists(list_path))
        throw DataError("missing episode list " + list_path + "; run the filter stage first");
    return select_by_manifest(universe(), list_path);
}

void Pipeline::update_manifest(
    const std::string& stage,
    const std::vector<std::pair<std::string, std::string>>& kv) {
    nlohmann::json j;
    if (fs::exists(paths_.run_manifest())) {
        std::ifstream is(paths_.run_manifest());
        try {
            is >> j;
        } catch (const nlohmann::json::exception&) {
            j = nlohmann::json::object();
        }
    }
    j["seed"] = cfg_.seed;
    j["config_hash"] = hash_hex(cfg_.config_hash());
    for (const auto& [k, v] : kv) j["stages"][stage][k] = v;
    std::ofstream os(paths_.run_manifest());
    if (!os) throw IoFailure("cannot write " + paths_.run_manifest());
    os << j.dump(2) << "\n";
}

void Pipeline::run_filter() {
    if (fs::exists(paths_.train_list()) && fs::exists(paths_.test_list())) {
        std::cout << "[filter] " << paths_.train_list() << " exists, skipping\n";
        return;
    }
    auto all = universe();
    auto kept = filter_universe(all, cfg_.filter_threshold);
    std::cout << "[filter] " << kept.size() << "/" << all.size()
              << " episodes rise >= " << cfg_.filter_threshold << "%\n";
    DatasetSplit split = split_train_test(kept, cfg_.split_ratio, cfg_.seed);
    write_manifest(paths_.train_list(), split.train);
    write_manifest(paths_.test_list(), split.test);
    std::cout << "[filter] train=" << split.train.size()
              << " test=" << split.test.size() << "\n";
    update_manifest("filter", {{"universe", std::to_string(all.size())},
                               {"kept", std::to_string(kept.size())},
                               {"train", std::to_string(split.train.size())},
                               {"test", std::to_string(split.test.size())}});
}

void Pipeline::run_pretrain() {
    auto train_eps = split_episodes(paths_.train_list());
    if (train_eps.empty()) throw EmptyTrainSet("train episode list is empty");

    nlohmann::json metrics = nlohmann::json::object();
    if (fs::exists(paths_.pretrain_metrics())) {
        std::ifstream is(paths_.pretrain_metrics());
        try {
            is >> metrics;
        } catch (const nlohmann::json::exception&) {
            metrics = nlohmann::json::object();
        }
    }

    for (Agent role : kRoles) {
        const std::string ckpt = paths_.pretrain_ckpt(role);
        if (fs::exists(ckpt)) {
            std::cout << "[pretrain] " << ckpt << " exists, skipping\n";
            continue;
        }
        Rng rng(Rng::mix(cfg_.seed, 0x100 + uint64_t(role)));
        auto dataset = build_pretrain_dataset(role, train_eps, cfg_.pretrain, rng);
        const nn::NetworkSpec spec = role_network_spec(role, cfg_.net);
        PretrainResult res = pretrain(role, std::move(dataset), spec, cfg_.pretrain, rng);
        save_network(ckpt, res.net, cfg_.seed, cfg_.config_hash());

        nlohmann::json m;
        m["mae"] = res.mae;
        if (res.mape) m["mape_pct"] = *res.mape;
        m["theils_u"] = res.theils_u;
        if (res.corr) m["correlation"] = *res.corr;
        m["final_train_loss"] = res.final_train_loss;
        m["n_train"] = res.n_train;
        m["n_val"] = res.n_val;
        metrics[role_slug(role)] = m;
        std::cout << "[pretrain] " << to_string(role) << " mae=" << res.mae
                  << " theils_u=" << res.theils_u << " n=" << res.n_train << "+"
                  << res.n_val << "\n";
    }
    std::ofstream os(paths_.pretrain_metrics());
    if (!os) throw IoFailure("cannot write " + paths_.pretrain_metrics());
    os << metrics.dump(2) << "\n";
    update_manifest("pretrain", {{"episodes", std::to_string(train_eps.size())}});
}

std::array<nn::QNetwork, 4> Pipeline::load_pretrained() const {
    std::array<nn::QNetwork, 4> nets;
    for (Agent role : kRoles) {
        const std::string ckpt = paths_.pretrain_ckpt(role);
        if (!fs::exists(ckpt))
            throw MissingPretrain("missing pretrained checkpoint for " +
                                  role_slug(role) + ": " + ckpt +
                                  " (run the pretrain stage first)");
        nets[size_t(role)] = nn::QNetwork(role_network_spec(role, cfg_.net));
        load_network(nets[size_t(role)], ckpt);
    }
    return nets;
}

void Pipeline::run_train() {
    bool done = fs::exists(paths_.curves_csv());
    for (Agent role : kRoles)
        done = done && fs::exists(paths_.learn_ckpt(role)) &&
               fs::exists(paths_.frozen_ckpt(role));
    if (done) {
        std::cout << "[train] " << paths_.curves_csv() << " exists, skipping\n";
        return;
    }
    auto train_eps = split_episodes(paths_.train_list());
    Trainer trainer(cfg_.train, load_pretrained());
    TrainResult res = trainer.run(train_eps);
    write_curves_csv(paths_.curves_csv(), res.curves);
    for (Agent role : kRoles) {
        MixedQ& mq = trainer.agents()[size_t(role)];
        save_network(paths_.frozen_ckpt(role), mq.frozen, cfg_.seed, cfg_.config_hash());
        save_network(paths_.learn_ckpt(role), mq.learn, cfg_.seed, cfg_.config_hash());
    }
    std::cout << "[train] episodes=" << res.episodes_run
              << " updates=" << res.total_updates << " env_steps=" << res.total_env_steps;
    if (res.bsa_converged_at)
        std::cout << " bsa_converged_at=" << *res.bsa_converged_at;
    std::cout << "\n";
    bool frozen_ok = true;
    for (size_t i = 0; i < 4; ++i)
        frozen_ok = frozen_ok &&
                    res.frozen_checksum_before[i] == res.frozen_checksum_after[i];
    update_manifest(
        "train",
        {{"episodes_run", std::to_string(res.episodes_run)},
         {"total_updates", std::to_string(res.total_updates)},
         {"bsa_converged_at",
          res.bsa_converged_at ? std::to_string(*res.bsa_converged_at) : "none"},
         {"frozen_unchanged", frozen_ok ? "true" : "false"}});
}

void Pipeline::run_backtest() {
    std::array<MixedQ, 4> agents;
    for (Agent role : kRoles) {
        const nn::NetworkSpec spec = role_network_spec(role, cfg_.net);
        nn::QNetwork frozen(spec), learn(spec);
        const std::string fck = paths_.frozen_ckpt(role);
        const std::string lck = paths_.learn_ckpt(role);
        if (!fs::exists(fck) || !fs::exists(lck))
            throw MissingPretrain("missing trained checkpoints for " +
                                  role_slug(role) + " under " + paths_.root +
                                  " (run the train stage first)");
        load_network(frozen, fck);
        load_network(learn, lck);
        nn::QNetwork target = learn;
        agents[size_t(role)] =
            MixedQ{role, std::move(frozen), std::move(learn), std::move(target)};
    }

    Rng rng(Rng::mix(cfg_.seed, 0xEA1ULL));
    auto run_split = [&](const std::string& name, const std::string& list) {
        auto eps = split_episodes(list);
        const std::string tdir = paths_.trace_dir(name);
        fs::create_directories(tdir);
        auto results = evaluate_policy(agents, cfg_.env, eps, tdir, 0.0, rng);
        return results;
    };
    auto train_res = run_split("train", paths_.train_list());
    auto test_res = run_split("test", paths_.test_list());
    MetricsReport train_rep = compute_report(train_res);
    MetricsReport test_rep = compute_report(test_res);
    write_report(paths_.report(), train_rep, test_rep, cfg_.seed, cfg_.config_hash());
    std::cout << "[backtest] train profit/ep=" << train_rep.profit_per_episode
              << "% trade_rate=" << train_rep.trade_rate
              << " | test profit/ep=" << test_rep.profit_per_episode
              << "% trade_rate=" << test_rep.trade_rate << "\n";
    update_manifest("backtest",
                    {{"train_episodes", std::to_string(train_res.size())},
                     {"test_episodes", std::to_string(test_res.size())}});
}

void Pipeline::run_all() {
    run_filter();
    run_pretrain();
    run_train();
    run_backtest();
}

}  // namespace sgym
