#pragma once

#include <array>
#include <string>
#include <vector>

#include "sgym/agents.hpp"
#include "sgym/config.hpp"
#include "sgym/episode.hpp"

namespace sgym {

// Artifact layout under out.dir. Stages skip themselves when their artifacts
// already exist, so a run can be resumed or re-driven stage by stage.
struct OutPaths {
    std::string root;
    std::string train_list() const { return root + "/train.list"; }
    std::string test_list() const { return root + "/test.list"; }
    std::string pretrain_ckpt(Agent a) const;
    std::string pretrain_metrics() const { return root + "/pretrain_metrics.json"; }
    std::string frozen_ckpt(Agent a) const;
    std::string learn_ckpt(Agent a) const;
    std::string curves_csv() const { return root + "/curves.csv"; }
    std::string trace_dir(const std::string& split) const {
        return root + "/traces/" + split;
    }
    std::string report() const { return root + "/report.json"; }
    std::string run_manifest() const { return root + "/run_manifest.json"; }
};

class Pipeline {
   public:
    explicit Pipeline(RunConfig cfg);

    const OutPaths& paths() const { return paths_; }
    const RunConfig& config() const { return cfg_; }

    void run_filter();    // universe -> filter -> seeded split -> list files
    void run_pretrain();  // supervised stage: one checkpoint per role
    void run_train();     // RL stage: curves.csv + frozen/learn checkpoints
    void run_backtest();  // greedy replay of train+test -> traces + report.json
    void run_all();

   private:
    std::vector<EpisodePtr> universe() const;
    std::vector<EpisodePtr> split_episodes(const std::string& list_path) const;
    std::array<nn::QNetwork, 4> load_pretrained() const;
    void update_manifest(const std::string& stage,
                         const std::vector<std::pair<std::string, std::string>>& kv);

    RunConfig cfg_;
    OutPaths paths_;
};

}  // namespace sgym
