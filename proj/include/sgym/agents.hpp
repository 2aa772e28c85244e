#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sgym/env.hpp"
#include "sgym/episode.hpp"
#include "sgym/metrics.hpp"
#include "sgym/nn.hpp"
#include "sgym/rng.hpp"

namespace sgym {

// Network input contract per role: BSA sees the observation only; the other
// three also receive the remaining time until forced liquidation.
nn::NetworkSpec role_network_spec(Agent role, nn::NetworkSpec base);

// ---------------------------------------------------------------------------
// Experience replay
// ---------------------------------------------------------------------------

// One step of one agent's MDP. Observations are stored lazily as (episode,
// timestamp) so a full buffer stays small; tests may instead attach views
// directly.
struct Transition {
    EpisodePtr ep;
    int64_t t = 0;
    std::optional<double> lt;
    int action = 0;
    double reward = 0.0;  // primary + shared at the terminal step, else 0
    int64_t t_next = 0;
    std::optional<double> lt_next;
    bool done = false;
    std::shared_ptr<const ObsViews> views, views_next;  // inline storage override
};

ObsViews transition_obs(const Transition& tr);
ObsViews transition_next_obs(const Transition& tr);

// Fixed-capacity ring buffer: oldest-first eviction, uniform sampling with
// replacement. Append and sample are thread-safe.
class ReplayBuffer {
public:
    explicit ReplayBuffer(size_t capacity);
    void push(Transition tr);
    std::vector<Transition> sample(size_t n, Rng& rng) const;
    size_t size() const;
    size_t capacity() const { return cap_; }

private:
    mutable std::mutex mu_;
    std::vector<Transition> ring_;
    size_t cap_;
    size_t next_ = 0;  // insertion cursor once full
};

// ---------------------------------------------------------------------------
// Supervised pretraining (stage 1)
// ---------------------------------------------------------------------------

struct LabelConfig {
    bool clip = true;        // clip signal labels into [-clip_pct, +clip_pct]
    double clip_pct = 2.0;
    int deadline_s = 120;
};

// Signal-agent regression label: the buy-signal reward quantity (BSA, over
// the full deadline window) or sell-signal quantity (SSA, over lt seconds),
// optionally clipped.
double label_signal(const Episode& ep, int64_t t, Agent role, int lt, const LabelConfig& cfg);

// Order-agent regression label against a hypothetical signal at signal_t:
// the buy-order low-window quantity (BOA) or the return since signal_t (SOA).
// t must lie within window_s seconds of the signal.
double label_order(const Episode& ep, int64_t signal_t, int64_t t, Agent role,
                   int window_s = 120);

struct LabeledSample {
    EpisodePtr ep;
    int64_t t = 0;
    std::optional<double> lt;
    double label = 0.0;
};

struct PretrainConfig {
    int epochs = 10;
    int batch = 32;
    double lr = 1e-4;
    double val_fraction = 0.10;
    LabelConfig label;
    int stride = 1;               // signal agents: every stride-th second
    int samples_per_episode = 64; // order/sell agents: random anchors per episode
    int boa_label_sign = +1;      // matches EnvConfig::boa_reward_sign
};

std::vector<LabeledSample> build_pretrain_dataset(Agent role,
                                                  const std::vector<EpisodePtr>& episodes,
                                                  const PretrainConfig& cfg, Rng& rng);

struct PretrainResult {
    nn::QNetwork net;
    double mae = 0.0;
    std::optional<double> mape;   // absent when all labels ~0
    double theils_u = 0.0;
    std::optional<double> corr;   // absent for constant series
    double final_train_loss = 0.0;
    size_t n_train = 0, n_val = 0;
};

// Squared-error regression of the action-1 head onto labels (action-0 head is
// regressed to 0). Metrics come from a held-out slice.
PretrainResult pretrain(Agent role, std::vector<LabeledSample> dataset,
                        const nn::NetworkSpec& spec, const PretrainConfig& cfg, Rng& rng);

// ---------------------------------------------------------------------------
// Q-mixing and DDQN fine-tuning (stage 2)
// ---------------------------------------------------------------------------

// Q_total(s,a) = Q_frozen(s,a) + Q_learn(s,a). The frozen net is the
// pretrained snapshot and is never updated during RL; the target net is a
// periodic copy of the learner.
struct MixedQ {
    Agent role = Agent::BSA;
    nn::QNetwork frozen, learn, target;

    static MixedQ make(Agent role, nn::QNetwork pretrained, Rng& rng);

    std::array<double, 2> q_total_online(const ObsViews& v, std::optional<double> lt);
    std::array<double, 2> q_total_target(const ObsViews& v, std::optional<double> lt);
    void sync_target();
};

// ε-greedy over Q_total; exact ties resolve to a=0 (wait).
int select_action(MixedQ& q, const ObsViews& v, std::optional<double> lt, double eps, Rng& rng);

struct DdqnConfig {
    double gamma = 0.99;
    double lr = 1e-4;
    bool double_dqn = true;  // false = plain DQN target
};

// One minibatch update of q_learn (frozen untouched). Returns mean loss.
double ddqn_update(MixedQ& q, std::span<const Transition> batch, const DdqnConfig& cfg,
                   nn::AdamState& adam);

// ---------------------------------------------------------------------------
// Joint training loop
// ---------------------------------------------------------------------------

struct TrainConfig {
    int episodes = 1000;
    double gamma = 0.99;
    double lr = 1e-4;
    int batch = 32;
    size_t buffer_capacity = 100000;
    int target_sync = 1000;        // learner updates between target refreshes
    double eps_start = 1.0;
    double eps_end = 0.05;
    double eps_decay_frac = 0.5;   // linear decay over this fraction of episodes
    int update_every = 4;          // environment steps per gradient update
    int min_updates_per_episode = 1;
    size_t learn_start = 32;       // buffer fill before updates begin
    bool double_dqn = true;
    EnvConfig env;
    uint64_t seed = 0;
    // Convergence of the buy-signal agent (largest influence on the pipeline)
    // is detected as a plateau of its reward curve.
    int conv_window = 50;
    double conv_tol = 0.05;
    bool stop_on_bsa_convergence = false;
};

struct CurveRow {
    int episode = 0;
    std::array<double, 4> reward{};  // per-agent primary reward this episode
    double profit = 0.0;             // net return, percent
    bool traded = false;
};

struct TrainResult {
    std::vector<CurveRow> curves;
    std::optional<int> bsa_converged_at;
    int episodes_run = 0;
    std::array<uint64_t, 4> frozen_checksum_before{};
    std::array<uint64_t, 4> frozen_checksum_after{};
    size_t total_updates = 0;
    size_t total_env_steps = 0;
};

// Drives one episode with ε-greedy agents; returns the outcome and, when
// collect is set, the per-agent transitions with terminal rewards patched in.
struct RolloutResult {
    EpisodeOutcome outcome;
    std::array<std::vector<Transition>, 4> transitions;
    size_t steps = 0;
};
RolloutResult rollout_episode(std::array<MixedQ, 4>& agents, const EnvConfig& env_cfg,
                              const EpisodePtr& ep, double eps, Rng& rng, bool collect,
                              TradingEnv* env_out = nullptr);

class Trainer {
public:
    Trainer(TrainConfig cfg, std::array<nn::QNetwork, 4> pretrained);

    TrainResult run(const std::vector<EpisodePtr>& train_episodes);

    std::array<MixedQ, 4>& agents() { return agents_; }
    const TrainConfig& config() const { return cfg_; }

private:
    TrainConfig cfg_;
    std::array<MixedQ, 4> agents_;
    Rng rng_;
};

void write_curves_csv(const std::string& path, const std::vector<CurveRow>& curves);

// Greedy (or ε-random) evaluation over a set of episodes; optionally writes
// one JSON-lines trace per episode into trace_dir.
std::vector<EpisodeResult> evaluate_policy(std::array<MixedQ, 4>& agents,
                                           const EnvConfig& env_cfg,
                                           const std::vector<EpisodePtr>& episodes,
                                           const std::string& trace_dir, double eps, Rng& rng);

}  // namespace sgym
