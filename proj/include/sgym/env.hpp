#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sgym/episode.hpp"
#include "sgym/observation.hpp"

namespace sgym {

// The four-agent scalping pipeline: buy signal -> buy order -> sell signal ->
// sell order. Exactly one agent is active per second.
enum class Agent : int { BSA = 0, BOA = 1, SSA = 2, SOA = 3 };
enum class Phase : int { WaitBuySignal, WaitBuyOrder, WaitSellSignal, WaitSellOrder, Done };

const char* to_string(Agent a);
const char* to_string(Phase p);

struct AgentAction {
    Agent agent;
    int a;  // 0 = wait, 1 = act
};

struct EnvConfig {
    int deadline_s = 120;   // forced liquidation at t1 + deadline_s
    double tax_pct = 0.30;  // percentage points per round trip
    double fee_pct = 0.03;
    enum class Fill { Last, Quote } fill = Fill::Last;
    // Buy-order reward: +1 evaluates the low-window equation as written
    // (rewards buying above the window minimum); -1 flips it so cheaper
    // purchases score higher.
    int boa_reward_sign = +1;
    enum class CostMode { Flat, PerLeg } cost_mode = CostMode::Flat;

    double cost_pct() const { return tax_pct + fee_pct; }
};

struct RewardVector {
    std::array<double, 4> primary{};  // per-agent own reward, percent
    std::array<double, 4> shared{};   // 0.5 × sum of the other three
    double gross_return = 0.0;        // (p_t4 - p_t2)/p_t2 × 100
    double net_return = 0.0;          // gross minus transaction costs
};

struct PhaseState {
    Phase phase = Phase::WaitBuySignal;
    int64_t t = 0;
    std::optional<int64_t> t1, t2, t3, t4;
    std::optional<double> p_t1, p_t2, p_t3, p_t4;
    double min_since_t1 = 0.0;  // running min of last_price over [t1, t2]
};

struct ObsBundle {
    ObservationTensor obs;
    std::optional<double> lt;  // remaining seconds until forced liquidation
    Agent active = Agent::BSA;
    int64_t t = 0;
};

struct TraceStep {
    int64_t t;
    Phase phase;
    Agent agent;
    int action;
    double last_price;
};

struct EpisodeOutcome {
    bool traded = false;
    std::optional<int64_t> t1, t2, t3, t4;
    std::optional<double> p_t1, p_t2, p_t3, p_t4;
    RewardVector rewards;
};

// --- Reward operations (pure; indices are offsets into the price span) ---

// Mean forward gain over the deadline window after the buy signal:
// (1/D) Σ_{k=1..D} (P_{t1+k} − P_{t1})/P_{t1} × 100.
double reward_bsa(std::span<const double> prices, size_t i1, int deadline_s = 120);

// Buy price versus the window low: (P_{t2} − min(P_{t1..t2}))/min × 100.
// Always ≥ 0; callers wanting "cheaper is better" negate via config.
double reward_boa(std::span<const double> prices, size_t i1, size_t i2);

// Mean forward decline after the sell signal, positive when price falls:
// (1/LT) Σ_{k=1..LT} −(P_{t3+k} − P_{t3})/P_{t3} × 100. LT = 0 yields 0.
double reward_ssa(std::span<const double> prices, size_t i3, int lt3);

// Round-trip gross return percent.
double reward_soa(double p_t2, double p_t4);

// shared[i] = 0.5 × Σ_{j≠i} primary[j].
std::array<double, 4> shared_rewards(const std::array<double, 4>& primary);

// Deduct round-trip transaction costs from a gross percent return.
double apply_costs(double gross_pct, const EnvConfig& cfg);

// --- Environment ---

// Replays one episode through the phase machine. Rewards are sparse: the full
// RewardVector is delivered once, on the terminal step, because the primary
// rewards depend on prices after the action second.
class TradingEnv {
public:
    explicit TradingEnv(EnvConfig cfg = {}) : cfg_(cfg) {}

    // start must leave >= 120 s of history before it and > deadline_s of day
    // after it. The one-argument form starts at the first valid second.
    ObsBundle reset(EpisodePtr episode, int64_t start);
    ObsBundle reset(EpisodePtr episode);

    struct StepResult {
        ObsBundle obs;
        std::optional<RewardVector> reward;  // present only when done
        bool done = false;
        std::string info;  // "", "traded", "forced", "no_trade"
    };
    StepResult step(AgentAction action);

    bool done() const { return st_.phase == Phase::Done; }
    Agent active_agent() const;
    const PhaseState& state() const { return st_; }
    const EpisodeOutcome& outcome() const { return outcome_; }
    const EnvConfig& config() const { return cfg_; }
    const EpisodePtr& episode() const { return ep_; }
    const std::vector<TraceStep>& trace() const { return trace_; }

    // JSON-lines: one object per step, then one terminal summary object.
    void write_trace(std::ostream& out) const;

private:
    ObsBundle make_bundle() const;
    double last_at(int64_t t) const;
    double fill_buy(int64_t t) const;
    double fill_sell(int64_t t) const;
    void force_chain();
    void finalize_trade();
    void finalize_no_trade();

    EnvConfig cfg_;
    EpisodePtr ep_;
    PhaseState st_;
    EpisodeOutcome outcome_;
    std::vector<TraceStep> trace_;
    std::string last_info_;
};

}  // namespace sgym
