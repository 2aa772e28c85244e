#include "sgym/agents.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "sgym/errors.hpp"

namespace sgym {

nn::NetworkSpec role_network_spec(Agent role, nn::NetworkSpec base) {
    base.use_lt = role != Agent::BSA;  // only the buy-signal agent lacks LT_t
    return base;
}

// ---------------------------------------------------------------------------
// Transitions and replay
// ---------------------------------------------------------------------------

namespace {

ObsViews views_at(const EpisodePtr& ep, int64_t t) {
    return split_views(build_observation(ep->records, t, ep->meta));
}

}  // namespace

ObsViews transition_obs(const Transition& tr) {
    if (tr.views) return *tr.views;
    if (!tr.ep) throw DataError("transition has neither episode nor inline views");
    return views_at(tr.ep, tr.t);
}

ObsViews transition_next_obs(const Transition& tr) {
    if (tr.views_next) return *tr.views_next;
    if (!tr.ep) throw DataError("transition has neither episode nor inline views");
    return views_at(tr.ep, tr.t_next);
}

ReplayBuffer::ReplayBuffer(size_t capacity) : cap_(capacity) {
    if (capacity == 0) throw ConfigError("replay buffer capacity must be positive");
    ring_.reserve(std::min<size_t>(capacity, 4096));
}

void ReplayBuffer::push(Transition tr) {
    std::lock_guard<std::mutex> lock(mu_);
    if (ring_.size() < cap_) {
        ring_.push_back(std::move(tr));
    } else {
        ring_[next_] = std::move(tr);  // overwrite oldest
        next_ = (next_ + 1) % cap_;
    }
}

std::vector<Transition> ReplayBuffer::sample(size_t n, Rng& rng) const {
    std::lock_guard<std::mutex> lock(mu_);
    if (ring_.empty()) throw EmptyBatch("sampling from an empty replay buffer");
    std::vector<Transition> out;
    out.reserve(n);
    for (size_t i = 0; i < n; ++i)
        out.push_back(ring_[static_cast<size_t>(rng.below(static_cast<int64_t>(ring_.size())))]);
    return out;
}

size_t ReplayBuffer::size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return ring_.size();
}

// ---------------------------------------------------------------------------
// Labels
// ---------------------------------------------------------------------------

namespace {

std::vector<double> last_prices(const Episode& ep) {
    std::vector<double> out;
    out.reserve(ep.records.size());
    for (const TickRecord& r : ep.records) out.push_back(r.last_price);
    return out;
}

}  // namespace

double label_signal(const Episode& ep, int64_t t, Agent role, int lt, const LabelConfig& cfg) {
    if (role != Agent::BSA && role != Agent::SSA)
        throw ConfigError("signal labels exist only for the signal agents");
    const std::vector<double> lasts = last_prices(ep);
    const int64_t idx = t - ep.start_ts();
    if (idx < 0 || idx >= static_cast<int64_t>(lasts.size()))
        throw InsufficientFuture("label timestamp outside episode");
    double label = 0.0;
    if (role == Agent::BSA) {
        label = reward_bsa(lasts, static_cast<size_t>(idx), cfg.deadline_s);
    } else {
        if (idx + lt >= static_cast<int64_t>(lasts.size()))
            throw InsufficientFuture("sell-signal label needs lt seconds of future data");
        label = reward_ssa(lasts, static_cast<size_t>(idx), lt);
    }
    if (cfg.clip) label = std::clamp(label, -cfg.clip_pct, cfg.clip_pct);
    return label;
}

double label_order(const Episode& ep, int64_t signal_t, int64_t t, Agent role, int window_s) {
    if (role != Agent::BOA && role != Agent::SOA)
        throw ConfigError("order labels exist only for the order agents");
    const int64_t ts0 = ep.start_ts();
    const int64_t is = signal_t - ts0;
    const int64_t it = t - ts0;
    const int64_t n = static_cast<int64_t>(ep.records.size());
    if (is < 0 || it < is || it > is + window_s || it >= n)
        throw OutOfWindow("order label time must lie in [signal, signal+" +
                          std::to_string(window_s) + "] within the day");
    const std::vector<double> lasts = last_prices(ep);
    if (role == Agent::BOA)
        return reward_boa(lasts, static_cast<size_t>(is), static_cast<size_t>(it));
    return reward_soa(lasts[static_cast<size_t>(is)], lasts[static_cast<size_t>(it)]);
}

std::vector<LabeledSample> build_pretrain_dataset(Agent role,
                                                  const std::vector<EpisodePtr>& episodes,
                                                  const PretrainConfig& cfg, Rng& rng) {
    std::vector<LabeledSample> out;
    const int D = cfg.label.deadline_s;
    for (const EpisodePtr& ep : episodes) {
        const int64_t t_lo = ep->start_ts() + kObsWindow;  // first full-history second
        const int64_t t_hi = ep->end_ts() - D;             // last full-future second
        if (t_hi < t_lo) continue;
        switch (role) {
            case Agent::BSA:
                for (int64_t t = t_lo; t <= t_hi; t += cfg.stride)
                    out.push_back({ep, t, std::nullopt, label_signal(*ep, t, role, D, cfg.label)});
                break;
            case Agent::SSA:
                for (int i = 0; i < cfg.samples_per_episode; ++i) {
                    const int64_t t1 = rng.between(t_lo, t_hi);
                    const int k = static_cast<int>(rng.between(0, D - 1));
                    const int lt = D - k;
                    out.push_back({ep, t1 + k, static_cast<double>(lt),
                                   label_signal(*ep, t1 + k, role, lt, cfg.label)});
                }
                break;
            case Agent::BOA:
                for (int i = 0; i < cfg.samples_per_episode; ++i) {
                    const int64_t t1 = rng.between(t_lo, t_hi);
                    const int k = static_cast<int>(rng.between(0, D));
                    out.push_back({ep, t1 + k, static_cast<double>(D - k),
                                   cfg.boa_label_sign * label_order(*ep, t1, t1 + k, role, D)});
                }
                break;
            case Agent::SOA:
                for (int i = 0; i < cfg.samples_per_episode; ++i) {
                    const int64_t t2 = rng.between(t_lo, t_hi);
                    const int k = static_cast<int>(rng.between(0, D));
                    out.push_back({ep, t2 + k, static_cast<double>(D - k),
                                   label_order(*ep, t2, t2 + k, role, D)});
                }
                break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pretraining
// ---------------------------------------------------------------------------

PretrainResult pretrain(Agent role, std::vector<LabeledSample> dataset,
                        const nn::NetworkSpec& spec, const PretrainConfig& cfg, Rng& rng) {
    if (dataset.empty()) throw EmptyDataset("pretraining needs a nonempty dataset");
    rng.shuffle(dataset);
    const size_t n_val = static_cast<size_t>(cfg.val_fraction * static_cast<double>(dataset.size()));
    const size_t n_train = dataset.size() - n_val;
    if (n_train == 0) throw EmptyDataset("pretraining dataset too small after validation split");

    PretrainResult res;
    res.net = nn::QNetwork(role_network_spec(role, spec));
    res.net.init(rng);
    nn::AdamState adam;
    adam.init_like(res.net.params());

    std::vector<size_t> order(n_train);
    for (size_t i = 0; i < n_train; ++i) order[i] = i;

    const size_t batch = std::max<size_t>(1, static_cast<size_t>(cfg.batch));
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        size_t epoch_terms = 0;
        for (size_t start = 0; start < n_train; start += batch) {
            const size_t bn = std::min(batch, n_train - start);
            res.net.zero_grad();
            for (size_t b = 0; b < bn; ++b) {
                const LabeledSample& s = dataset[order[start + b]];
                const ObsViews v = views_at(s.ep, s.t);
                const auto out = res.net.forward(v, s.lt);
                std::array<double, 2> dout{};
                epoch_loss +=
                    nn::squared_error(out, {0.0, s.label}, {true, true}, dout);
                ++epoch_terms;
                dout[0] /= static_cast<double>(bn);
                dout[1] /= static_cast<double>(bn);
                res.net.backward(dout);
            }
            nn::adam_step(res.net.params(), res.net.grads(), adam, cfg.lr);
        }
        res.final_train_loss = epoch_loss / static_cast<double>(epoch_terms);
    }

    // Held-out metrics (falls back to the training slice for tiny datasets).
    const size_t v_begin = n_val > 0 ? n_train : 0;
    const size_t v_end = n_val > 0 ? dataset.size() : n_train;
    std::vector<double> pred, actual;
    for (size_t i = v_begin; i < v_end; ++i) {
        const LabeledSample& s = dataset[i];
        pred.push_back(res.net.forward(views_at(s.ep, s.t), s.lt)[1]);
        actual.push_back(s.label);
    }
    res.n_train = n_train;
    res.n_val = n_val;
    res.mae = mae(pred, actual);
    res.theils_u = theils_u(pred, actual);
    try {
        res.mape = mape(pred, actual);
    } catch (const EmptyResults&) {
    }
    try {
        res.corr = correlation(pred, actual);
    } catch (const SigmaZero&) {
    } catch (const EmptyResults&) {
    }
    return res;
}

// ---------------------------------------------------------------------------
// Q-mixing
// ---------------------------------------------------------------------------

MixedQ MixedQ::make(Agent role, nn::QNetwork pretrained, Rng& rng) {
    MixedQ q;
    q.role = role;
    q.frozen = std::move(pretrained);
    q.learn = nn::QNetwork(q.frozen.spec());
    q.learn.init(rng);
    q.target = q.learn;
    return q;
}

std::array<double, 2> MixedQ::q_total_online(const ObsViews& v, std::optional<double> lt) {
    const auto f = frozen.forward(v, lt);
    const auto l = learn.forward(v, lt);
    return {f[0] + l[0], f[1] + l[1]};
}

std::array<double, 2> MixedQ::q_total_target(const ObsViews& v, std::optional<double> lt) {
    const auto f = frozen.forward(v, lt);
    const auto t = target.forward(v, lt);
    return {f[0] + t[0], f[1] + t[1]};
}

void MixedQ::sync_target() { target.copy_params_from(learn); }

int select_action(MixedQ& q, const ObsViews& v, std::optional<double> lt, double eps, Rng& rng) {
    if (eps > 0.0 && rng.bernoulli(eps)) return static_cast<int>(rng.below(2));
    const auto qv = q.q_total_online(v, lt);
    return qv[1] > qv[0] ? 1 : 0;  // exact ties wait
}

double ddqn_update(MixedQ& q, std::span<const Transition> batch, const DdqnConfig& cfg,
                   nn::AdamState& adam) {
    if (batch.empty()) throw EmptyBatch("ddqn update with empty batch");
    q.learn.zero_grad();
    double total_loss = 0.0;
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (const Transition& tr : batch) {
        double y = tr.reward;
        if (!tr.done) {
            const ObsViews nv = transition_next_obs(tr);
            const auto fn = q.frozen.forward(nv, tr.lt_next);
            const auto tn = q.target.forward(nv, tr.lt_next);
            int a_star;
            if (cfg.double_dqn) {
                const auto ln = q.learn.forward(nv, tr.lt_next);
                a_star = (fn[1] + ln[1]) > (fn[0] + ln[0]) ? 1 : 0;
            } else {
                a_star = (fn[1] + tn[1]) > (fn[0] + tn[0]) ? 1 : 0;
            }
            y += cfg.gamma * (fn[static_cast<size_t>(a_star)] + tn[static_cast<size_t>(a_star)]);
        }
        const ObsViews v = transition_obs(tr);
        const auto f = q.frozen.forward(v, tr.lt);
        const auto l = q.learn.forward(v, tr.lt);  // cached for backward
        const double pred = f[static_cast<size_t>(tr.action)] + l[static_cast<size_t>(tr.action)];
        const double diff = pred - y;
        if (!std::isfinite(diff)) throw NonFiniteLoss("non-finite TD error");
        total_loss += diff * diff;
        std::array<double, 2> dout{};
        dout[static_cast<size_t>(tr.action)] = 2.0 * diff * inv;
        q.learn.backward(dout);
    }
    nn::adam_step(q.learn.params(), q.learn.grads(), adam, cfg.lr);
    return total_loss * inv;
}

// ---------------------------------------------------------------------------
// Rollout and training loop
// ---------------------------------------------------------------------------

RolloutResult rollout_episode(std::array<MixedQ, 4>& agents, const EnvConfig& env_cfg,
                              const EpisodePtr& ep, double eps, Rng& rng, bool collect,
                              TradingEnv* env_out) {
    TradingEnv local_env(env_cfg);
    TradingEnv& env = env_out ? *env_out : local_env;
    ObsBundle bundle = env.reset(ep);
    RolloutResult rr;
    while (!env.done()) {
        const Agent ag = bundle.active;
        const size_t ai = static_cast<size_t>(ag);
        const ObsViews v = split_views(bundle.obs);
        const int a = select_action(agents[ai], v, bundle.lt, eps, rng);
        Transition tr;
        if (collect) {
            tr.ep = ep;
            tr.t = bundle.t;
            tr.lt = bundle.lt;
            tr.action = a;
        }
        auto res = env.step({ag, a});
        ++rr.steps;
        if (collect) {
            tr.t_next = res.obs.t;
            tr.lt_next = res.obs.lt;
            tr.done = a == 1 || res.done;  // acting is terminal for the actor
            rr.transitions[ai].push_back(std::move(tr));
        }
        bundle = std::move(res.obs);
    }
    rr.outcome = env.outcome();
    if (collect) {
        for (size_t i = 0; i < 4; ++i) {
            if (rr.transitions[i].empty()) continue;
            Transition& last = rr.transitions[i].back();
            if (last.done && rr.outcome.traded)
                last.reward =
                    rr.outcome.rewards.primary[i] + rr.outcome.rewards.shared[i];
        }
    }
    return rr;
}

Trainer::Trainer(TrainConfig cfg, std::array<nn::QNetwork, 4> pretrained)
    : cfg_(cfg), rng_(Rng::mix(cfg.seed, 0xA6E27ULL)) {
    for (size_t i = 0; i < 4; ++i)
        agents_[i] = MixedQ::make(static_cast<Agent>(i), std::move(pretrained[i]), rng_);
}

TrainResult Trainer::run(const std::vector<EpisodePtr>& train_episodes) {
    if (train_episodes.empty()) throw EmptyTrainSet("no training episodes");
    TrainResult out;
    for (size_t i = 0; i < 4; ++i)
        out.frozen_checksum_before[i] = agents_[i].frozen.param_checksum();

    std::array<ReplayBuffer, 4> buffers{
        ReplayBuffer(cfg_.buffer_capacity), ReplayBuffer(cfg_.buffer_capacity),
        ReplayBuffer(cfg_.buffer_capacity), ReplayBuffer(cfg_.buffer_capacity)};
    std::array<nn::AdamState, 4> adam;
    for (size_t i = 0; i < 4; ++i) adam[i].init_like(agents_[i].learn.params());
    std::array<size_t, 4> carry{};
    std::array<size_t, 4> updates{};
    const DdqnConfig dcfg{cfg_.gamma, cfg_.lr, cfg_.double_dqn};
    const double decay_n = std::max(1.0, cfg_.eps_decay_frac * cfg_.episodes);
    const size_t min_fill = std::max(cfg_.learn_start, static_cast<size_t>(cfg_.batch));

    for (int e = 0; e < cfg_.episodes; ++e) {
        const double frac = std::min(1.0, static_cast<double>(e) / decay_n);
        const double eps = cfg_.eps_start + (cfg_.eps_end - cfg_.eps_start) * frac;
        const EpisodePtr& ep = train_episodes[static_cast<size_t>(e) % train_episodes.size()];
        auto rr = rollout_episode(agents_, cfg_.env, ep, eps, rng_, true);
        out.total_env_steps += rr.steps;
        for (size_t i = 0; i < 4; ++i) {
            for (Transition& tr : rr.transitions[i]) buffers[i].push(std::move(tr));
            carry[i] += rr.transitions[i].size();
        }
        for (size_t i = 0; i < 4; ++i) {
            if (buffers[i].size() < min_fill) continue;
            size_t n_upd = carry[i] / static_cast<size_t>(cfg_.update_every);
            carry[i] %= static_cast<size_t>(cfg_.update_every);
            n_upd = std::max(n_upd, static_cast<size_t>(cfg_.min_updates_per_episode));
            for (size_t u = 0; u < n_upd; ++u) {
                const auto batch = buffers[i].sample(static_cast<size_t>(cfg_.batch), rng_);
                ddqn_update(agents_[i], batch, dcfg, adam[i]);
                ++updates[i];
                ++out.total_updates;
                if (cfg_.target_sync > 0 &&
                    updates[i] % static_cast<size_t>(cfg_.target_sync) == 0)
                    agents_[i].sync_target();
            }
        }
        CurveRow row;
        row.episode = e;
        row.reward = rr.outcome.rewards.primary;
        row.profit = rr.outcome.rewards.net_return;
        row.traded = rr.outcome.traded;
        out.curves.push_back(row);
        out.episodes_run = e + 1;

        if (!out.bsa_converged_at &&
            out.curves.size() >= static_cast<size_t>(2 * cfg_.conv_window)) {
            const size_t n = out.curves.size();
            double m_new = 0.0, m_old = 0.0;
            for (int k = 0; k < cfg_.conv_window; ++k) {
                m_new += out.curves[n - 1 - static_cast<size_t>(k)].reward[0];
                m_old += out.curves[n - 1 - static_cast<size_t>(cfg_.conv_window + k)].reward[0];
            }
            m_new /= cfg_.conv_window;
            m_old /= cfg_.conv_window;
            if (std::abs(m_new - m_old) < cfg_.conv_tol) out.bsa_converged_at = e;
        }
        if (out.bsa_converged_at && cfg_.stop_on_bsa_convergence) break;
    }

    for (size_t i = 0; i < 4; ++i)
        out.frozen_checksum_after[i] = agents_[i].frozen.param_checksum();
    return out;
}

void write_curves_csv(const std::string& path, const std::vector<CurveRow>& curves) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure("cannot write curves: " + path);
    out << "episode,reward_bsa,reward_boa,reward_ssa,reward_soa,profit\n";
    for (const CurveRow& r : curves) {
        out << r.episode;
        for (double x : r.reward) out << ',' << x;
        out << ',' << r.profit << '\n';
    }
    if (!out) throw IoFailure("write failed: " + path);
}

std::vector<EpisodeResult> evaluate_policy(std::array<MixedQ, 4>& agents,
                                           const EnvConfig& env_cfg,
                                           const std::vector<EpisodePtr>& episodes,
                                           const std::string& trace_dir, double eps, Rng& rng) {
    std::vector<EpisodeResult> out;
    for (const EpisodePtr& ep : episodes) {
        TradingEnv env(env_cfg);
        rollout_episode(agents, env_cfg, ep, eps, rng, false, &env);
        const EpisodeOutcome& oc = env.outcome();
        EpisodeResult r;
        r.id = ep->id();
        r.traded = oc.traded;
        r.net_return = oc.traded ? oc.rewards.net_return : 0.0;
        r.t1 = oc.t1;
        r.t2 = oc.t2;
        r.t3 = oc.t3;
        r.t4 = oc.t4;
        out.push_back(std::move(r));
        if (!trace_dir.empty()) {
            const std::string path = trace_dir + "/" + ep->ticker + "_" + ep->date + ".jsonl";
            std::ofstream f(path, std::ios::binary);
            if (!f) throw IoFailure("cannot write trace: " + path);
            env.write_trace(f);
        }
    }
    return out;
}

}  // namespace sgym
