#include "sgym/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sgym/errors.hpp"

namespace sgym {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    double x = 0.0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc{} || p != v.data() + v.size())
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    return x;
}

int to_int(const std::string& key, const std::string& v) {
    int x = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc{} || p != v.data() + v.size())
        throw ConfigError(key + ": expected an integer, got '" + v + "'");
    return x;
}

uint64_t to_u64(const std::string& key, const std::string& v) {
    uint64_t x = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc{} || p != v.data() + v.size())
        throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
    return x;
}

size_t to_size(const std::string& key, const std::string& v) {
    return size_t(to_u64(key, v));
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

std::string fmt_double(double x) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    (void)ec;
    return std::string(buf, p);
}

std::string fill_name(EnvConfig::Fill f) {
    return f == EnvConfig::Fill::Last ? "last" : "quote";
}

std::string cost_name(EnvConfig::CostMode m) {
    return m == EnvConfig::CostMode::Flat ? "flat" : "per-leg";
}

std::string kind_name(SynthConfig::Kind k) {
    switch (k) {
        case SynthConfig::Kind::RandomWalk: return "random-walk";
        case SynthConfig::Kind::Pattern: return "pattern";
        case SynthConfig::Kind::Ramp: return "ramp";
    }
    return "random-walk";
}

}  // namespace

std::map<std::string, std::string> parse_kv_text(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream is(text);
    std::string line;
    size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) +
                              ": expected key=value, got '" + line + "'");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("line " + std::to_string(line_no) + ": empty key");
        if (kv.count(key))
            throw ConfigError("duplicate key '" + key + "'");
        kv[key] = val;
    }
    return kv;
}

RunConfig RunConfig::from_file(const std::string& path,
                               const std::vector<std::string>& overrides) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    auto kv = parse_kv_text(ss.str());
    for (const std::string& ov : overrides) {
        auto eq = ov.find('=');
        if (eq == std::string::npos)
            throw ConfigError("override must be key=value, got '" + ov + "'");
        kv[trim(ov.substr(0, eq))] = trim(ov.substr(eq + 1));
    }
    return from_kv(kv);
}

RunConfig RunConfig::from_kv(const std::map<std::string, std::string>& kv_in) {
    RunConfig c;
    auto kv = kv_in;
    auto take = [&](const char* key) -> std::string* {
        static std::string slot;
        auto it = kv.find(key);
        if (it == kv.end()) return nullptr;
        slot = it->second;
        kv.erase(it);
        return &slot;
    };
    auto s = [&](const char* k, std::string& dst) { if (auto* v = take(k)) dst = *v; };
    auto d = [&](const char* k, double& dst) { if (auto* v = take(k)) dst = to_double(k, *v); };
    auto i = [&](const char* k, int& dst) { if (auto* v = take(k)) dst = to_int(k, *v); };
    auto z = [&](const char* k, size_t& dst) { if (auto* v = take(k)) dst = to_size(k, *v); };
    auto b = [&](const char* k, bool& dst) { if (auto* v = take(k)) dst = to_bool(k, *v); };

    s("data.dir", c.data_dir);
    s("out.dir", c.out_dir);
    d("data.filter_threshold", c.filter_threshold);
    d("data.split_ratio", c.split_ratio);
    if (auto* v = take("seed")) c.seed = to_u64("seed", *v);

    i("env.deadline_s", c.env.deadline_s);
    d("env.tax_pct", c.env.tax_pct);
    d("env.fee_pct", c.env.fee_pct);
    if (auto* v = take("env.fill")) {
        if (*v == "last") c.env.fill = EnvConfig::Fill::Last;
        else if (*v == "quote") c.env.fill = EnvConfig::Fill::Quote;
        else throw ConfigError("env.fill: expected last or quote, got '" + *v + "'");
    }
    i("env.boa_reward_sign", c.env.boa_reward_sign);
    if (auto* v = take("env.cost_mode")) {
        if (*v == "flat") c.env.cost_mode = EnvConfig::CostMode::Flat;
        else if (*v == "per-leg") c.env.cost_mode = EnvConfig::CostMode::PerLeg;
        else throw ConfigError("env.cost_mode: expected flat or per-leg, got '" + *v + "'");
    }

    i("net.c3_out", c.net.c3_out);
    i("net.c1_out", c.net.c1_out);
    i("net.dense_width", c.net.dense_width);

    i("pretrain.epochs", c.pretrain.epochs);
    i("pretrain.batch", c.pretrain.batch);
    d("pretrain.lr", c.pretrain.lr);
    d("pretrain.val_fraction", c.pretrain.val_fraction);
    i("pretrain.stride", c.pretrain.stride);
    i("pretrain.samples_per_episode", c.pretrain.samples_per_episode);
    b("pretrain.clip", c.pretrain.label.clip);
    d("pretrain.clip_pct", c.pretrain.label.clip_pct);

    i("train.episodes", c.train.episodes);
    d("train.gamma", c.train.gamma);
    d("train.lr", c.train.lr);
    i("train.batch", c.train.batch);
    z("train.buffer_capacity", c.train.buffer_capacity);
    i("train.target_sync", c.train.target_sync);
    d("train.eps_start", c.train.eps_start);
    d("train.eps_end", c.train.eps_end);
    d("train.eps_decay_frac", c.train.eps_decay_frac);
    i("train.update_every", c.train.update_every);
    i("train.min_updates_per_episode", c.train.min_updates_per_episode);
    z("train.learn_start", c.train.learn_start);
    b("train.double_dqn", c.train.double_dqn);
    b("train.stop_on_bsa_convergence", c.train.stop_on_bsa_convergence);
    i("train.conv_window", c.train.conv_window);
    d("train.conv_tol", c.train.conv_tol);

    if (auto* v = take("synth.kind")) c.synth.kind = synth_kind_from_string(*v);
    i("synth.days", c.synth.days);
    i("synth.day_len", c.synth.day_len);
    s("synth.ticker", c.synth.ticker);
    d("synth.base_price", c.synth.base_price);
    d("synth.base_volume", c.synth.base_volume);
    d("synth.rw_sigma", c.synth.rw_sigma);
    d("synth.ramp_total_pct", c.synth.ramp_total_pct);
    d("synth.open_gap_pct", c.synth.open_gap_pct);
    d("synth.decay_per_s", c.synth.decay_per_s);
    d("synth.noise_sigma", c.synth.noise_sigma);
    i("synth.spikes_min", c.synth.spikes_min);
    i("synth.spikes_max", c.synth.spikes_max);
    i("synth.spike_gap_min", c.synth.spike_gap_min);
    i("synth.spike_len", c.synth.spike_len);
    d("synth.spike_mult", c.synth.spike_mult);
    i("synth.jump_delay_s", c.synth.jump_delay_s);
    d("synth.jump_pct", c.synth.jump_pct);

    if (!kv.empty()) {
        std::string unknown;
        for (const auto& [k, v] : kv) {
            if (!unknown.empty()) unknown += ", ";
            unknown += k;
        }
        throw ConfigError("unknown config key(s): " + unknown);
    }

    // Derived wiring: one seed and one env feed every stage.
    c.train.env = c.env;
    c.train.seed = c.seed;
    c.pretrain.label.deadline_s = c.env.deadline_s;
    c.pretrain.boa_label_sign = c.env.boa_reward_sign;
    c.synth.seed = c.seed;
    if (c.synth.out_dir.empty()) c.synth.out_dir = c.data_dir;

    c.validate();
    return c;
}

void RunConfig::validate() const {
    auto bad = [](const std::string& m) { throw ConfigError(m); };
    if (!(split_ratio > 0.0 && split_ratio < 1.0))
        bad("data.split_ratio must be in (0,1)");
    if (filter_threshold < 0.0) bad("data.filter_threshold must be >= 0");
    if (env.deadline_s <= 0) bad("env.deadline_s must be positive");
    if (env.tax_pct < 0.0 || env.fee_pct < 0.0)
        bad("env.tax_pct and env.fee_pct must be >= 0");
    if (env.boa_reward_sign != 1 && env.boa_reward_sign != -1)
        bad("env.boa_reward_sign must be 1 or -1");
    net.validate();
    if (pretrain.epochs < 1) bad("pretrain.epochs must be >= 1");
    if (pretrain.batch < 1) bad("pretrain.batch must be >= 1");
    if (!(pretrain.lr > 0.0)) bad("pretrain.lr must be positive");
    if (!(pretrain.val_fraction >= 0.0 && pretrain.val_fraction < 1.0))
        bad("pretrain.val_fraction must be in [0,1)");
    if (pretrain.stride < 1) bad("pretrain.stride must be >= 1");
    if (pretrain.samples_per_episode < 1)
        bad("pretrain.samples_per_episode must be >= 1");
    if (!(pretrain.label.clip_pct > 0.0)) bad("pretrain.clip_pct must be positive");
    if (train.episodes < 1) bad("train.episodes must be >= 1");
    if (!(train.gamma >= 0.0 && train.gamma <= 1.0))
        bad("train.gamma must be in [0,1]");
    if (!(train.lr > 0.0)) bad("train.lr must be positive");
    if (train.batch < 1) bad("train.batch must be >= 1");
    if (train.buffer_capacity < size_t(train.batch))
        bad("train.buffer_capacity must be >= train.batch");
    if (train.target_sync < 1) bad("train.target_sync must be >= 1");
    if (!(train.eps_start >= 0.0 && train.eps_start <= 1.0) ||
        !(train.eps_end >= 0.0 && train.eps_end <= 1.0))
        bad("train.eps_start/eps_end must be in [0,1]");
    if (train.eps_end > train.eps_start)
        bad("train.eps_end must not exceed train.eps_start");
    if (!(train.eps_decay_frac > 0.0 && train.eps_decay_frac <= 1.0))
        bad("train.eps_decay_frac must be in (0,1]");
    if (train.update_every < 1) bad("train.update_every must be >= 1");
    if (train.min_updates_per_episode < 0)
        bad("train.min_updates_per_episode must be >= 0");
    if (train.learn_start < 1) bad("train.learn_start must be >= 1");
    if (train.conv_window < 1) bad("train.conv_window must be >= 1");
    if (!(train.conv_tol > 0.0)) bad("train.conv_tol must be positive");
    if (synth.days < 1) bad("synth.days must be >= 1");
    if (synth.day_len < 2) bad("synth.day_len must be >= 2");
    if (!(synth.base_price > 0.0)) bad("synth.base_price must be positive");
    if (!(synth.base_volume > 0.0)) bad("synth.base_volume must be positive");
    if (synth.spikes_min < 1 || synth.spikes_max < synth.spikes_min)
        bad("synth.spikes_min/max must satisfy 1 <= min <= max");
    if (synth.spike_len < 1) bad("synth.spike_len must be >= 1");
    if (synth.jump_delay_s < 1) bad("synth.jump_delay_s must be >= 1");
    if (synth.jump_pct < 0.0) bad("synth.jump_pct must be >= 0");
}

std::string RunConfig::canonical_kv() const {
    std::vector<std::pair<std::string, std::string>> rows = {
        {"data.dir", data_dir},
        {"out.dir", out_dir},
        {"data.filter_threshold", fmt_double(filter_threshold)},
        {"data.split_ratio", fmt_double(split_ratio)},
        {"seed", std::to_string(seed)},
        {"env.deadline_s", std::to_string(env.deadline_s)},
        {"env.tax_pct", fmt_double(env.tax_pct)},
        {"env.fee_pct", fmt_double(env.fee_pct)},
        {"env.fill", fill_name(env.fill)},
        {"env.boa_reward_sign", std::to_string(env.boa_reward_sign)},
        {"env.cost_mode", cost_name(env.cost_mode)},
        {"net.c3_out", std::to_string(net.c3_out)},
        {"net.c1_out", std::to_string(net.c1_out)},
        {"net.dense_width", std::to_string(net.dense_width)},
        {"pretrain.epochs", std::to_string(pretrain.epochs)},
        {"pretrain.batch", std::to_string(pretrain.batch)},
        {"pretrain.lr", fmt_double(pretrain.lr)},
        {"pretrain.val_fraction", fmt_double(pretrain.val_fraction)},
        {"pretrain.stride", std::to_string(pretrain.stride)},
        {"pretrain.samples_per_episode", std::to_string(pretrain.samples_per_episode)},
        {"pretrain.clip", pretrain.label.clip ? "true" : "false"},
        {"pretrain.clip_pct", fmt_double(pretrain.label.clip_pct)},
        {"train.episodes", std::to_string(train.episodes)},
        {"train.gamma", fmt_double(train.gamma)},
        {"train.lr", fmt_double(train.lr)},
        {"train.batch", std::to_string(train.batch)},
        {"train.buffer_capacity", std::to_string(train.buffer_capacity)},
        {"train.target_sync", std::to_string(train.target_sync)},
        {"train.eps_start", fmt_double(train.eps_start)},
        {"train.eps_end", fmt_double(train.eps_end)},
        {"train.eps_decay_frac", fmt_double(train.eps_decay_frac)},
        {"train.update_every", std::to_string(train.update_every)},
        {"train.min_updates_per_episode", std::to_string(train.min_updates_per_episode)},
        {"train.learn_start", std::to_string(train.learn_start)},
        {"train.double_dqn", train.double_dqn ? "true" : "false"},
        {"train.stop_on_bsa_convergence",
         train.stop_on_bsa_convergence ? "true" : "false"},
        {"train.conv_window", std::to_string(train.conv_window)},
        {"train.conv_tol", fmt_double(train.conv_tol)},
        {"synth.kind", kind_name(synth.kind)},
        {"synth.days", std::to_string(synth.days)},
        {"synth.day_len", std::to_string(synth.day_len)},
        {"synth.ticker", synth.ticker},
        {"synth.base_price", fmt_double(synth.base_price)},
        {"synth.base_volume", fmt_double(synth.base_volume)},
        {"synth.rw_sigma", fmt_double(synth.rw_sigma)},
        {"synth.ramp_total_pct", fmt_double(synth.ramp_total_pct)},
        {"synth.open_gap_pct", fmt_double(synth.open_gap_pct)},
        {"synth.decay_per_s", fmt_double(synth.decay_per_s)},
        {"synth.noise_sigma", fmt_double(synth.noise_sigma)},
        {"synth.spikes_min", std::to_string(synth.spikes_min)},
        {"synth.spikes_max", std::to_string(synth.spikes_max)},
        {"synth.spike_gap_min", std::to_string(synth.spike_gap_min)},
        {"synth.spike_len", std::to_string(synth.spike_len)},
        {"synth.spike_mult", fmt_double(synth.spike_mult)},
        {"synth.jump_delay_s", std::to_string(synth.jump_delay_s)},
        {"synth.jump_pct", fmt_double(synth.jump_pct)},
    };
    std::sort(rows.begin(), rows.end());
    std::string out;
    for (const auto& [k, v] : rows) {
        out += k;
        out += '=';
        out += v;
        out += '\n';
    }
    return out;
}

uint64_t RunConfig::config_hash() const {
    const std::string text = canonical_kv();
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace sgym
