#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sgym/agents.hpp"
#include "sgym/env.hpp"
#include "sgym/nn.hpp"
#include "sgym/synth.hpp"

namespace sgym {

// One flat key=value file drives every stage. '#' starts a comment, blank
// lines are skipped, unknown keys are hard errors. CLI overrides use the same
// key=value syntax.
struct RunConfig {
    std::string data_dir;      // directory of <ticker>_<date>.csv/.json days
    std::string out_dir = "out";
    double filter_threshold = 15.0;  // minimum intraday rise, percent
    double split_ratio = 0.7;        // train fraction of the filtered universe
    uint64_t seed = 1;

    EnvConfig env;
    nn::NetworkSpec net;  // base layout; per-role specs via role_network_spec()
    PretrainConfig pretrain;
    TrainConfig train;  // .env and .seed are synced from the fields above
    SynthConfig synth;  // .seed synced from seed

    static RunConfig from_file(const std::string& path,
                               const std::vector<std::string>& overrides = {});
    static RunConfig from_kv(const std::map<std::string, std::string>& kv);

    void validate() const;

    // Every effective setting as sorted key=value lines; doubles printed with
    // shortest round-trip formatting so the hash is exact.
    std::string canonical_kv() const;
    uint64_t config_hash() const;  // FNV-1a over canonical_kv()
};

// Parses "key=value" (or "key = value") lines; throws ConfigError on syntax.
std::map<std::string, std::string> parse_kv_text(const std::string& text);

}  // namespace sgym
