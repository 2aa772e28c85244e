#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sgym/nn.hpp"
#include "sgym/tensor.hpp"

namespace sgym {

// Self-describing binary weight file: magic "SGNN1", then for each tensor
// u32 name length, name bytes, u32 rank, u32 dims[rank], f64 data, all
// little-endian. Tensors are read until end of file.
constexpr char kCheckpointMagic[] = "SGNN1";

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, const Tensor*>>& tensors);

std::map<std::string, Tensor> load_checkpoint(const std::string& path);

// Encodes (seed, config hash) bit-exactly into a 2-element tensor stored
// under the reserved name "__meta".
Tensor make_meta_tensor(uint64_t seed, uint64_t config_hash);
std::optional<std::pair<uint64_t, uint64_t>> read_meta(const std::map<std::string, Tensor>& ckpt);

// Network convenience wrappers. Loading requires every parameter name to be
// present with a matching shape; extra tensors (e.g. __meta) are ignored.
void save_network(const std::string& path, const nn::QNetwork& net, uint64_t seed,
                  uint64_t config_hash);
void load_network(nn::QNetwork& net, const std::string& path);

}  // namespace sgym
