#include "sgym/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "sgym/errors.hpp"

namespace sgym {

namespace {

void put_u32(std::string& buf, uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& buf, double x) {
    const uint64_t bits = std::bit_cast<uint64_t>(x);
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

bool get_u32(std::istream& in, uint32_t& v) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (in.gcount() == 0) return false;  // clean EOF
    if (in.gcount() != 4) throw DataError("truncated checkpoint");
    v = static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
        (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
    return true;
}

double get_f64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (in.gcount() != 8) throw DataError("truncated checkpoint");
    uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

}  // namespace

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, const Tensor*>>& tensors) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure("cannot write checkpoint: " + path);
    out.write(kCheckpointMagic, 5);
    std::string buf;
    for (const auto& [name, t] : tensors) {
        buf.clear();
        put_u32(buf, static_cast<uint32_t>(name.size()));
        buf += name;
        put_u32(buf, static_cast<uint32_t>(t->rank()));
        for (int d : t->shape) put_u32(buf, static_cast<uint32_t>(d));
        for (double x : t->data) put_f64(buf, x);
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
    if (!out) throw IoFailure("checkpoint write failed: " + path);
}

std::map<std::string, Tensor> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open checkpoint: " + path);
    char magic[5];
    in.read(magic, 5);
    if (in.gcount() != 5 || std::memcmp(magic, kCheckpointMagic, 5) != 0)
        throw DataError("bad checkpoint magic in " + path);
    std::map<std::string, Tensor> out;
    uint32_t name_len = 0;
    while (get_u32(in, name_len)) {
        if (name_len > 4096) throw DataError("implausible tensor name length");
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (in.gcount() != static_cast<std::streamsize>(name_len))
            throw DataError("truncated checkpoint");
        uint32_t rank = 0;
        if (!get_u32(in, rank)) throw DataError("truncated checkpoint");
        if (rank > 8) throw DataError("implausible tensor rank");
        std::vector<int> shape(rank);
        for (uint32_t i = 0; i < rank; ++i) {
            uint32_t d = 0;
            if (!get_u32(in, d)) throw DataError("truncated checkpoint");
            shape[i] = static_cast<int>(d);
        }
        Tensor t(shape);
        for (size_t i = 0; i < t.size(); ++i) t[i] = get_f64(in);
        out.emplace(std::move(name), std::move(t));
    }
    return out;
}

Tensor make_meta_tensor(uint64_t seed, uint64_t config_hash) {
    Tensor t(std::vector<int>{2});
    t[0] = std::bit_cast<double>(seed);
    t[1] = std::bit_cast<double>(config_hash);
    return t;
}

std::optional<std::pair<uint64_t, uint64_t>> read_meta(
    const std::map<std::string, Tensor>& ckpt) {
    auto it = ckpt.find("__meta");
    if (it == ckpt.end() || it->second.size() != 2) return std::nullopt;
    return std::make_pair(std::bit_cast<uint64_t>(it->second[0]),
                          std::bit_cast<uint64_t>(it->second[1]));
}

void save_network(const std::string& path, const nn::QNetwork& net, uint64_t seed,
                  uint64_t config_hash) {
    const Tensor meta = make_meta_tensor(seed, config_hash);
    std::vector<std::pair<std::string, const Tensor*>> tensors;
    for (const auto& [name, t] : net.named_params()) tensors.emplace_back(name, t);
    tensors.emplace_back("__meta", &meta);
    save_checkpoint(path, tensors);
}

void load_network(nn::QNetwork& net, const std::string& path) {
    const auto ckpt = load_checkpoint(path);
    for (auto& [name, t] : net.named_params()) {
        auto it = ckpt.find(name);
        if (it == ckpt.end())
            throw DataError("checkpoint " + path + " missing tensor '" + name + "'");
        if (it->second.shape != t->shape)
            throw ShapeMismatch("checkpoint tensor '" + name + "' has wrong shape in " + path);
        t->data = it->second.data;
    }
}

}  // namespace sgym
