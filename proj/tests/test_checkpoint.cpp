#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "sgym/checkpoint.hpp"
#include "sgym/errors.hpp"
#include "sgym/nn.hpp"
#include "sgym/rng.hpp"

using namespace sgym;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / "sgym_ckpt_test") {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const char* name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("tensor round trip is bit-exact") {
    TempDir tmp;
    Tensor a({2, 3});
    a.data = {1.0, -2.5, 3.25, 1.0 / 3.0, 1e-300, -0.0};
    Tensor b({4});
    b.data = {5.0, 6.0, 7.0, 8.0};
    save_checkpoint(tmp.file("t.ckpt"), {{"alpha", &a}, {"beta", &b}});

    auto back = load_checkpoint(tmp.file("t.ckpt"));
    REQUIRE(back.size() == 2);
    REQUIRE(back.count("alpha") == 1);
    CHECK(back.at("alpha").shape == a.shape);
    for (size_t i = 0; i < a.data.size(); ++i)
        CHECK(back.at("alpha").data[i] == a.data[i]);
    CHECK(back.at("beta").data == b.data);
}

TEST_CASE("corrupt files are rejected") {
    TempDir tmp;
    Tensor a({3});
    a.data = {1.0, 2.0, 3.0};
    save_checkpoint(tmp.file("good.ckpt"), {{"x", &a}});

    SUBCASE("bad magic") {
        std::ofstream os(tmp.file("bad.ckpt"), std::ios::binary);
        os << "NOPE!" << std::string(64, '\0');
        os.close();
        CHECK_THROWS_AS(load_checkpoint(tmp.file("bad.ckpt")), DataError);
    }
    SUBCASE("truncated payload") {
        std::ifstream is(tmp.file("good.ckpt"), std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(is)), {});
        is.close();
        std::ofstream os(tmp.file("trunc.ckpt"), std::ios::binary);
        os.write(bytes.data(), std::streamsize(bytes.size() - 7));
        os.close();
        CHECK_THROWS_AS(load_checkpoint(tmp.file("trunc.ckpt")), DataError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_checkpoint(tmp.file("absent.ckpt")), DataError);
    }
}

TEST_CASE("meta tensor carries seed and config hash bit-exactly") {
    const uint64_t seed = 0xDEADBEEFCAFEF00DULL;
    const uint64_t hash = 0x0123456789ABCDEFULL;
    Tensor meta = make_meta_tensor(seed, hash);
    std::map<std::string, Tensor> m;
    m.emplace("__meta", meta);
    auto got = read_meta(m);
    REQUIRE(got.has_value());
    CHECK(got->first == seed);
    CHECK(got->second == hash);
    CHECK_FALSE(read_meta({}).has_value());
}

TEST_CASE("network save/load round trip preserves checksum and outputs") {
    TempDir tmp;
    nn::NetworkSpec spec;
    spec.c3_out = 2;
    spec.c1_out = 3;
    spec.dense_width = 6;
    spec.use_lt = true;
    nn::QNetwork net(spec);
    Rng rng(99);
    net.init(rng);

    save_network(tmp.file("net.ckpt"), net, 77, 0xABCDULL);

    nn::QNetwork back(spec);
    load_network(back, tmp.file("net.ckpt"));
    CHECK(back.param_checksum() == net.param_checksum());

    auto ck = load_checkpoint(tmp.file("net.ckpt"));
    auto meta = read_meta(ck);
    REQUIRE(meta.has_value());
    CHECK(meta->first == 77);
    CHECK(meta->second == 0xABCDULL);

    // Loading into a different architecture must fail loudly.
    nn::NetworkSpec other = spec;
    other.dense_width = 7;
    nn::QNetwork wrong(other);
    CHECK_THROWS_AS(load_network(wrong, tmp.file("net.ckpt")), ShapeMismatch);
}
