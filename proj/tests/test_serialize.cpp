#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "gcnn/rng.hpp"
#include "gcnn/serialize.hpp"

using namespace gcnn;

namespace {
namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / "gcnn_serialize_test") {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("gbtf round-trips shape and float32 payload") {
    TempDir tmp;
    const auto file = (tmp.path / "t.gbtf").string();

    Rng rng(3);
    Tensor t({2, 3, 4});
    for (double& v : t.data) v = rng.next_normal();
    write_tensor_gbtf(t, file);

    const Tensor back = read_tensor_gbtf(file);
    REQUIRE(back.shape == t.shape);
    for (std::size_t i = 0; i < t.numel(); ++i) {
        CHECK(back.data[i] == doctest::Approx(t.data[i]).epsilon(1e-6));
        CHECK(back.data[i] == static_cast<double>(static_cast<float>(t.data[i])));
    }
}

TEST_CASE("gbtf header layout is as documented") {
    TempDir tmp;
    const auto file = (tmp.path / "t.gbtf").string();
    Tensor t({2, 2});
    t.data = {1.0, 2.0, 3.0, 4.0};
    write_tensor_gbtf(t, file);

    std::ifstream f(file, std::ios::binary);
    char magic[4];
    f.read(magic, 4);
    CHECK(std::string(magic, 4) == "GBTF");
    std::uint32_t version = 0, rank = 0;
    f.read(reinterpret_cast<char*>(&version), 4);
    f.read(reinterpret_cast<char*>(&rank), 4);
    CHECK(version == 1);
    CHECK(rank == 2);
    std::uint64_t d0 = 0, d1 = 0;
    f.read(reinterpret_cast<char*>(&d0), 8);
    f.read(reinterpret_cast<char*>(&d1), 8);
    CHECK(d0 == 2);
    CHECK(d1 == 2);
    float first = 0.0f;
    f.read(reinterpret_cast<char*>(&first), 4);
    CHECK(first == 1.0f);
    CHECK(fs::file_size(file) == 4 + 4 + 4 + 16 + 16);
}

TEST_CASE("gbtf rejects corrupt files") {
    TempDir tmp;
    const auto file = (tmp.path / "bad.gbtf").string();
    std::ofstream(file, std::ios::binary) << "NOPE";
    CHECK_THROWS_AS(read_tensor_gbtf(file), IoError);
    CHECK_THROWS_AS(read_tensor_gbtf((tmp.path / "missing.gbtf").string()), IoError);
}

TEST_CASE("checkpoint round-trips both architectures") {
    TempDir tmp;
    for (Arch arch : {Arch::MiniCNN, Arch::MiniResNet8}) {
        const auto file = (tmp.path / (arch_name(arch) + ".gbnn")).string();
        auto model = build_model(arch, 8, 5, 1234, 32);

        // nudge the running stats away from init so they are exercised
        Rng rng(9);
        for (Tensor* t : model.running_stats()) {
            for (double& v : t->data) v = rng.next_double() + 0.5;
        }
        save_checkpoint(model, file);

        const auto back = load_checkpoint(file);
        CHECK(back.arch == arch);
        CHECK(back.in_channels == 8);
        CHECK(back.n_classes == 5);
        CHECK(back.input_size == 32);

        const auto p0 = model.parameters(), p1 = back.parameters();
        REQUIRE(p0.size() == p1.size());
        for (std::size_t i = 0; i < p0.size(); ++i) {
            REQUIRE(p0[i]->shape == p1[i]->shape);
            for (std::size_t j = 0; j < p0[i]->numel(); ++j) {
                CHECK(p1[i]->data[j] == static_cast<double>(static_cast<float>(p0[i]->data[j])));
            }
        }
        const auto s0 = model.running_stats(), s1 = back.running_stats();
        REQUIRE(s0.size() == s1.size());
        for (std::size_t i = 0; i < s0.size(); ++i) {
            for (std::size_t j = 0; j < s0[i]->numel(); ++j) {
                CHECK(s1[i]->data[j] == static_cast<double>(static_cast<float>(s0[i]->data[j])));
            }
        }
    }
}

TEST_CASE("reloaded checkpoints produce the same eval outputs") {
    TempDir tmp;
    const auto file = (tmp.path / "model.gbnn").string();
    auto model = build_model(Arch::MiniResNet8, 1, 3, 77, 16);
    save_checkpoint(model, file);
    auto twin = load_checkpoint(file);

    Rng rng(5);
    Tensor x({2, 1, 16, 16});
    for (double& v : x.data) v = rng.next_double();

    // float32 quantization perturbs parameters by ~1e-8 relative
    const Tensor a = model_forward(model, x, Mode::Eval);
    const Tensor b = model_forward(twin, x, Mode::Eval);
    for (std::size_t i = 0; i < a.numel(); ++i) {
        CHECK(a.data[i] == doctest::Approx(b.data[i]).epsilon(1e-4));
    }
}

TEST_CASE("checkpoint loader rejects mismatched files") {
    TempDir tmp;
    const auto file = (tmp.path / "tensor.gbnn").string();
    Tensor t({2});
    write_tensor_gbtf(t, file);  // wrong magic for a checkpoint
    CHECK_THROWS_AS(load_checkpoint(file), IoError);
}
