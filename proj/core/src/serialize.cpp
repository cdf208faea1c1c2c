#include "gcnn/serialize.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace gcnn {

namespace {

static_assert(std::endian::native == std::endian::little,
              "serialization assumes a little-endian host");

template <typename T>
void write_pod(std::ofstream& f, T v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& f, const char* what) {
    T v{};
    if (!f.read(reinterpret_cast<char*>(&v), sizeof(T))) {
        throw IoError(std::string("unexpected end of file reading ") + what);
    }
    return v;
}

void write_tensor_record(std::ofstream& f, const Tensor& t) {
    write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape) write_pod<std::uint64_t>(f, d);
    for (double v : t.data) write_pod<float>(f, static_cast<float>(v));
}

void read_tensor_record(std::ifstream& f, Tensor& t, const char* what) {
    const auto rank = read_pod<std::uint32_t>(f, what);
    std::vector<std::size_t> dims(rank);
    for (auto& d : dims) d = read_pod<std::uint64_t>(f, what);
    if (dims != t.shape) {
        throw IoError(std::string(what) + ": shape " + shape_str(dims) +
                      " does not match model tensor " + shape_str(t.shape));
    }
    for (double& v : t.data) v = read_pod<float>(f, what);
}

constexpr std::uint32_t kGbtfVersion = 1;
constexpr std::uint32_t kGbnnVersion = 1;

}  // namespace

void write_tensor_gbtf(const Tensor& t, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("write_tensor_gbtf: cannot open " + path);
    f.write("GBTF", 4);
    write_pod<std::uint32_t>(f, kGbtfVersion);
    write_tensor_record(f, t);
    if (!f) throw IoError("write_tensor_gbtf: write failed for " + path);
}

Tensor read_tensor_gbtf(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("read_tensor_gbtf: cannot open " + path);
    char magic[4];
    if (!f.read(magic, 4) || std::memcmp(magic, "GBTF", 4) != 0) {
        throw IoError("read_tensor_gbtf: bad magic in " + path);
    }
    const auto version = read_pod<std::uint32_t>(f, "gbtf version");
    if (version != kGbtfVersion) throw IoError("read_tensor_gbtf: unsupported version");
    const auto rank = read_pod<std::uint32_t>(f, "gbtf rank");
    std::vector<std::size_t> dims(rank);
    for (auto& d : dims) d = read_pod<std::uint64_t>(f, "gbtf dims");
    Tensor t(dims);
    for (double& v : t.data) v = read_pod<float>(f, "gbtf payload");
    return t;
}

void save_checkpoint(const ModelGraph& g, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("save_checkpoint: cannot open " + path);
    f.write("GBNN", 4);
    write_pod<std::uint32_t>(f, kGbnnVersion);
    write_pod<std::uint32_t>(f, g.arch == Arch::MiniCNN ? 0u : 1u);
    write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(g.in_channels));
    write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(g.n_classes));
    write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(g.input_size));

    const auto params = g.parameters();
    const auto stats = g.running_stats();
    write_pod<std::uint64_t>(f, static_cast<std::uint64_t>(params.size() + stats.size()));
    for (const Tensor* t : params) write_tensor_record(f, *t);
    for (const Tensor* t : stats) write_tensor_record(f, *t);
    if (!f) throw IoError("save_checkpoint: write failed for " + path);
}

ModelGraph load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("load_checkpoint: cannot open " + path);
    char magic[4];
    if (!f.read(magic, 4) || std::memcmp(magic, "GBNN", 4) != 0) {
        throw IoError("load_checkpoint: bad magic in " + path);
    }
    const auto version = read_pod<std::uint32_t>(f, "gbnn version");
    if (version != kGbnnVersion) throw IoError("load_checkpoint: unsupported version");
    const auto arch_tag = read_pod<std::uint32_t>(f, "gbnn arch");
    if (arch_tag > 1) throw IoError("load_checkpoint: unknown architecture tag");
    const auto in_channels = read_pod<std::uint32_t>(f, "gbnn in_channels");
    const auto n_classes = read_pod<std::uint32_t>(f, "gbnn n_classes");
    const auto input_size = read_pod<std::uint32_t>(f, "gbnn input_size");

    ModelGraph g = build_model(arch_tag == 0 ? Arch::MiniCNN : Arch::MiniResNet8,
                               static_cast<int>(in_channels), static_cast<int>(n_classes), 0,
                               static_cast<int>(input_size));

    const auto params = g.parameters();
    const auto stats = g.running_stats();
    const auto n_entries = read_pod<std::uint64_t>(f, "gbnn entry count");
    if (n_entries != params.size() + stats.size()) {
        throw IoError("load_checkpoint: entry count mismatch");
    }
    for (Tensor* t : params) read_tensor_record(f, *t, "gbnn parameter");
    for (Tensor* t : stats) read_tensor_record(f, *t, "gbnn running stat");
    return g;
}

}  // namespace gcnn
