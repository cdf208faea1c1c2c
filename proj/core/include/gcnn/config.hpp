#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "gcnn/dataset.hpp"
#include "gcnn/nn.hpp"
#include "gcnn/optim.hpp"
#include "gcnn/pipeline.hpp"

namespace gcnn {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Minimal TOML-style document: [section] headers, key = value lines,
// '#' comments. Values: integers, floats, booleans, "strings", and flat
// arrays of numbers or strings.
class KvConfig {
public:
    using Value = std::variant<std::int64_t, double, bool, std::string, std::vector<double>,
                               std::vector<std::string>>;

    static KvConfig parse(const std::string& text);
    static KvConfig parse_file(const std::string& path);

    bool has(const std::string& section, const std::string& key) const;

    std::int64_t get_int(const std::string& section, const std::string& key,
                         std::int64_t fallback) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const;
    std::vector<double> get_doubles(const std::string& section, const std::string& key) const;
    std::vector<std::string> get_strings(const std::string& section, const std::string& key) const;

private:
    const Value* find(const std::string& section, const std::string& key) const;
    std::map<std::string, std::map<std::string, Value>> sections_;
};

// The full experiment matrix description. Defaults mirror the reference
// training recipe: batch 64, 50 epochs, lr 1e-2, wd 1e-2, momentum 0.9,
// 5 warmup epochs, 5 trials.
struct ExperimentConfig {
    DatasetConfig dataset;
    std::uint64_t dataset_seed = 42;

    std::vector<PipelineVariant> variants = {PipelineVariant::A};
    std::vector<Arch> architectures = {Arch::MiniCNN};
    std::vector<double> train_distances;
    int trials = 5;
    int net_size = 32;
    int batch_size = 64;
    OptimConfig optim;
    std::uint64_t base_seed = 1;
    std::vector<std::uint64_t> trial_seeds;  // optional; derived from base_seed when empty

    bool save_checkpoints = false;

    static ExperimentConfig from_kv(const KvConfig& kv);
    static ExperimentConfig from_file(const std::string& path);
};

}  // namespace gcnn
