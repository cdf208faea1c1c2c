#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gcnn/dataset.hpp"
#include "gcnn/nn.hpp"
#include "gcnn/pipeline.hpp"
#include "gcnn/svm.hpp"

namespace gcnn {

struct BadBlockIndex : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ProbeRow {
    int block_index = 0;  // 1-based, 1 = first residual block
    int feature_dim = 0;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
};

struct ProbeResult {
    std::vector<ProbeRow> rows;
};

// Feature matrix (N x C_block) at the given 1-based block tap: eval_transform,
// preprocessing pipeline, eval-mode forward to the tap, then global average
// pooling of the C x H x W activation.
Tensor extract_features(ModelGraph& model, const PipelineSpec& pipe,
                        std::span<const Sample> samples, int net_size, int block_index);

// Fits a linear SVM on train features at every block tap and evaluates both
// splits; rows ordered by block index. The model is only read.
ProbeResult probe_curve(ModelGraph& model, const PipelineSpec& pipe,
                        std::span<const Sample> train_samples,
                        std::span<const Sample> test_samples, int net_size, const SvmConfig& cfg);

// probe.csv: block_index,feature_dim,train_acc,test_acc
void write_probe_csv(const ProbeResult& result, const std::string& path);

}  // namespace gcnn
