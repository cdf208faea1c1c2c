#pragma once

#include <stdexcept>
#include <string>

#include "gcnn/nn.hpp"
#include "gcnn/tensor.hpp"

namespace gcnn {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensor interchange file (GBTF): magic "GBTF", u32 version, u32 rank,
// u64 dims[rank], then float32 little-endian payload, row-major.
void write_tensor_gbtf(const Tensor& t, const std::string& path);
Tensor read_tensor_gbtf(const std::string& path);

// Model checkpoint (GBNN): magic "GBNN", u32 version, u32 architecture tag,
// u32 in_channels, u32 n_classes, u32 input_size, u64 entry count, then one
// (u32 rank, u64 dims[], float32 payload) record per parameter tensor in
// graph order followed by the BatchNorm running statistics.
void save_checkpoint(const ModelGraph& g, const std::string& path);
ModelGraph load_checkpoint(const std::string& path);

}  // namespace gcnn
