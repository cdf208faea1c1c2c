#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gcnn/image.hpp"
#include "gcnn/rng.hpp"
#include "gcnn/tensor.hpp"

namespace gcnn {

struct TooSmall : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InvalidConfig : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnknownDistance : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CropLargerThanImage : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyDataset : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One acquisition condition on the synthetic turntable.
struct ViewCondition {
    int object_id = 0;
    double distance = 0.0;  // camera distance, cm
    double height = 0.0;    // camera height, cm
    double angle = 0.0;     // turntable angle, degrees in [0, 360)

    auto operator<=>(const ViewCondition&) const = default;
};

struct DatasetConfig {
    int n_objects = 10;
    std::vector<double> distances = {39.5, 47.0, 54.5, 62.0};
    std::vector<double> heights = {10.0, 16.0, 22.0, 28.0, 34.0};
    int n_angles = 42;  // 8400 total / (10 objects * 4 distances * 5 heights)
    int image_size = 64;

    // Counts-based construction following the default progressions:
    // distances from the table above (extended in 7.5 cm steps past four),
    // heights from 10.0 cm in 6.0 cm steps.
    static DatasetConfig from_counts(int objects, int n_distances, int n_heights, int angles,
                                     int size);

    std::size_t total_images() const {
        return static_cast<std::size_t>(n_objects) * distances.size() * heights.size() * n_angles;
    }
};

struct TurntableDataset {
    DatasetConfig config;
    std::map<ViewCondition, GrayImage> images;

    int n_objects() const { return config.n_objects; }
    std::size_t n_distances() const { return config.distances.size(); }
    std::size_t n_heights() const { return config.heights.size(); }
    int n_angles() const { return config.n_angles; }
    int image_size() const { return config.image_size; }
};

// Distance-based train/test split: train on one distance, test on the rest.
struct SplitSpec {
    double train_distance = 0.0;
    std::vector<double> test_distances;
};

SplitSpec split_all_but(const TurntableDataset& ds, double train_distance);

struct Sample {
    ViewCondition cond;
    int label = 0;  // == cond.object_id
    const GrayImage* image = nullptr;
};

// Renders object `object_id` as a textured parametric silhouette:
// apparent scale proportional to reference_distance/distance, vertical
// offset proportional to camera height, in-plane rotation by `angle`,
// plus seeded additive Gaussian noise (sigma 0.02).
GrayImage render_view(const ViewCondition& cond, int size, std::uint64_t seed);

inline constexpr double kReferenceDistanceCm = 47.0;
inline constexpr double kReferenceHeightCm = 22.0;
inline constexpr double kRenderNoiseSigma = 0.02;

// Full Cartesian product of conditions. Each image's seed is derived from
// (seed, condition), so generation is schedule independent.
TurntableDataset generate_dataset(const DatasetConfig& cfg, std::uint64_t seed);

std::pair<std::vector<Sample>, std::vector<Sample>> split_by_distance(const TurntableDataset& ds,
                                                                      const SplitSpec& spec);

// Training augmentation: random horizontal flip (p = 0.5), random square
// crop of side round(0.9167 * min(W,H)), bilinear resize to net_size.
GrayImage augment_train(const GrayImage& img, Rng& rng, int net_size);

inline constexpr double kCropRatio = 0.9167;  // generalizes the 110/120 crop geometry

// Test-time transform: center square crop of side min(W,H), resize.
GrayImage eval_transform(const GrayImage& img, int net_size);

// One epoch of batches: a seeded uniform shuffle partitioned into batches,
// last batch may be short.
std::vector<std::vector<std::size_t>> shuffled_batches(std::size_t n, std::size_t batch_size,
                                                       Rng& rng);

// Streams (input tensor, labels) batches for one epoch; `transform` maps a
// sample image to a C x H x W tensor (augmentation + pipeline).
class BatchIter {
public:
    using Transform = std::function<Tensor(const GrayImage&, Rng&)>;

    struct Batch {
        Tensor input;  // N x C x H x W
        std::vector<int> labels;
    };

    BatchIter(std::span<const Sample> samples, std::size_t batch_size, Rng& rng,
              Transform transform);

    std::optional<Batch> next();

private:
    std::span<const Sample> samples_;
    std::vector<std::vector<std::size_t>> batches_;
    std::size_t pos_ = 0;
    Rng* rng_;
    Transform transform_;
};

// On-disk layout: <root>/<object>/<distance>/<height>/<angle>.pgm plus
// manifest.csv (object_id,distance,height,angle,path). The manifest stores
// values with enough digits to round-trip doubles exactly.
void save_dataset(const TurntableDataset& ds, const std::string& root);
TurntableDataset load_dataset(const std::string& root);

}  // namespace gcnn
