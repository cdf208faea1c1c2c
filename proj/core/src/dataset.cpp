#include "gcnn/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

namespace gcnn {

namespace fs = std::filesystem;

DatasetConfig DatasetConfig::from_counts(int objects, int n_distances, int n_heights, int angles,
                                         int size) {
    DatasetConfig cfg;
    cfg.n_objects = objects;
    cfg.distances.clear();
    const std::vector<double> table = {39.5, 47.0, 54.5, 62.0};
    for (int i = 0; i < n_distances; ++i) {
        cfg.distances.push_back(i < static_cast<int>(table.size()) ? table[i]
                                                                   : 62.0 + 7.5 * (i - 3));
    }
    cfg.heights.clear();
    for (int i = 0; i < n_heights; ++i) cfg.heights.push_back(10.0 + 6.0 * i);
    cfg.n_angles = angles;
    cfg.image_size = size;
    return cfg;
}

SplitSpec split_all_but(const TurntableDataset& ds, double train_distance) {
    SplitSpec spec;
    spec.train_distance = train_distance;
    bool found = false;
    for (double d : ds.config.distances) {
        if (d == train_distance) {
            found = true;
        } else {
            spec.test_distances.push_back(d);
        }
    }
    if (!found) {
        throw UnknownDistance("split_all_but: distance " + std::to_string(train_distance) +
                              " not in dataset");
    }
    return spec;
}

namespace {

// Signed distances in object-local units (object circumradius 1, negative
// inside). The polygon distance is the distance to the nearest edge plane,
// exact near edges, which is all the rasterizer needs.
double sdf_polygon(double u, double v, int nsides) {
    const double pi = std::numbers::pi;
    const double sector = pi / nsides;
    double ang = std::atan2(v, u);
    const double r = std::hypot(u, v);
    double a = std::fmod(ang + sector + 2.0 * pi, 2.0 * sector) - sector;
    return r * std::cos(a) - std::cos(sector);
}

double sdf_ellipse(double u, double v, double aspect) {
    const double q = std::hypot(u, v / aspect);
    return (q - 1.0) * std::min(1.0, aspect);
}

double sdf_ring(double u, double v, double inner) {
    const double r = std::hypot(u, v);
    return std::max(r - 1.0, inner - r);
}

struct ObjectShape {
    int kind = 0;          // 0 polygon, 1 ellipse, 2 ring
    int nsides = 3;
    double aspect = 0.5;
    double inner = 0.5;
    double tex_freq = 2.0;  // stripe cycles per object diameter
    double tex_angle = 0.0; // stripe direction in object coordinates
};

ObjectShape object_shape(int object_id) {
    ObjectShape s;
    s.kind = object_id % 3;
    const int family = (object_id / 3) % 4;
    s.nsides = 3 + family;
    s.aspect = 0.45 + 0.15 * family;
    s.inner = 0.35 + 0.15 * (family % 3);
    s.tex_freq = 2.0 + static_cast<double>(object_id % 5);
    s.tex_angle = 0.7 * object_id;
    return s;
}

double shape_distance(const ObjectShape& s, double u, double v) {
    switch (s.kind) {
        case 0: return sdf_polygon(u, v, s.nsides);
        case 1: return sdf_ellipse(u, v, s.aspect);
        default: return sdf_ring(u, v, s.inner);
    }
}

constexpr double kBackground = 0.08;

std::uint64_t condition_seed(std::uint64_t seed, const ViewCondition& c) {
    std::uint64_t h = seed_mix(seed, static_cast<std::uint64_t>(c.object_id));
    h = seed_mix_real(h, c.distance);
    h = seed_mix_real(h, c.height);
    h = seed_mix_real(h, c.angle);
    return h;
}

}  // namespace

GrayImage render_view(const ViewCondition& cond, int size, std::uint64_t seed) {
    if (size < 16) throw TooSmall("render_view: size must be >= 16");
    if (!(cond.distance > 0.0)) throw InvalidConfig("render_view: distance must be > 0");

    double angle = std::fmod(cond.angle, 360.0);
    if (angle < 0.0) angle += 360.0;
    ViewCondition norm = cond;  // seed from the normalized angle so 0 == 360
    norm.angle = angle;
    const double rot = angle * std::numbers::pi / 180.0;
    const double cr = std::cos(rot), sr = std::sin(rot);

    const double radius_px = 0.30 * size * (kReferenceDistanceCm / cond.distance);
    const double cx = 0.5 * size;
    const double cy =
        (0.5 + std::clamp(0.008 * (cond.height - kReferenceHeightCm), -0.12, 0.12)) * size;

    const ObjectShape shape = object_shape(cond.object_id);
    const double two_pi_f = 2.0 * std::numbers::pi * shape.tex_freq * 0.5;  // per unit radius
    const double ta_c = std::cos(shape.tex_angle), ta_s = std::sin(shape.tex_angle);

    Rng rng(condition_seed(seed, norm));
    GrayImage img(size, size);
    for (int py = 0; py < size; ++py) {
        for (int px = 0; px < size; ++px) {
            const double dx = (px + 0.5 - cx) / radius_px;
            const double dy = (py + 0.5 - cy) / radius_px;
            // rotate into object coordinates so the object appears rotated by +angle
            const double u = cr * dx + sr * dy;
            const double v = -sr * dx + cr * dy;
            const double d_px = shape_distance(shape, u, v) * radius_px;
            const double coverage = std::clamp(0.5 - d_px, 0.0, 1.0);

            double val = kBackground;
            if (coverage > 0.0) {
                const double stripe = std::cos(two_pi_f * (u * ta_c + v * ta_s));
                const double obj = 0.725 + 0.175 * stripe;  // in [0.55, 0.90]
                val += coverage * (obj - kBackground);
            }
            val += kRenderNoiseSigma * rng.next_normal();
            img.at(px, py) = std::clamp(val, 0.0, 1.0);
        }
    }
    return img;
}

TurntableDataset generate_dataset(const DatasetConfig& cfg, std::uint64_t seed) {
    if (cfg.n_objects < 1 || cfg.distances.empty() || cfg.heights.empty() || cfg.n_angles < 1) {
        throw InvalidConfig("generate_dataset: all counts must be >= 1");
    }
    for (double d : cfg.distances) {
        if (!(d > 0.0)) throw InvalidConfig("generate_dataset: distances must be > 0");
    }

    TurntableDataset ds;
    ds.config = cfg;

    std::vector<ViewCondition> conds;
    conds.reserve(cfg.total_images());
    for (int obj = 0; obj < cfg.n_objects; ++obj) {
        for (double dist : cfg.distances) {
            for (double height : cfg.heights) {
                for (int a = 0; a < cfg.n_angles; ++a) {
                    ViewCondition c;
                    c.object_id = obj;
                    c.distance = dist;
                    c.height = height;
                    c.angle = 360.0 * a / cfg.n_angles;
                    conds.push_back(c);
                }
            }
        }
    }

    std::vector<GrayImage> rendered(conds.size());
#pragma omp parallel for schedule(dynamic, 8)
    for (long i = 0; i < static_cast<long>(conds.size()); ++i) {
        rendered[static_cast<std::size_t>(i)] =
            render_view(conds[static_cast<std::size_t>(i)], cfg.image_size, seed);
    }
    for (std::size_t i = 0; i < conds.size(); ++i) {
        ds.images.emplace(conds[i], std::move(rendered[i]));
    }
    return ds;
}

std::pair<std::vector<Sample>, std::vector<Sample>> split_by_distance(const TurntableDataset& ds,
                                                                      const SplitSpec& spec) {
    auto has = [&](double d) {
        return std::find(ds.config.distances.begin(), ds.config.distances.end(), d) !=
               ds.config.distances.end();
    };
    if (!has(spec.train_distance)) {
        throw UnknownDistance("split_by_distance: train distance not in dataset");
    }
    for (double d : spec.test_distances) {
        if (!has(d)) throw UnknownDistance("split_by_distance: test distance not in dataset");
    }

    std::vector<Sample> train, test;
    for (const auto& [cond, img] : ds.images) {
        Sample s;
        s.cond = cond;
        s.label = cond.object_id;
        s.image = &img;
        if (cond.distance == spec.train_distance) {
            train.push_back(s);
        } else if (std::find(spec.test_distances.begin(), spec.test_distances.end(),
                             cond.distance) != spec.test_distances.end()) {
            test.push_back(s);
        }
    }
    return {std::move(train), std::move(test)};
}

GrayImage augment_train(const GrayImage& img, Rng& rng, int net_size) {
    const int m = std::min(img.width, img.height);
    const int side = static_cast<int>(std::llround(kCropRatio * m));
    if (side < 1 || side > m) {
        throw CropLargerThanImage("augment_train: image too small for the crop geometry");
    }
    const bool flip = rng.next_double() < 0.5;
    const int x0 = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(img.width - side + 1)));
    const int y0 = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(img.height - side + 1)));

    GrayImage out = flip ? hflip(img) : img;
    out = crop(out, x0, y0, side, side);
    return resize_bilinear(out, net_size, net_size);
}

GrayImage eval_transform(const GrayImage& img, int net_size) {
    const int side = std::min(img.width, img.height);
    const int x0 = (img.width - side) / 2;
    const int y0 = (img.height - side) / 2;
    GrayImage out = crop(img, x0, y0, side, side);
    return resize_bilinear(out, net_size, net_size);
}

std::vector<std::vector<std::size_t>> shuffled_batches(std::size_t n, std::size_t batch_size,
                                                       Rng& rng) {
    if (n == 0) throw EmptyDataset("shuffled_batches: no samples");
    if (batch_size == 0) throw InvalidConfig("shuffled_batches: batch size must be >= 1");

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    // Fisher-Yates with the project RNG so the order is platform independent
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = rng.next_below(i);
        std::swap(order[i - 1], order[j]);
    }

    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t end = std::min(n, start + batch_size);
        batches.emplace_back(order.begin() + start, order.begin() + end);
    }
    return batches;
}

BatchIter::BatchIter(std::span<const Sample> samples, std::size_t batch_size, Rng& rng,
                     Transform transform)
    : samples_(samples), rng_(&rng), transform_(std::move(transform)) {
    batches_ = shuffled_batches(samples.size(), batch_size, rng);
}

std::optional<BatchIter::Batch> BatchIter::next() {
    if (pos_ >= batches_.size()) return std::nullopt;
    const auto& idx = batches_[pos_++];

    Batch b;
    b.labels.reserve(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const Sample& s = samples_[idx[k]];
        Tensor t = transform_(*s.image, *rng_);
        if (k == 0) {
            b.input = Tensor({idx.size(), t.dim(0), t.dim(1), t.dim(2)});
        }
        std::copy(t.data.begin(), t.data.end(), b.input.data.begin() + k * t.numel());
        b.labels.push_back(s.label);
    }
    return b;
}

namespace {

std::string fmt_exact(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_path_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

double parse_double(const std::string& s) {
    try {
        return std::stod(s);
    } catch (const std::exception&) {
        throw InvalidConfig("manifest: cannot parse number '" + s + "'");
    }
}

}  // namespace

void save_dataset(const TurntableDataset& ds, const std::string& root) {
    fs::create_directories(root);
    std::ofstream manifest(fs::path(root) / "manifest.csv", std::ios::trunc);
    if (!manifest) throw InvalidConfig("save_dataset: cannot write manifest under " + root);
    manifest << "object_id,distance,height,angle,path\n";
    for (const auto& [cond, img] : ds.images) {
        const fs::path rel = fs::path(std::to_string(cond.object_id)) /
                             fmt_path_num(cond.distance) / fmt_path_num(cond.height) /
                             (fmt_path_num(cond.angle) + ".pgm");
        const fs::path full = fs::path(root) / rel;
        fs::create_directories(full.parent_path());
        write_pgm(img, full.string());
        manifest << cond.object_id << ',' << fmt_exact(cond.distance) << ','
                 << fmt_exact(cond.height) << ',' << fmt_exact(cond.angle) << ','
                 << rel.generic_string() << '\n';
    }
}

TurntableDataset load_dataset(const std::string& root) {
    std::ifstream manifest(fs::path(root) / "manifest.csv");
    if (!manifest) throw InvalidConfig("load_dataset: no manifest.csv under " + root);

    TurntableDataset ds;
    std::string line;
    std::getline(manifest, line);  // header
    std::vector<double> distances, heights, angles;
    int max_object = -1;
    while (std::getline(manifest, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string f_obj, f_dist, f_h, f_ang, f_path;
        std::getline(ss, f_obj, ',');
        std::getline(ss, f_dist, ',');
        std::getline(ss, f_h, ',');
        std::getline(ss, f_ang, ',');
        std::getline(ss, f_path);

        ViewCondition c;
        c.object_id = static_cast<int>(parse_double(f_obj));
        c.distance = parse_double(f_dist);
        c.height = parse_double(f_h);
        c.angle = parse_double(f_ang);

        GrayImage img = read_pgm((fs::path(root) / f_path).string());
        ds.config.image_size = img.width;
        ds.images.emplace(c, std::move(img));

        max_object = std::max(max_object, c.object_id);
        if (std::find(distances.begin(), distances.end(), c.distance) == distances.end())
            distances.push_back(c.distance);
        if (std::find(heights.begin(), heights.end(), c.height) == heights.end())
            heights.push_back(c.height);
        if (std::find(angles.begin(), angles.end(), c.angle) == angles.end())
            angles.push_back(c.angle);
    }
    if (ds.images.empty()) throw EmptyDataset("load_dataset: manifest has no rows");

    std::sort(distances.begin(), distances.end());
    std::sort(heights.begin(), heights.end());
    ds.config.n_objects = max_object + 1;
    ds.config.distances = std::move(distances);
    ds.config.heights = std::move(heights);
    ds.config.n_angles = static_cast<int>(angles.size());
    return ds;
}

}  // namespace gcnn
