// gcnn: Gabor-preprocessed CNN experiment tool.
//
// Subcommands mirror the experiment workflow: `dataset gen` renders the
// synthetic turntable dataset, `genbank` dumps filter banks, `preprocess`
// runs one image through a pipeline, `train` executes the experiment
// matrix, `probe` fits per-block linear SVMs, `report` recomputes summary
// tables from raw results.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "gcnn/config.hpp"
#include "gcnn/experiment.hpp"
#include "gcnn/probe.hpp"
#include "gcnn/serialize.hpp"

namespace fs = std::filesystem;
using namespace gcnn;

namespace {

GrayImage kernel_to_image(const Kernel2D& k) {
    double lo = k.weights[0], hi = k.weights[0];
    for (double w : k.weights) {
        lo = std::min(lo, w);
        hi = std::max(hi, w);
    }
    const double span = hi - lo > 0.0 ? hi - lo : 1.0;
    GrayImage img(k.size, k.size);
    for (std::size_t i = 0; i < k.weights.size(); ++i) {
        img.data[i] = (k.weights[i] - lo) / span;
    }
    return img;
}

void write_kernel_csv(const Kernel2D& k, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot open " + path);
    char buf[40];
    for (int y = 0; y < k.size; ++y) {
        for (int x = 0; x < k.size; ++x) {
            std::snprintf(buf, sizeof(buf), "%.12g", k.weights[std::size_t(y) * k.size + x]);
            f << buf << (x + 1 == k.size ? '\n' : ',');
        }
    }
}

int cmd_dataset_gen(int objects, int distances, int heights, int angles, int size,
                    std::uint64_t seed, const std::string& out) {
    const auto cfg = DatasetConfig::from_counts(objects, distances, heights, angles, size);
    std::printf("rendering %zu images (%d objects x %d distances x %d heights x %d angles)...\n",
                cfg.total_images(), objects, distances, heights, angles);
    const auto ds = generate_dataset(cfg, seed);
    save_dataset(ds, out);
    std::printf("wrote %zu images and manifest.csv under %s\n", ds.images.size(), out.c_str());
    return 0;
}

int cmd_genbank(const std::string& variant, const std::string& out) {
    const PipelineVariant v = parse_variant(variant);
    const GaborBank bank = build_bank(v);
    fs::create_directories(out);
    for (std::size_t i = 0; i < bank.filters.size(); ++i) {
        const auto& f = bank.filters[i];
        char stem[64];
        std::snprintf(stem, sizeof(stem), "filter_%02zu_sigma%.3f_theta%.3f_phi%.3f", i,
                      f.params.sigma, f.params.orientation, f.params.phase);
        write_pgm(kernel_to_image(f.kernel), (fs::path(out) / (std::string(stem) + ".pgm")).string());
        write_kernel_csv(f.kernel, (fs::path(out) / (std::string(stem) + ".csv")).string());
    }
    std::printf("wrote %zu kernels (PGM + CSV) under %s\n", bank.filters.size(), out.c_str());
    return 0;
}

int cmd_preprocess(const std::string& variant, const std::string& input, const std::string& out,
                   bool debug_pgm) {
    const PipelineVariant v = parse_variant(variant);
    const GrayImage img = read_pgm(input);
    const PipelineSpec spec = build_pipeline(v);
    const Tensor features = apply_pipeline(spec, img);

    fs::create_directories(out);
    const auto tensor_path = fs::path(out) / "features.gbtf";
    write_tensor_gbtf(features, tensor_path.string());
    std::printf("wrote %s (%zu channels of %zux%zu)\n", tensor_path.c_str(), features.dim(0),
                features.dim(1), features.dim(2));

    if (debug_pgm) {
        const std::size_t plane = features.dim(1) * features.dim(2);
        for (std::size_t c = 0; c < features.dim(0); ++c) {
            GrayImage ch(static_cast<int>(features.dim(2)), static_cast<int>(features.dim(1)));
            double lo = features.data[c * plane], hi = lo;
            for (std::size_t i = 0; i < plane; ++i) {
                lo = std::min(lo, features.data[c * plane + i]);
                hi = std::max(hi, features.data[c * plane + i]);
            }
            const double span = hi - lo > 0.0 ? hi - lo : 1.0;
            for (std::size_t i = 0; i < plane; ++i) {
                ch.data[i] = (features.data[c * plane + i] - lo) / span;
            }
            char name[32];
            std::snprintf(name, sizeof(name), "channel_%02zu.pgm", c);
            write_pgm(ch, (fs::path(out) / name).string());
        }
        std::printf("wrote %zu per-channel debug PGMs\n", features.dim(0));
    }
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& out, std::uint64_t seed,
              bool seed_set) {
    ExperimentConfig cfg = ExperimentConfig::from_file(config_path);
    if (seed_set) cfg.base_seed = seed;

    std::printf("generating dataset (%zu images)...\n", cfg.dataset.total_images());
    const TurntableDataset ds = generate_dataset(cfg.dataset, cfg.dataset_seed);

    const std::string ckpt_dir = cfg.save_checkpoints ? (fs::path(out) / "checkpoints").string() : "";
    const ResultTable table = run_experiment(cfg, ds, ckpt_dir);
    emit_report(table, out);

    int failures = 0;
    for (const auto& r : table.rows) {
        if (r.ok) {
            std::printf("%s variant=%c dist=%.4g trial=%d  train=%.4f test=%.4f (%.2fs/epoch)\n",
                        r.architecture.c_str(), r.variant, r.train_distance, r.trial, r.train_acc,
                        r.test_acc, r.epoch_seconds);
        } else {
            ++failures;
            std::printf("%s variant=%c dist=%.4g trial=%d  FAILED: %s\n", r.architecture.c_str(),
                        r.variant, r.train_distance, r.trial, r.error.c_str());
        }
    }
    std::printf("wrote results.csv and summary.csv under %s\n", out.c_str());
    return failures == 0 ? 0 : 1;
}

int cmd_probe(const std::string& config_path, const std::string& checkpoint,
              const std::string& out) {
    ExperimentConfig cfg = ExperimentConfig::from_file(config_path);
    const TurntableDataset ds = generate_dataset(cfg.dataset, cfg.dataset_seed);

    const PipelineVariant variant = cfg.variants.front();
    const double dist = cfg.train_distances.front();
    const PipelineSpec pipe = build_pipeline(variant);
    const auto [train_s, test_s] = split_by_distance(ds, split_all_but(ds, dist));

    ModelGraph model;
    if (!checkpoint.empty()) {
        model = load_checkpoint(checkpoint);
        if (model.block_taps.empty()) {
            throw BadBlockIndex("probe: checkpoint architecture has no block taps");
        }
    } else {
        std::printf("no checkpoint given; training MiniResNet8 (variant %c, dist %.4g)...\n",
                    variant_tag(variant), dist);
        model = build_model(Arch::MiniResNet8, variant_channels(variant), ds.n_objects(),
                            seed_mix(cell_seed(cfg, Arch::MiniResNet8, variant, dist, 0),
                                     0x696e6974ull),
                            cfg.net_size);
        const auto m = train_cell(model, pipe, train_s, test_s, cfg.optim, cfg.batch_size,
                                  cfg.net_size, cell_seed(cfg, Arch::MiniResNet8, variant, dist, 0));
        std::printf("trained: train=%.4f test=%.4f\n", m.train_acc, m.test_acc);
    }

    SvmConfig svm_cfg;
    const ProbeResult result = probe_curve(model, pipe, train_s, test_s, cfg.net_size, svm_cfg);
    fs::create_directories(out);
    write_probe_csv(result, (fs::path(out) / "probe.csv").string());
    for (const auto& row : result.rows) {
        std::printf("block %d (dim %4d): train=%.4f test=%.4f\n", row.block_index, row.feature_dim,
                    row.train_accuracy, row.test_accuracy);
    }
    std::printf("wrote probe.csv under %s\n", out.c_str());
    return 0;
}

int cmd_report(const std::string& results_path, const std::string& out) {
    const ResultTable table = read_results_csv(results_path);
    emit_report(table, out);
    std::printf("recomputed summary.csv from %zu rows under %s\n", table.rows.size(), out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gabor-filter preprocessing and compact CNN training workbench"};
    app.require_subcommand(1);

    std::string out = "out";
    std::uint64_t seed = 1;

    // dataset gen
    auto* dataset = app.add_subcommand("dataset", "dataset utilities");
    dataset->require_subcommand(1);
    auto* gen = dataset->add_subcommand("gen", "render the synthetic turntable dataset");
    int g_objects = 10, g_distances = 4, g_heights = 5, g_angles = 42, g_size = 64;
    std::uint64_t g_seed = 42;
    std::string g_out = "dataset";
    gen->add_option("--objects", g_objects, "number of object classes");
    gen->add_option("--distances", g_distances, "number of camera distances");
    gen->add_option("--heights", g_heights, "number of camera heights");
    gen->add_option("--angles", g_angles, "turntable angles per revolution");
    gen->add_option("--size", g_size, "image side in pixels");
    gen->add_option("--seed", g_seed, "render seed");
    gen->add_option("--out", g_out, "output directory");

    // genbank
    auto* genbank = app.add_subcommand("genbank", "emit filter bank kernels as PGM + CSV");
    std::string b_variant = "b";
    std::string b_out = "bank";
    genbank->add_option("--variant", b_variant, "pipeline variant (b, c or d)")->required();
    genbank->add_option("--out", b_out, "output directory");

    // preprocess
    auto* preprocess = app.add_subcommand("preprocess", "run one image through a pipeline");
    std::string p_variant = "a", p_input;
    std::string p_out = "preprocessed";
    bool p_debug = false;
    preprocess->add_option("--variant", p_variant, "pipeline variant (a-d)")->required();
    preprocess->add_option("--input", p_input, "input PGM image")->required();
    preprocess->add_option("--out", p_out, "output directory");
    preprocess->add_flag("--debug-pgm", p_debug, "also write per-channel debug PGMs");

    // train
    auto* train = app.add_subcommand("train", "run the experiment matrix from a config file");
    std::string t_config;
    train->add_option("--config", t_config, "experiment config file")->required();
    auto* t_seed_opt = train->add_option("--seed", seed, "override experiment.seed");
    train->add_option("--out", out, "output directory");

    // probe
    auto* probe = app.add_subcommand("probe", "per-block linear SVM probe of a MiniResNet8");
    std::string pr_config, pr_checkpoint;
    probe->add_option("--config", pr_config, "experiment config file")->required();
    probe->add_option("--checkpoint", pr_checkpoint, "GBNN checkpoint (trains one if omitted)");
    probe->add_option("--out", out, "output directory");

    // report
    auto* report = app.add_subcommand("report", "recompute summary.csv from results.csv");
    std::string r_results;
    report->add_option("--results", r_results, "results.csv from a train run")->required();
    report->add_option("--out", out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            return cmd_dataset_gen(g_objects, g_distances, g_heights, g_angles, g_size, g_seed,
                                   g_out);
        }
        if (genbank->parsed()) return cmd_genbank(b_variant, b_out);
        if (preprocess->parsed()) return cmd_preprocess(p_variant, p_input, p_out, p_debug);
        if (train->parsed()) return cmd_train(t_config, out, seed, !t_seed_opt->empty());
        if (probe->parsed()) return cmd_probe(pr_config, pr_checkpoint, out);
        if (report->parsed()) return cmd_report(r_results, out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cerr << "error: no subcommand\n";
    return 1;
}
