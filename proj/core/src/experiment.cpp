#include "gcnn/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "gcnn/serialize.hpp"

namespace gcnn {

namespace fs = std::filesystem;

double evaluate_accuracy(ModelGraph& model, const PipelineSpec& pipe,
                         std::span<const Sample> samples, int net_size) {
    if (samples.empty()) throw EmptyDataset("evaluate_accuracy: no samples");
    constexpr std::size_t kBatch = 64;
    std::size_t hits = 0, done = 0;
    while (done < samples.size()) {
        const std::size_t bn = std::min(kBatch, samples.size() - done);
        Tensor batch;
        for (std::size_t i = 0; i < bn; ++i) {
            const GrayImage img = eval_transform(*samples[done + i].image, net_size);
            Tensor t = apply_pipeline(pipe, img);
            if (i == 0) batch = Tensor({bn, t.dim(0), t.dim(1), t.dim(2)});
            std::copy(t.data.begin(), t.data.end(), batch.data.begin() + i * t.numel());
        }
        const Tensor logits = model_forward(model, batch, Mode::Eval);
        const std::size_t k = logits.dim(1);
        for (std::size_t i = 0; i < bn; ++i) {
            const double* row = &logits.data[i * k];
            std::size_t best = 0;
            for (std::size_t j = 1; j < k; ++j) {
                if (row[j] > row[best]) best = j;
            }
            if (static_cast<int>(best) == samples[done + i].label) ++hits;
        }
        done += bn;
    }
    return static_cast<double>(hits) / static_cast<double>(samples.size());
}

CellMetrics train_cell(ModelGraph& model, const PipelineSpec& pipe,
                       std::span<const Sample> train_samples, std::span<const Sample> test_samples,
                       const OptimConfig& optim_cfg, int batch_size, int net_size,
                       std::uint64_t seed) {
    if (train_samples.empty()) throw EmptyDataset("train_cell: empty training split");

    const auto params = model.parameters();
    const auto grads = model.gradients();
    OptimState state = OptimState::for_params(params);

    Rng rng(seed_mix(seed, 0x7261696eull));  // training stream: shuffle + augmentation draws
    const auto transform = [&pipe, net_size](const GrayImage& img, Rng& r) {
        return apply_pipeline(pipe, augment_train(img, r, net_size));
    };

    const auto t0 = std::chrono::steady_clock::now();
    for (int epoch = 0; epoch < optim_cfg.total_epochs; ++epoch) {
        const double lr = lr_at(epoch, optim_cfg);
        BatchIter iter(train_samples, static_cast<std::size_t>(batch_size), rng, transform);
        while (auto batch = iter.next()) {
            Tensor logits = model_forward(model, batch->input, Mode::Train);
            LossGrad lg = loss_softmax_ce(logits, batch->labels);
            model.zero_grads();
            model_backward(model, lg.grad_logits);
            sgd_nesterov_step(params, grads, state, lr, optim_cfg);
        }
    }
    const auto t1 = std::chrono::steady_clock::now();

    CellMetrics m;
    m.epoch_seconds = std::chrono::duration<double>(t1 - t0).count() /
                      std::max(1, optim_cfg.total_epochs);
    m.train_acc = evaluate_accuracy(model, pipe, train_samples, net_size);
    m.test_acc = test_samples.empty() ? 0.0
                                      : evaluate_accuracy(model, pipe, test_samples, net_size);
    return m;
}

std::uint64_t cell_seed(const ExperimentConfig& cfg, Arch arch, PipelineVariant variant,
                        double train_distance, int trial) {
    const std::uint64_t trial_seed = cfg.trial_seeds.empty()
                                         ? seed_mix(cfg.base_seed, static_cast<std::uint64_t>(trial))
                                         : cfg.trial_seeds[static_cast<std::size_t>(trial)];
    std::uint64_t h = seed_mix(trial_seed, static_cast<std::uint64_t>(arch == Arch::MiniCNN ? 0 : 1));
    h = seed_mix(h, static_cast<std::uint64_t>(variant_tag(variant)));
    h = seed_mix_real(h, train_distance);
    return h;
}

ResultTable run_experiment(const ExperimentConfig& cfg, const TurntableDataset& ds,
                           const std::string& checkpoint_dir) {
    if (!checkpoint_dir.empty()) fs::create_directories(checkpoint_dir);

    ResultTable table;
    for (Arch arch : cfg.architectures) {
        for (PipelineVariant variant : cfg.variants) {
            const PipelineSpec pipe = build_pipeline(variant);
            for (double dist : cfg.train_distances) {
                const SplitSpec split = split_all_but(ds, dist);
                const auto [train_s, test_s] = split_by_distance(ds, split);
                for (int trial = 0; trial < cfg.trials; ++trial) {
                    ResultRow row;
                    row.architecture = arch_name(arch);
                    row.variant = variant_tag(variant);
                    row.train_distance = dist;
                    row.trial = trial;
                    try {
                        const std::uint64_t seed = cell_seed(cfg, arch, variant, dist, trial);
                        ModelGraph model =
                            build_model(arch, variant_channels(variant), ds.n_objects(),
                                        seed_mix(seed, 0x696e6974ull), cfg.net_size);
                        const CellMetrics m = train_cell(model, pipe, train_s, test_s, cfg.optim,
                                                         cfg.batch_size, cfg.net_size, seed);
                        row.train_acc = m.train_acc;
                        row.test_acc = m.test_acc;
                        row.epoch_seconds = m.epoch_seconds;
                        if (!checkpoint_dir.empty()) {
                            char name[128];
                            std::snprintf(name, sizeof(name), "%s_%c_%.4g_t%d.gbnn",
                                          row.architecture.c_str(), row.variant, dist, trial);
                            save_checkpoint(model, (fs::path(checkpoint_dir) / name).string());
                        }
                    } catch (const std::exception& e) {
                        row.ok = false;
                        row.error = e.what();
                    }
                    table.rows.push_back(std::move(row));
                }
            }
        }
    }
    return table;
}

ResultTable run_experiment(const ExperimentConfig& cfg) {
    const TurntableDataset ds = generate_dataset(cfg.dataset, cfg.dataset_seed);
    return run_experiment(cfg, ds);
}

namespace {

std::string fmt_acc(double v) {
    // accuracies round-trip exactly so summary means can be recomputed
    // from results.csv without drift
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_secs(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::string fmt_dist(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

}  // namespace

void emit_report(const ResultTable& table, const std::string& out_dir) {
    if (table.rows.empty()) throw IoError("emit_report: empty result table");
    fs::create_directories(out_dir);

    std::ofstream results(fs::path(out_dir) / "results.csv", std::ios::trunc);
    if (!results) throw IoError("emit_report: cannot write results.csv");
    results << "architecture,variant,train_distance,trial,train_acc,test_acc,epoch_seconds,status\n";
    for (const ResultRow& r : table.rows) {
        results << r.architecture << ',' << r.variant << ',' << fmt_dist(r.train_distance) << ','
                << r.trial << ',';
        if (r.ok) {
            results << fmt_acc(r.train_acc) << ',' << fmt_acc(r.test_acc) << ','
                    << fmt_secs(r.epoch_seconds) << ",ok\n";
        } else {
            std::string msg = r.error;
            std::replace(msg.begin(), msg.end(), ',', ';');
            std::replace(msg.begin(), msg.end(), '\n', ' ');
            results << "NA,NA,NA,error: " << msg << '\n';
        }
    }

    // mean over trials per (arch, variant, distance), then the per-variant
    // average over distances mirroring the result tables' layout
    struct Agg {
        double train_sum = 0.0, test_sum = 0.0;
        int n = 0;
    };
    std::map<std::pair<std::string, char>, std::map<double, Agg>> groups;
    for (const ResultRow& r : table.rows) {
        if (!r.ok) continue;
        Agg& a = groups[{r.architecture, r.variant}][r.train_distance];
        a.train_sum += r.train_acc;
        a.test_sum += r.test_acc;
        ++a.n;
    }

    std::ofstream summary(fs::path(out_dir) / "summary.csv", std::ios::trunc);
    if (!summary) throw IoError("emit_report: cannot write summary.csv");
    summary << "architecture,variant,train_distance,mean_train_acc,mean_test_acc,trials\n";
    for (const auto& [key, by_dist] : groups) {
        double row_sum = 0.0;
        int row_n = 0;
        for (const auto& [dist, agg] : by_dist) {
            summary << key.first << ',' << key.second << ',' << fmt_dist(dist) << ','
                    << fmt_acc(agg.train_sum / agg.n) << ',' << fmt_acc(agg.test_sum / agg.n) << ','
                    << agg.n << '\n';
            row_sum += agg.test_sum / agg.n;
            ++row_n;
        }
        summary << key.first << ',' << key.second << ",average,," << fmt_acc(row_sum / row_n)
                << ',' << row_n << '\n';
    }
}

ResultTable read_results_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("read_results_csv: cannot open " + path);
    ResultTable table;
    std::string line;
    std::getline(f, line);  // header
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string arch, variant, dist, trial, train_acc, test_acc, epoch_s, status;
        std::getline(ss, arch, ',');
        std::getline(ss, variant, ',');
        std::getline(ss, dist, ',');
        std::getline(ss, trial, ',');
        std::getline(ss, train_acc, ',');
        std::getline(ss, test_acc, ',');
        std::getline(ss, epoch_s, ',');
        std::getline(ss, status);

        ResultRow r;
        r.architecture = arch;
        r.variant = variant.empty() ? 'a' : variant[0];
        r.train_distance = std::stod(dist);
        r.trial = std::stoi(trial);
        r.ok = status.rfind("ok", 0) == 0;
        if (r.ok) {
            r.train_acc = std::stod(train_acc);
            r.test_acc = std::stod(test_acc);
            r.epoch_seconds = std::stod(epoch_s);
        } else {
            r.error = status;
        }
        table.rows.push_back(std::move(r));
    }
    return table;
}

}  // namespace gcnn
