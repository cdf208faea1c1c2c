#pragma once

#include <span>
#include <string>
#include <vector>

#include "gcnn/config.hpp"
#include "gcnn/dataset.hpp"
#include "gcnn/nn.hpp"
#include "gcnn/optim.hpp"
#include "gcnn/pipeline.hpp"

namespace gcnn {

struct ResultRow {
    std::string architecture;
    char variant = 'a';
    double train_distance = 0.0;
    int trial = 0;
    double train_acc = 0.0;
    double test_acc = 0.0;
    double epoch_seconds = 0.0;  // timing only; excluded from determinism guarantees
    bool ok = true;
    std::string error;
};

struct ResultTable {
    std::vector<ResultRow> rows;
};

struct CellMetrics {
    double train_acc = 0.0;
    double test_acc = 0.0;
    double epoch_seconds = 0.0;
};

// Trains `model` in place: total_epochs of augment_train batches with the
// warmup + cosine schedule, then clean-eval accuracy on both splits.
CellMetrics train_cell(ModelGraph& model, const PipelineSpec& pipe,
                       std::span<const Sample> train_samples, std::span<const Sample> test_samples,
                       const OptimConfig& optim_cfg, int batch_size, int net_size,
                       std::uint64_t seed);

// eval_transform + pipeline + eval-mode forward, argmax accuracy.
double evaluate_accuracy(ModelGraph& model, const PipelineSpec& pipe,
                         std::span<const Sample> samples, int net_size);

// Per-cell model seed; function of the cell coordinates so cells are
// independent of matrix iteration order.
std::uint64_t cell_seed(const ExperimentConfig& cfg, Arch arch, PipelineVariant variant,
                        double train_distance, int trial);

// Runs the full (architecture x variant x distance x trial) matrix on a
// shared dataset. A failed cell is recorded with its error and the run
// continues. When checkpoint_dir is non-empty every trained model is saved
// there as <arch>_<variant>_<distance>_<trial>.gbnn.
ResultTable run_experiment(const ExperimentConfig& cfg, const TurntableDataset& ds,
                           const std::string& checkpoint_dir = "");
ResultTable run_experiment(const ExperimentConfig& cfg);

// results.csv (raw rows) and summary.csv (means over trials per
// architecture x variant x distance, plus a per-variant average over
// distances).
void emit_report(const ResultTable& table, const std::string& out_dir);

ResultTable read_results_csv(const std::string& path);

}  // namespace gcnn
