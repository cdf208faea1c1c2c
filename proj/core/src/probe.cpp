#include "gcnn/probe.hpp"

#include <cstdio>
#include <fstream>

namespace gcnn {

namespace {

constexpr std::size_t kEvalBatch = 64;

Tensor gap_rows(const Tensor& act) {
    // N x C x H x W -> N x C; N x C passes through
    if (act.rank() == 2) return act;
    if (act.rank() != 4) throw ShapeMismatch("probe: unexpected tap activation rank");
    const std::size_t n = act.dim(0), c = act.dim(1), plane = act.dim(2) * act.dim(3);
    Tensor out({n, c});
    for (std::size_t ni = 0; ni < n; ++ni) {
        for (std::size_t ci = 0; ci < c; ++ci) {
            const double* src = &act.data[(ni * c + ci) * plane];
            double acc = 0.0;
            for (std::size_t i = 0; i < plane; ++i) acc += src[i];
            out.at2(ni, ci) = acc / static_cast<double>(plane);
        }
    }
    return out;
}

// One eval pass collecting GAP features at every tap.
std::vector<Tensor> collect_tap_features(ModelGraph& model, const PipelineSpec& pipe,
                                         std::span<const Sample> samples, int net_size) {
    if (model.block_taps.empty()) {
        throw BadBlockIndex("probe: model has no block taps");
    }
    if (samples.empty()) throw EmptyDataset("probe: no samples");

    const std::size_t n_taps = model.block_taps.size();
    std::vector<Tensor> features(n_taps);

    std::size_t done = 0;
    while (done < samples.size()) {
        const std::size_t bn = std::min(kEvalBatch, samples.size() - done);
        Tensor batch;
        for (std::size_t i = 0; i < bn; ++i) {
            const GrayImage img = eval_transform(*samples[done + i].image, net_size);
            Tensor t = apply_pipeline(pipe, img);
            if (i == 0) batch = Tensor({bn, t.dim(0), t.dim(1), t.dim(2)});
            std::copy(t.data.begin(), t.data.end(), batch.data.begin() + i * t.numel());
        }
        std::vector<Tensor> taps;
        model_forward(model, batch, Mode::Eval, &taps);

        for (std::size_t k = 0; k < n_taps; ++k) {
            Tensor g = gap_rows(taps[k]);
            if (features[k].numel() == 0) {
                features[k] = Tensor({samples.size(), g.dim(1)});
            }
            std::copy(g.data.begin(), g.data.end(),
                      features[k].data.begin() + done * g.dim(1));
        }
        done += bn;
    }
    return features;
}

}  // namespace

Tensor extract_features(ModelGraph& model, const PipelineSpec& pipe,
                        std::span<const Sample> samples, int net_size, int block_index) {
    if (block_index < 1 || static_cast<std::size_t>(block_index) > model.block_taps.size()) {
        throw BadBlockIndex("extract_features: block index " + std::to_string(block_index) +
                            " outside 1.." + std::to_string(model.block_taps.size()));
    }
    auto features = collect_tap_features(model, pipe, samples, net_size);
    return std::move(features[static_cast<std::size_t>(block_index - 1)]);
}

ProbeResult probe_curve(ModelGraph& model, const PipelineSpec& pipe,
                        std::span<const Sample> train_samples,
                        std::span<const Sample> test_samples, int net_size, const SvmConfig& cfg) {
    const auto train_feats = collect_tap_features(model, pipe, train_samples, net_size);
    const auto test_feats = collect_tap_features(model, pipe, test_samples, net_size);

    std::vector<int> y_train, y_test;
    for (const Sample& s : train_samples) y_train.push_back(s.label);
    for (const Sample& s : test_samples) y_test.push_back(s.label);

    ProbeResult result;
    for (std::size_t k = 0; k < train_feats.size(); ++k) {
        const SvmModel svm = svm_fit(train_feats[k], y_train, cfg);
        ProbeRow row;
        row.block_index = static_cast<int>(k + 1);
        row.feature_dim = static_cast<int>(train_feats[k].dim(1));
        row.train_accuracy = accuracy(svm_predict(svm, train_feats[k]), y_train);
        row.test_accuracy = accuracy(svm_predict(svm, test_feats[k]), y_test);
        result.rows.push_back(row);
    }
    return result;
}

void write_probe_csv(const ProbeResult& result, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw EmptyDataset("write_probe_csv: cannot open " + path);
    f << "block_index,feature_dim,train_acc,test_acc\n";
    char buf[96];
    for (const ProbeRow& r : result.rows) {
        std::snprintf(buf, sizeof(buf), "%d,%d,%.6f,%.6f\n", r.block_index, r.feature_dim,
                      r.train_accuracy, r.test_accuracy);
        f << buf;
    }
}

}  // namespace gcnn
