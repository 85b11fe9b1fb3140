#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gazekit/dataset.hpp"
#include "gazekit/net.hpp"

namespace gazekit {

struct Hyper {
    double lr = 0.01;
    double momentum = 0.9;
    int batch = 64;
    int epochs = 15;
    double lr_decay = 0.1;  // applied from epoch floor(2/3 * epochs) onward
    uint64_t seed = 42;

    void validate() const;
    int decay_epoch() const { return (2 * epochs) / 3; }
};

struct Metrics {
    double accuracy = 0;
    std::array<std::array<int64_t, 3>, 3> confusion{};  // rows = true, cols = predicted
    int64_t n = 0;
};

struct EpochStats {
    int epoch = 0;
    double loss = 0;
    std::optional<double> val_accuracy;
};

using History = std::vector<EpochStats>;

// In-memory training set: binarized composites as (N,1,72,72) floats in {0,1}.
struct DataSet {
    Tensor x;
    std::vector<int> labels;
    std::vector<std::string> subjects;

    size_t size() const { return labels.size(); }
};

DataSet load_dataset(const Manifest& m, const std::filesystem::path& base_dir);
DataSet dataset_from_samples(std::span<const Sample> samples);
DataSet subset(const DataSet& ds, std::span<const size_t> indices);

using Velocity = Gradients<float>;

// v <- momentum*v - lr*g; p <- p + v (elementwise, per parameter tensor).
void sgd_step(Network& net, const Gradients<float>& grads, Velocity& velocity, double lr,
              double momentum);

// Per epoch: seeded shuffle, minibatch forward/backward, SGD with momentum.
// Deterministic for fixed (data, hyper); aborts on non-finite loss.
History train(Network& net, const DataSet& train_set, const Hyper& h,
              const DataSet* val_set = nullptr);

Metrics evaluate(const Network& net, const DataSet& ds);

struct FoldResult {
    Metrics metrics;
    std::vector<std::string> test_subjects;
};

struct CvReport {
    std::vector<FoldResult> folds;
    double mean_accuracy = 0;
    double std_accuracy = 0;
};

// Subject-grouped k-fold cross-validation: per fold, a fresh net seeded with
// seed^fold is trained on the fold's train subjects and evaluated on its
// held-out subjects. Subject disjointness is re-asserted here.
CvReport cross_validate(const Manifest& m, const std::filesystem::path& base_dir, int k,
                        const ArchConfig& arch, const Hyper& h);
CvReport cross_validate(const DataSet& all, const Manifest& m, int k, const ArchConfig& arch,
                        const Hyper& h);

std::string metrics_to_json(const Metrics& m);
std::string confusion_csv(const Metrics& m);
std::string history_csv(const History& h);

}  // namespace gazekit
