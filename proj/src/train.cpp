#include "gazekit/train.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gazekit/pgm.hpp"
#include "gazekit/rng.hpp"

namespace gazekit {

void Hyper::validate() const {
    require(lr > 0, Err::malformed_input, "learning rate must be > 0");
    require(momentum >= 0 && momentum < 1, Err::malformed_input, "momentum must lie in [0,1)");
    require(batch >= 1, Err::malformed_input, "batch size must be >= 1");
    require(epochs >= 0, Err::malformed_input, "epoch count must be >= 0");
}

namespace {

constexpr size_t kPixels = static_cast<size_t>(kSampleSide) * kSampleSide;

void fill_input_row(float* dst, const BinaryImage& img) {
    require(img.width == kSampleSide && img.height == kSampleSide, Err::shape,
            "sample input must be 72x72");
    for (size_t i = 0; i < kPixels; ++i) dst[i] = static_cast<float>(img.data[i]);
}

}  // namespace

DataSet load_dataset(const Manifest& m, const std::filesystem::path& base_dir) {
    require(!m.entries.empty(), Err::malformed_input, "empty manifest");
    DataSet ds;
    ds.x = Tensor::zeros({static_cast<int>(m.entries.size()), 1, kSampleSide, kSampleSide});
    ds.labels.reserve(m.entries.size());
    ds.subjects.reserve(m.entries.size());
    for (size_t i = 0; i < m.entries.size(); ++i) {
        const ManifestEntry& e = m.entries[i];
        const GrayImage composite = read_pgm(base_dir / e.path);
        require(composite.width == kSampleSide && composite.height == kSampleSide, Err::validation,
                e.path + ": manifest image must be 72x72");
        const BinaryImage input = binarize_otsu(composite).first;
        fill_input_row(ds.x.ptr() + i * kPixels, input);
        ds.labels.push_back(e.label);
        ds.subjects.push_back(e.subject);
    }
    return ds;
}

DataSet dataset_from_samples(std::span<const Sample> samples) {
    require(!samples.empty(), Err::malformed_input, "no samples");
    DataSet ds;
    ds.x = Tensor::zeros({static_cast<int>(samples.size()), 1, kSampleSide, kSampleSide});
    for (size_t i = 0; i < samples.size(); ++i) {
        fill_input_row(ds.x.ptr() + i * kPixels, samples[i].input);
        require(samples[i].label >= 0, Err::malformed_input, "training sample without a label");
        ds.labels.push_back(samples[i].label);
        ds.subjects.push_back(samples[i].subject_id);
    }
    return ds;
}

DataSet subset(const DataSet& ds, std::span<const size_t> indices) {
    require(!indices.empty(), Err::malformed_input, "empty subset");
    DataSet out;
    out.x = Tensor::zeros({static_cast<int>(indices.size()), 1, kSampleSide, kSampleSide});
    out.labels.reserve(indices.size());
    out.subjects.reserve(indices.size());
    for (size_t j = 0; j < indices.size(); ++j) {
        const size_t i = indices[j];
        require(i < ds.size(), Err::bounds, "subset index out of range");
        std::copy(ds.x.ptr() + i * kPixels, ds.x.ptr() + (i + 1) * kPixels, out.x.ptr() + j * kPixels);
        out.labels.push_back(ds.labels[i]);
        out.subjects.push_back(ds.subjects[i]);
    }
    return out;
}

void sgd_step(Network& net, const Gradients<float>& grads, Velocity& velocity, double lr,
              double momentum) {
    auto ps = net.params();
    auto gs = grads.params();
    auto vs = velocity.params();
    for (size_t t = 0; t < ps.size(); ++t) {
        require(ps[t]->shape == gs[t]->shape && ps[t]->shape == vs[t]->shape, Err::shape,
                std::string("sgd_step shape mismatch on ") + kParamNames[t] + ": param " +
                    ps[t]->shape_str() + " vs grad " + gs[t]->shape_str());
        float* p = ps[t]->ptr();
        const float* g = gs[t]->ptr();
        float* v = vs[t]->ptr();
        const float m = static_cast<float>(momentum);
        const float step = static_cast<float>(lr);
        for (size_t i = 0, n = ps[t]->numel(); i < n; ++i) {
            v[i] = m * v[i] - step * g[i];
            p[i] += v[i];
        }
    }
}

namespace {

Tensor gather_batch(const DataSet& ds, std::span<const size_t> idx) {
    Tensor x = Tensor::zeros({static_cast<int>(idx.size()), 1, kSampleSide, kSampleSide});
    for (size_t j = 0; j < idx.size(); ++j)
        std::copy(ds.x.ptr() + idx[j] * kPixels, ds.x.ptr() + (idx[j] + 1) * kPixels,
                  x.ptr() + j * kPixels);
    return x;
}

}  // namespace

History train(Network& net, const DataSet& train_set, const Hyper& h, const DataSet* val_set) {
    h.validate();
    require(train_set.size() > 0, Err::malformed_input, "training set is empty");

    Velocity velocity = Velocity::zeros_like(net);
    History history;
    std::vector<size_t> order(train_set.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < h.epochs; ++epoch) {
        const double lr = epoch >= h.decay_epoch() ? h.lr * h.lr_decay : h.lr;
        Rng rng(derive_seed(h.seed, {fnv1a64("epoch"), static_cast<uint64_t>(epoch)}));
        rng.shuffle(order);

        double loss_sum = 0;
        size_t seen = 0;
        for (size_t start = 0; start < order.size(); start += h.batch) {
            const size_t count = std::min<size_t>(h.batch, order.size() - start);
            const std::span<const size_t> idx(order.data() + start, count);
            const Tensor x = gather_batch(train_set, idx);
            std::vector<int> labels(count);
            for (size_t j = 0; j < count; ++j) labels[j] = train_set.labels[idx[j]];

            ForwardTrace<float> trace;
            forward(net, x, &trace);
            Gradients<float> grads = Gradients<float>::zeros_like(net);
            const float loss = backward(net, trace, labels, grads);
            if (!std::isfinite(loss))
                fail(Err::training_diverged,
                     "non-finite loss at epoch " + std::to_string(epoch) + ", batch offset " +
                         std::to_string(start));
            sgd_step(net, grads, velocity, lr, h.momentum);
            loss_sum += static_cast<double>(loss) * count;
            seen += count;
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.loss = loss_sum / static_cast<double>(seen);
        if (val_set) stats.val_accuracy = evaluate(net, *val_set).accuracy;
        history.push_back(stats);
    }
    return history;
}

Metrics evaluate(const Network& net, const DataSet& ds) {
    require(ds.size() > 0, Err::malformed_input, "evaluation set is empty");
    Metrics m;
    m.n = static_cast<int64_t>(ds.size());
    constexpr size_t kChunk = 256;
    std::vector<size_t> idx(kChunk);
    for (size_t start = 0; start < ds.size(); start += kChunk) {
        const size_t count = std::min(kChunk, ds.size() - start);
        idx.resize(count);
        for (size_t j = 0; j < count; ++j) idx[j] = start + j;
        const Tensor x = gather_batch(ds, idx);
        const std::vector<int> pred = predict(net, x);
        for (size_t j = 0; j < count; ++j) {
            const int truth = ds.labels[start + j];
            require(truth >= 0 && truth < 3, Err::malformed_input, "label out of range in evaluation");
            m.confusion[truth][pred[j]] += 1;
        }
    }
    int64_t correct = 0;
    for (int c = 0; c < 3; ++c) correct += m.confusion[c][c];
    m.accuracy = static_cast<double>(correct) / static_cast<double>(m.n);
    return m;
}

CvReport cross_validate(const DataSet& all, const Manifest& m, int k, const ArchConfig& arch,
                        const Hyper& h) {
    require(all.size() == m.entries.size(), Err::malformed_input,
            "dataset/manifest size mismatch in cross_validate");
    const FoldPlan plan = grouped_kfold(m, k, h.seed);

    CvReport report;
    for (int f = 0; f < k; ++f) {
        const Split& split = plan.folds[f];

        // No subject leakage, re-asserted per fold at the experiment level.
        std::set<std::string> train_subjects, test_subjects;
        for (size_t i : split.train) train_subjects.insert(m.entries[i].subject);
        for (size_t i : split.test) test_subjects.insert(m.entries[i].subject);
        for (const auto& s : test_subjects)
            require(!train_subjects.count(s), Err::internal,
                    "subject leakage in fold " + std::to_string(f) + ": " + s);

        Hyper fold_h = h;
        fold_h.seed = h.seed ^ static_cast<uint64_t>(f);
        Network net = init_params(arch, fold_h.seed);
        const DataSet train_ds = subset(all, split.train);
        const DataSet test_ds = subset(all, split.test);
        train(net, train_ds, fold_h);

        FoldResult fr;
        fr.metrics = evaluate(net, test_ds);
        fr.test_subjects.assign(test_subjects.begin(), test_subjects.end());
        report.folds.push_back(std::move(fr));
    }

    double mean = 0;
    for (const auto& fr : report.folds) mean += fr.metrics.accuracy;
    mean /= static_cast<double>(report.folds.size());
    double var = 0;
    for (const auto& fr : report.folds) {
        const double d = fr.metrics.accuracy - mean;
        var += d * d;
    }
    report.mean_accuracy = mean;
    report.std_accuracy = std::sqrt(var / static_cast<double>(report.folds.size()));
    return report;
}

CvReport cross_validate(const Manifest& m, const std::filesystem::path& base_dir, int k,
                        const ArchConfig& arch, const Hyper& h) {
    return cross_validate(load_dataset(m, base_dir), m, k, arch, h);
}

std::string metrics_to_json(const Metrics& m) {
    nlohmann::ordered_json j;
    j["accuracy"] = m.accuracy;
    j["n"] = m.n;
    j["confusion"] = nlohmann::ordered_json::array();
    for (int r = 0; r < 3; ++r)
        j["confusion"].push_back({m.confusion[r][0], m.confusion[r][1], m.confusion[r][2]});
    return j.dump(2);
}

std::string confusion_csv(const Metrics& m) {
    // Rows are true labels in order right,left,vague; columns predicted.
    std::ostringstream out;
    for (int r = 0; r < 3; ++r)
        out << m.confusion[r][0] << "," << m.confusion[r][1] << "," << m.confusion[r][2] << "\n";
    return out.str();
}

std::string history_csv(const History& h) {
    std::ostringstream out;
    out << "epoch,loss,val_accuracy\n";
    for (const EpochStats& e : h) {
        out << e.epoch << "," << e.loss << ",";
        if (e.val_accuracy) out << *e.val_accuracy;
        out << "\n";
    }
    return out.str();
}

}  // namespace gazekit
