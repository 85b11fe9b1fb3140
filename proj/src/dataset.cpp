#include "gazekit/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>

#include <json.hpp>

#include "gazekit/rng.hpp"

namespace gazekit {

namespace {

using nlohmann::ordered_json;

const char* origin_name(Origin o) { return o == Origin::original ? "original" : "augmented"; }

Origin origin_from(const std::string& s, const std::string& where) {
    if (s == "original") return Origin::original;
    if (s == "augmented") return Origin::augmented;
    fail(Err::validation, where + ": origin must be original|augmented, got '" + s + "'");
}

}  // namespace

Manifest load_manifest(const std::filesystem::path& path) {
    std::ifstream f(path);
    require(f.good(), Err::io, "cannot open " + path.string());
    Manifest m;
    std::set<std::string> seen_paths;
    std::string line;
    size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(line_no);
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            fail(Err::validation, where + ": bad JSON: " + e.what());
        }
        ManifestEntry e;
        try {
            e.path = j.at("path").get<std::string>();
            e.label = j.at("label").get<int>();
            e.subject = j.at("subject").get<std::string>();
            e.origin = origin_from(j.at("origin").get<std::string>(), where);
            e.seed_tag = j.value("seed_tag", std::string{});
        } catch (const nlohmann::json::exception& ex) {
            fail(Err::validation, where + ": " + ex.what());
        }
        require(e.label >= 0 && e.label <= 2, Err::validation,
                where + ": label must be in {0,1,2}, got " + std::to_string(e.label));
        require(!e.subject.empty(), Err::validation, where + ": subject_id must be non-empty");
        require(!e.path.empty(), Err::validation, where + ": path must be non-empty");
        require(seen_paths.insert(e.path).second, Err::validation,
                where + ": duplicate path '" + e.path + "'");
        m.entries.push_back(std::move(e));
    }
    return m;
}

void save_manifest(const Manifest& m, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::trunc);
    require(f.good(), Err::io, "cannot write " + path.string());
    for (const ManifestEntry& e : m.entries) {
        ordered_json j;
        j["path"] = e.path;
        j["label"] = e.label;
        j["subject"] = e.subject;
        j["origin"] = origin_name(e.origin);
        j["seed_tag"] = e.seed_tag;
        f << j.dump() << "\n";
    }
    require(f.good(), Err::io, "short write to " + path.string());
}

Manifest rebase_manifest(const Manifest& m, const std::filesystem::path& from_dir,
                         const std::filesystem::path& to_dir) {
    const auto from_abs = std::filesystem::weakly_canonical(from_dir);
    const auto to_abs = std::filesystem::weakly_canonical(to_dir);
    Manifest out = m;
    for (ManifestEntry& e : out.entries) {
        const auto target = from_abs / e.path;
        const auto rel = target.lexically_relative(to_abs);
        e.path = (rel.empty() ? target : rel).generic_string();
    }
    return out;
}

int hflip_label(int label) {
    if (label == gaze_right) return gaze_left;
    if (label == gaze_left) return gaze_right;
    return label;  // vague and unset are fixed points
}

Sample hflip_sample(const Sample& s) {
    return make_sample(hflip(s.composite), hflip_label(s.label), s.subject_id, s.source_frame);
}

namespace {

GrayImage rotate_about_center(const GrayImage& img, double degrees) {
    if (degrees == 0.0) return img;
    const double rad = degrees * std::numbers::pi / 180.0;
    const double c = std::cos(rad), s = std::sin(rad);
    const double cx = (img.width - 1) / 2.0, cy = (img.height - 1) / 2.0;
    GrayImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            // Inverse mapping with edge-clamped bilinear sampling.
            const double dx = x - cx, dy = y - cy;
            const double sx = c * dx + s * dy + cx;
            const double sy = -s * dx + c * dy + cy;
            const double fx = std::floor(sx), fy = std::floor(sy);
            const int x0 = std::clamp(static_cast<int>(fx), 0, img.width - 1);
            const int x1 = std::clamp(static_cast<int>(fx) + 1, 0, img.width - 1);
            const int y0 = std::clamp(static_cast<int>(fy), 0, img.height - 1);
            const int y1 = std::clamp(static_cast<int>(fy) + 1, 0, img.height - 1);
            const double ax = sx - fx, ay = sy - fy;
            const double top = img.at(x0, y0) * (1 - ax) + img.at(x1, y0) * ax;
            const double bot = img.at(x0, y1) * (1 - ax) + img.at(x1, y1) * ax;
            const double v = top * (1 - ay) + bot * ay;
            out.at(x, y) = static_cast<uint8_t>(std::clamp(static_cast<int>(std::floor(v + 0.5)), 0, 255));
        }
    }
    return out;
}

GrayImage translate_clamped(const GrayImage& img, int dx, int dy) {
    if (dx == 0 && dy == 0) return img;
    GrayImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            out.at(x, y) = img.at(std::clamp(x - dx, 0, img.width - 1),
                                  std::clamp(y - dy, 0, img.height - 1));
    return out;
}

}  // namespace

std::vector<Sample> augment(const Sample& s, const AugmentConfig& cfg) {
    require(cfg.multiplier >= 1, Err::malformed_input, "augment multiplier must be >= 1");
    require(!s.composite.empty(), Err::malformed_input, "augment needs the gray composite");

    // Per-(sample, index) streams: keyed by content so the stream does not
    // depend on where the sample came from.
    uint64_t content_key = fnv1a64({reinterpret_cast<const char*>(s.composite.data.data()),
                                    s.composite.data.size()});
    content_key = derive_seed(content_key, {static_cast<uint64_t>(s.label + 1)});

    std::vector<Sample> out;
    out.reserve(cfg.multiplier);
    for (int index = 0; index < cfg.multiplier; ++index) {
        Rng rng(derive_seed(cfg.seed, {content_key, static_cast<uint64_t>(index)}));
        // Parameters are always drawn in a fixed order so enabling one op
        // never shifts another op's stream.
        const bool do_flip = rng.below(2) == 1;
        const double degrees = rng.uniform(-8.0, 8.0);
        const int dx = rng.uniform_int(-3, 3);
        const int dy = rng.uniform_int(-3, 3);
        const double contrast = rng.uniform(0.8, 1.2);
        const int brightness = rng.uniform_int(-25, 25);

        GrayImage g = s.composite;
        int label = s.label;
        if (cfg.hflip && do_flip) {
            g = hflip(g);
            label = hflip_label(label);
        }
        if (cfg.rotate) g = rotate_about_center(g, degrees);
        if (cfg.translate) g = translate_clamped(g, dx, dy);
        if (cfg.contrast || cfg.brightness) {
            for (auto& v : g.data) {
                double val = v;
                if (cfg.contrast) val = (val - 128.0) * contrast + 128.0;
                if (cfg.brightness) val += brightness;
                v = static_cast<uint8_t>(std::clamp(static_cast<int>(std::floor(val + 0.5)), 0, 255));
            }
        }
        Sample a = make_sample(std::move(g), label, s.subject_id, s.source_frame);
        out.push_back(std::move(a));
    }
    return out;
}

Split split_shuffle(const Manifest& m, double test_fraction, uint64_t seed, bool stratify) {
    require(test_fraction > 0.0 && test_fraction < 1.0, Err::malformed_input,
            "test_fraction must lie in (0,1), got " + std::to_string(test_fraction));
    const size_t n = m.entries.size();
    const size_t total_test = static_cast<size_t>(std::llround(n * test_fraction));

    std::vector<size_t> test;
    if (!stratify) {
        std::vector<size_t> idx(n);
        for (size_t i = 0; i < n; ++i) idx[i] = i;
        Rng rng(derive_seed(seed, {fnv1a64("split")}));
        rng.shuffle(idx);
        test.assign(idx.begin(), idx.begin() + total_test);
    } else {
        std::vector<std::vector<size_t>> by_label(3);
        for (size_t i = 0; i < n; ++i) by_label[m.entries[i].label].push_back(i);
        for (int c = 0; c < 3; ++c)
            require(!by_label[c].empty(), Err::malformed_input,
                    "stratified split needs samples of every class; class " + std::to_string(c) +
                        " is empty");

        // Largest-remainder allocation of total_test across classes.
        size_t base_sum = 0;
        std::array<size_t, 3> want{};
        std::array<double, 3> frac{};
        for (int c = 0; c < 3; ++c) {
            const double exact = by_label[c].size() * test_fraction;
            want[c] = static_cast<size_t>(std::floor(exact));
            frac[c] = exact - std::floor(exact);
            base_sum += want[c];
        }
        std::array<int, 3> order{0, 1, 2};
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (frac[a] != frac[b]) return frac[a] > frac[b];
            return a < b;
        });
        for (size_t extra = 0; extra < total_test - base_sum; ++extra) want[order[extra % 3]] += 1;

        for (int c = 0; c < 3; ++c) {
            auto idx = by_label[c];
            Rng rng(derive_seed(seed, {fnv1a64("split-strat"), static_cast<uint64_t>(c)}));
            rng.shuffle(idx);
            require(want[c] <= idx.size(), Err::malformed_input,
                    "class " + std::to_string(c) + " too small for the requested test fraction");
            test.insert(test.end(), idx.begin(), idx.begin() + want[c]);
        }
    }

    std::sort(test.begin(), test.end());
    Split split;
    split.test = std::move(test);
    std::vector<char> in_test(n, 0);
    for (size_t i : split.test) in_test[i] = 1;
    for (size_t i = 0; i < n; ++i)
        if (!in_test[i]) split.train.push_back(i);
    return split;
}

FoldPlan grouped_kfold(const Manifest& m, int k, uint64_t seed) {
    require(k >= 2, Err::malformed_input, "k must be >= 2");
    std::map<std::string, std::vector<size_t>> by_subject;
    for (size_t i = 0; i < m.entries.size(); ++i) by_subject[m.entries[i].subject].push_back(i);
    require(static_cast<int>(by_subject.size()) >= k, Err::malformed_input,
            "grouped k-fold needs at least k distinct subjects: have " +
                std::to_string(by_subject.size()) + ", k=" + std::to_string(k));

    std::vector<std::string> subjects;
    for (const auto& [name, _] : by_subject) subjects.push_back(name);
    Rng rng(derive_seed(seed, {fnv1a64("kfold")}));
    rng.shuffle(subjects);

    std::vector<std::vector<std::string>> fold_subjects(k);
    for (size_t i = 0; i < subjects.size(); ++i)
        fold_subjects[i % k].push_back(subjects[i]);

    FoldPlan plan;
    plan.folds.resize(k);
    for (int f = 0; f < k; ++f) {
        std::set<std::string> test_set(fold_subjects[f].begin(), fold_subjects[f].end());
        for (size_t i = 0; i < m.entries.size(); ++i) {
            if (test_set.count(m.entries[i].subject)) plan.folds[f].test.push_back(i);
            else plan.folds[f].train.push_back(i);
        }
    }
    return plan;
}

}  // namespace gazekit
