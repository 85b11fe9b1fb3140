#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gazekit/preprocess.hpp"

namespace gazekit {

enum class Origin { original, augmented };

// JSON-lines manifest; paths are relative to the manifest file's directory.
struct ManifestEntry {
    std::string path;
    int label = 0;
    std::string subject;
    Origin origin = Origin::original;
    std::string seed_tag;
};

struct Manifest {
    std::vector<ManifestEntry> entries;
};

Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const Manifest& m, const std::filesystem::path& path);

// Rewrites entry paths (relative to from_dir) so they stay valid for a
// manifest saved under to_dir.
Manifest rebase_manifest(const Manifest& m, const std::filesystem::path& from_dir,
                         const std::filesystem::path& to_dir);

// Deterministic augmentation. Geometric and photometric transforms run on the
// gray composite (binarizing first would freeze the histogram Otsu adapts
// to); each output is re-binarized. A horizontal flip mirrors gaze, so it
// swaps labels right<->left and leaves vague alone.
struct AugmentConfig {
    int multiplier = 159;
    bool translate = true;   // +-3 px
    bool rotate = true;      // +-8 degrees
    bool brightness = true;  // +-25
    bool contrast = true;    // x0.8..1.2
    bool hflip = true;       // probability 1/2
    uint64_t seed = 42;
};

int hflip_label(int label);
Sample hflip_sample(const Sample& s);
std::vector<Sample> augment(const Sample& s, const AugmentConfig& cfg);

struct Split {
    std::vector<size_t> train, test;
};

// Seeded shuffle split; |test| = round(N * test_fraction). With stratify the
// per-label test counts are the largest-remainder allocation of the total, so
// each class is within one sample of its exact share.
Split split_shuffle(const Manifest& m, double test_fraction, uint64_t seed, bool stratify);

struct FoldPlan {
    std::vector<Split> folds;
};

// Subjects are shuffled by seed and dealt round-robin into k folds; fold i's
// test set is every entry of its subjects.
FoldPlan grouped_kfold(const Manifest& m, int k, uint64_t seed = 42);

}  // namespace gazekit
