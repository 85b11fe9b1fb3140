#include <doctest.h>

#include <string>
#include <vector>

#include "gazekit/bench.hpp"
#include "gazekit/rng.hpp"

using namespace gazekit;

namespace {

// Zero-stage cascades accept every window, so the pipeline always completes
// on textured frames; timing numbers stay tiny but the accounting is real.
CascadeModel accept_all(int bw, int bh) {
    CascadeModel m;
    m.kind = FeatureKind::haar;
    m.base_w = bw;
    m.base_h = bh;
    return m;
}

}  // namespace

TEST_CASE("percentile: nearest rank") {
    std::vector<double> v{5, 1, 4, 2, 3};
    CHECK(percentile(v, 50) == 3);
    CHECK(percentile(v, 95) == 5);
    CHECK(percentile(v, 100) == 5);
    CHECK(percentile(v, 1) == 1);
    CHECK(percentile({}, 50) == 0);
}

TEST_CASE("bench_pipeline accounting and order statistics") {
    Rng rng(3);
    std::vector<GrayImage> frames;
    for (int i = 0; i < 12; ++i) {
        GrayImage f(80, 64);
        for (auto& v : f.data) v = static_cast<uint8_t>(rng.below(256));
        frames.push_back(std::move(f));
    }
    ArchConfig arch;
    arch.c1 = 1;
    arch.c2 = 1;
    const Network net = init_params(arch, 5);

    // An accept-everything eye cascade merges the face region into a single
    // cluster, so the eye stage fails on every frame: the run exercises the
    // per-stage accounting for pipelines that stop mid-way. (The completed
    // path is covered by the acceptance latency criterion with real models.)
    const LatencyReport r =
        bench_pipeline(frames, accept_all(24, 24), accept_all(16, 8), net, /*reps=*/3, {}, 5);
    CHECK(r.measured == 12 * 3 - 5);  // inputs * repetitions - warmup
    CHECK(r.face_detect.count == r.measured);
    CHECK(r.face_detect.p50 <= r.face_detect.p95);
    CHECK(r.face_detect.p95 <= r.face_detect.max);
    CHECK(r.completed == 0);  // every frame stops at the eye stage
    CHECK(r.eye_detect.count == 0);
    CHECK(r.cnn_forward.count == 0);
    CHECK(r.end_to_end.count == 0);
    const std::string json = r.to_json();
    CHECK(json.find("\"end_to_end\"") != std::string::npos);
    CHECK(json.find("\"stage_sum_p50_ms\"") != std::string::npos);
    CHECK(r.table().find("cnn_forward") != std::string::npos);

    // Too few frames for the warmup contract.
    std::vector<GrayImage> few(frames.begin(), frames.begin() + 2);
    CHECK_THROWS_AS(bench_pipeline(few, accept_all(24, 24), accept_all(16, 8), net, 1, {}, 5),
                    Error);
}
