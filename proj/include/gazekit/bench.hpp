#pragma once

#include <string>
#include <vector>

#include "gazekit/net.hpp"
#include "gazekit/preprocess.hpp"

namespace gazekit {

struct StageTiming {
    double p50 = 0, p95 = 0, max = 0;
    size_t count = 0;
};

struct LatencyReport {
    int frame_w = 0, frame_h = 0;
    int threads = 1;
    size_t frames = 0, repetitions = 0, warmup = 0;
    size_t measured = 0;   // frame runs measured (inputs * reps - warmup)
    size_t completed = 0;  // runs that made it through the whole pipeline
    StageTiming face_detect, eye_detect, preprocess, cnn_forward, end_to_end;
    double stage_sum_p50 = 0;  // p50 of per-frame stage-time sums

    std::string to_json() const;
    std::string table() const;
};

// Wall-clock (monotonic) timing of the four pipeline stages plus end to end.
// The first `warmup` runs are excluded. Frames that fail a stage still
// contribute timings for the stages that ran.
LatencyReport bench_pipeline(const std::vector<GrayImage>& frames, const CascadeModel& face_model,
                             const CascadeModel& eye_model, const Network& net, int repetitions,
                             const PipelineParams& params = {}, int warmup = 5);

double percentile(std::vector<double> values, double p);  // nearest-rank, p in [0,100]

}  // namespace gazekit
