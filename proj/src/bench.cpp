#include "gazekit/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace gazekit {

double percentile(std::vector<double> values, double p) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const double rank = p / 100.0 * static_cast<double>(values.size());
    size_t idx = static_cast<size_t>(std::ceil(rank));
    idx = std::clamp<size_t>(idx, 1, values.size());
    return values[idx - 1];
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

StageTiming summarize(const std::vector<double>& v) {
    StageTiming t;
    t.count = v.size();
    if (v.empty()) return t;
    t.p50 = percentile(v, 50);
    t.p95 = percentile(v, 95);
    t.max = *std::max_element(v.begin(), v.end());
    return t;
}

nlohmann::ordered_json stage_json(const StageTiming& t) {
    nlohmann::ordered_json j;
    j["p50_ms"] = t.p50;
    j["p95_ms"] = t.p95;
    j["max_ms"] = t.max;
    j["count"] = t.count;
    return j;
}

}  // namespace

LatencyReport bench_pipeline(const std::vector<GrayImage>& frames, const CascadeModel& face_model,
                             const CascadeModel& eye_model, const Network& net, int repetitions,
                             const PipelineParams& params, int warmup) {
    require(!frames.empty(), Err::malformed_input, "no benchmark frames");
    require(repetitions >= 1, Err::malformed_input, "repetitions must be >= 1");
    const size_t runs = frames.size() * static_cast<size_t>(repetitions);
    require(runs > static_cast<size_t>(warmup) + 30 - 1, Err::malformed_input,
            "need at least 30 measured frame runs after warmup");

    std::vector<double> face_ms, eye_ms, prep_ms, cnn_ms, total_ms, sum_ms;

    size_t run = 0;
    for (int rep = 0; rep < repetitions; ++rep) {
        for (const GrayImage& frame : frames) {
            const bool measured = run >= static_cast<size_t>(warmup);
            ++run;

            const auto t_all = Clock::now();
            double f_ms = 0, e_ms = 0, p_ms = 0, c_ms = 0;
            bool complete = false;
            try {
                auto t0 = Clock::now();
                const auto faces = detect(frame, face_model, params.face_scan);
                f_ms = ms_since(t0);
                const Detection* face = select_best_face(faces);
                if (!face) fail(Err::face_not_found, "bench frame");
                if (measured) face_ms.push_back(f_ms);

                t0 = Clock::now();
                const EyePair eyes = locate_eyes(frame, face->box, eye_model, params.eye_scan,
                                                 params.eye_region_fraction);
                e_ms = ms_since(t0);
                if (measured) eye_ms.push_back(e_ms);

                t0 = Clock::now();
                const GrayImage composite = compose_eye_pair_gray(frame, eyes);
                const BinaryImage input = binarize_otsu(composite).first;
                p_ms = ms_since(t0);
                if (measured) prep_ms.push_back(p_ms);

                Tensor x = Tensor::zeros({1, 1, kSampleSide, kSampleSide});
                for (size_t i = 0; i < input.data.size(); ++i)
                    x.data[i] = static_cast<float>(input.data[i]);
                t0 = Clock::now();
                (void)forward(net, x);
                c_ms = ms_since(t0);
                if (measured) cnn_ms.push_back(c_ms);
                complete = true;
            } catch (const Error&) {
                // Failed stage: timings up to the failure were already kept.
            }
            if (measured && complete) {
                total_ms.push_back(ms_since(t_all));
                sum_ms.push_back(f_ms + e_ms + p_ms + c_ms);
            }
        }
    }

    LatencyReport report;
    report.frame_w = frames.front().width;
    report.frame_h = frames.front().height;
    report.threads = params.face_scan.threads;
    report.frames = frames.size();
    report.repetitions = static_cast<size_t>(repetitions);
    report.warmup = static_cast<size_t>(warmup);
    report.measured = runs - static_cast<size_t>(warmup);
    report.completed = total_ms.size();
    report.face_detect = summarize(face_ms);
    report.eye_detect = summarize(eye_ms);
    report.preprocess = summarize(prep_ms);
    report.cnn_forward = summarize(cnn_ms);
    report.end_to_end = summarize(total_ms);
    report.stage_sum_p50 = percentile(sum_ms, 50);
    return report;
}

std::string LatencyReport::to_json() const {
    nlohmann::ordered_json j;
    j["frame_size"] = {frame_w, frame_h};
    j["threads"] = threads;
    j["frames"] = frames;
    j["repetitions"] = repetitions;
    j["warmup_excluded"] = warmup;
    j["measured"] = measured;
    j["completed"] = completed;
    j["stages"]["face_detect"] = stage_json(face_detect);
    j["stages"]["eye_detect"] = stage_json(eye_detect);
    j["stages"]["preprocess"] = stage_json(preprocess);
    j["stages"]["cnn_forward"] = stage_json(cnn_forward);
    j["end_to_end"] = stage_json(end_to_end);
    j["stage_sum_p50_ms"] = stage_sum_p50;
    return j.dump(2);
}

std::string LatencyReport::table() const {
    std::ostringstream out;
    out << "stage            p50 ms    p95 ms    max ms   frames\n";
    auto row = [&](const char* name, const StageTiming& t) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "%-14s %8.2f  %8.2f  %8.2f  %7zu\n", name, t.p50, t.p95,
                      t.max, t.count);
        out << buf;
    };
    row("face_detect", face_detect);
    row("eye_detect", eye_detect);
    row("preprocess", preprocess);
    row("cnn_forward", cnn_forward);
    row("end_to_end", end_to_end);
    char buf[128];
    std::snprintf(buf, sizeof buf, "stage-sum p50 %8.2f ms over %zu completed of %zu measured\n",
                  stage_sum_p50, completed, measured);
    out << buf;
    return out.str();
}

}  // namespace gazekit
