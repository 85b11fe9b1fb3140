#include "gazekit/error.hpp"

namespace gazekit {

const char* err_name(Err e) {
    switch (e) {
        case Err::malformed_input: return "malformed-input";
        case Err::bounds: return "bounds";
        case Err::degenerate_histogram: return "degenerate-histogram";
        case Err::shape: return "shape";
        case Err::bad_arch: return "bad-arch";
        case Err::face_not_found: return "face-not-found";
        case Err::eyes_not_found: return "eyes-not-found";
        case Err::preprocess_failed: return "preprocess-failed";
        case Err::stage_training_failed: return "stage-training-failed";
        case Err::training_diverged: return "training-diverged";
        case Err::validation: return "validation";
        case Err::format: return "format";
        case Err::io: return "io";
        case Err::usage: return "usage";
        case Err::internal: return "internal";
    }
    return "unknown";
}

}  // namespace gazekit
