#pragma once

#include <stdexcept>
#include <string>

namespace gazekit {

// One error type with a category code. The CLI maps any Error to exit 1;
// argument parsing problems exit 2 before any Error is thrown.
enum class Err {
    malformed_input,
    bounds,
    degenerate_histogram,
    shape,
    bad_arch,
    face_not_found,
    eyes_not_found,
    preprocess_failed,
    stage_training_failed,
    training_diverged,
    validation,
    format,
    io,
    usage,
    internal,
};

const char* err_name(Err e);

class Error : public std::runtime_error {
public:
    Error(Err code, const std::string& msg)
        : std::runtime_error(std::string(err_name(code)) + ": " + msg), code_(code) {}

    Err code() const noexcept { return code_; }

private:
    Err code_;
};

[[noreturn]] inline void fail(Err code, const std::string& msg) { throw Error(code, msg); }

inline void require(bool cond, Err code, const std::string& msg) {
    if (!cond) fail(code, msg);
}

}  // namespace gazekit
