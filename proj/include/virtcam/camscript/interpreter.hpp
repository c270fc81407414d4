#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "virtcam/camscript/ast.hpp"
#include "virtcam/membuf.hpp"
#include "virtcam/sensor.hpp"

namespace virtcam::camscript {

enum class Status : std::uint8_t { Ok = 0, Error = 1, Stopped = 2, StepLimit = 3 };

std::string_view to_string(Status s) noexcept;

struct Limits {
    std::uint64_t max_steps = 50'000'000;
};

/// What a script can reach: the arena for image data, the sensor, and sinks
/// for printed text and published frames.
struct Environment {
    Arena* arena = nullptr;
    sensor::Sensor* sensor = nullptr;
    /// Held around every sensor access when the sensor is shared with other threads.
    std::mutex* sensor_mutex = nullptr;
    std::function<void(std::string_view)> on_print;
    /// Called after every completed snapshot with the frame-buffer image.
    std::function<void(const Image&)> on_publish;
    /// Checked between statements.
    const std::atomic<bool>* stop = nullptr;
    /// Stop cleanly once this many snapshots have been taken.
    std::optional<std::uint64_t> max_frames;
};

struct Report {
    Status status = Status::Ok;
    std::uint64_t steps = 0;
    std::string output;
    std::string error;  // "line N: Kind: message" when status is Error or StepLimit
    std::string error_kind;
    int error_line = 0;
    std::uint64_t frames = 0;
};

Report execute(const Program& program, Environment& env, const Limits& limits = {});

/// Parses and executes; lexer and parser errors are reported with status Error.
Report run_source(std::string_view source, Environment& env, const Limits& limits = {});

} // namespace virtcam::camscript
