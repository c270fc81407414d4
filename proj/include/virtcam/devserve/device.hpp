#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "virtcam/camscript/interpreter.hpp"
#include "virtcam/devserve/protocol.hpp"
#include "virtcam/membuf.hpp"
#include "virtcam/sensor.hpp"

namespace virtcam::devserve {

/// Immutable copy of a completed snapshot, shared with frame-buffer readers.
struct PublishedFrame {
    int width = 0;
    int height = 0;
    PixelFormat format = PixelFormat::Grayscale8;
    std::vector<std::uint8_t> pixels;  // same layout as Image::bytes()
    std::uint64_t sequence = 0;
};

/// Receives encoded response and event frames for one connection. May be
/// called from the executor thread or the script thread.
using Sink = std::function<void(std::vector<std::uint8_t>)>;

struct DeviceOptions {
    std::size_t arena_bytes = kDefaultArenaBytes;
    sensor::FrameSource source = sensor::PatternSource{"gradient", 0};
    camscript::Limits limits;
    int jpeg_quality = 90;
};

/// The virtual camera: sensor, arena and script runtime behind the wire
/// protocol. Requests are processed in order on a single executor thread;
/// scripts run on their own thread, one at a time.
class Device {
public:
    explicit Device(DeviceOptions options = {});
    ~Device();

    Device(const Device&) = delete;
    Device& operator=(const Device&) = delete;

    /// Queues a request. Its terminal response and any script events go to `sink`.
    void submit(Frame request, Sink sink);

    /// Stops any running script and the executor. Idempotent.
    void shutdown();

    /// Request names accepted by ATTR_GET/ATTR_SET.
    static const std::vector<std::string>& attribute_names();

    std::shared_ptr<const PublishedFrame> published() const;
    bool script_running() const noexcept { return running_flag_.load(); }
    /// Blocks until no script is running or the timeout passes; true when idle.
    bool wait_idle(std::chrono::milliseconds timeout) const;

    const Arena& arena() const noexcept { return arena_; }

private:
    void post(std::function<void()> task);
    void executor_loop();
    void handle(const Frame& request, const Sink& sink);
    void handle_exec(const Sink& sink);
    void handle_attr_get(const Frame& request, const Sink& sink);
    void handle_attr_set(const Frame& request, const Sink& sink);
    void handle_fb_request(const Sink& sink);
    void publish(const Image& img);
    void finish_script(const camscript::Report& report, const Sink& sink);

    DeviceOptions options_;
    Arena arena_;
    sensor::Sensor sensor_;
    std::mutex sensor_mutex_;

    // Executor state.
    std::mutex queue_mutex_;
    std::condition_variable queue_cv_;
    std::deque<std::function<void()>> queue_;
    bool stopping_ = false;
    std::thread executor_;

    // Script lifecycle, owned by the executor.
    std::optional<std::string> script_;
    bool running_ = false;
    std::thread script_thread_;
    std::atomic<bool> stop_flag_{false};
    std::atomic<bool> running_flag_{false};
    mutable std::mutex idle_mutex_;
    mutable std::condition_variable idle_cv_;
    int jpeg_quality_;

    // Published frame buffer.
    mutable std::mutex publish_mutex_;
    std::shared_ptr<const PublishedFrame> published_;
    std::uint64_t publish_sequence_ = 0;

    // Last JPEG served, keyed by frame sequence and quality.
    std::uint64_t jpeg_sequence_ = 0;
    int jpeg_cached_quality_ = 0;
    std::vector<std::uint8_t> jpeg_cache_;
};

} // namespace virtcam::devserve
