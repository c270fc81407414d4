#include "virtcam/devserve/device.hpp"

#include <algorithm>
#include <charconv>

#include "virtcam/imgio.hpp"

namespace virtcam::devserve {

namespace {

void send_error(const Sink& sink, std::uint8_t code, std::string_view message) {
    sink(encode_frame(frame_type::Error, error_payload(code, message)));
}

void send_ack(const Sink& sink) { sink(encode_frame(frame_type::Ack)); }

} // namespace

Device::Device(DeviceOptions options)
    : options_(std::move(options)),
      arena_(options_.arena_bytes),
      sensor_(options_.source),
      jpeg_quality_(options_.jpeg_quality) {
    executor_ = std::thread([this] { executor_loop(); });
}

Device::~Device() { shutdown(); }

void Device::shutdown() {
    stop_flag_ = true;
    {
        std::lock_guard lock(queue_mutex_);
        if (stopping_ && !executor_.joinable()) return;
        stopping_ = true;
    }
    queue_cv_.notify_all();
    if (executor_.joinable()) executor_.join();
    if (script_thread_.joinable()) script_thread_.join();
    running_ = false;
    running_flag_ = false;
    idle_cv_.notify_all();
}

const std::vector<std::string>& Device::attribute_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n = sensor::Sensor::attribute_names();
        const auto at = std::find(n.begin(), n.end(), "source");
        n.insert(at, "jpeg.quality");
        return n;
    }();
    return names;
}

void Device::post(std::function<void()> task) {
    {
        std::lock_guard lock(queue_mutex_);
        if (stopping_) return;
        queue_.push_back(std::move(task));
    }
    queue_cv_.notify_one();
}

void Device::submit(Frame request, Sink sink) {
    post([this, req = std::move(request), sink = std::move(sink)] { handle(req, sink); });
}

void Device::executor_loop() {
    for (;;) {
        std::function<void()> task;
        {
            std::unique_lock lock(queue_mutex_);
            queue_cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
            if (stopping_) return;
            task = std::move(queue_.front());
            queue_.pop_front();
        }
        task();
    }
}

std::shared_ptr<const PublishedFrame> Device::published() const {
    std::lock_guard lock(publish_mutex_);
    return published_;
}

bool Device::wait_idle(std::chrono::milliseconds timeout) const {
    std::unique_lock lock(idle_mutex_);
    return idle_cv_.wait_for(lock, timeout, [this] { return !running_flag_.load(); });
}

void Device::handle(const Frame& req, const Sink& sink) {
    switch (req.type) {
    case frame_type::ScriptUpload:
        script_ = std::string(req.text());
        send_ack(sink);
        return;
    case frame_type::ScriptExec: handle_exec(sink); return;
    case frame_type::ScriptStop:
        if (running_) stop_flag_ = true;
        send_ack(sink);
        return;
    case frame_type::FbRequest: handle_fb_request(sink); return;
    case frame_type::AttrGet: handle_attr_get(req, sink); return;
    case frame_type::AttrSet: handle_attr_set(req, sink); return;
    default: {
        char buf[48];
        std::snprintf(buf, sizeof buf, "unknown request type 0x%02X", req.type);
        send_error(sink, error_code::BadRequest, buf);
    }
    }
}

void Device::handle_exec(const Sink& sink) {
    if (running_) return send_error(sink, error_code::AlreadyRunning, "script already running");
    if (!script_) return send_error(sink, error_code::BadRequest, "no script uploaded");
    auto program = std::make_shared<camscript::Program>();
    try {
        *program = camscript::parse_source(*script_);
    } catch (const camscript::ScriptError& e) {
        return send_error(sink, error_code::ScriptError, e.what());
    }
    send_ack(sink);
    running_ = true;
    running_flag_ = true;
    stop_flag_ = false;
    script_thread_ = std::thread([this, program, sink] {
        camscript::Environment env;
        env.arena = &arena_;
        env.sensor = &sensor_;
        env.sensor_mutex = &sensor_mutex_;
        env.stop = &stop_flag_;
        env.on_print = [&sink](std::string_view text) { sink(encode_frame(frame_type::Print, text)); };
        env.on_publish = [this](const Image& img) { publish(img); };
        const camscript::Report report = camscript::execute(*program, env, options_.limits);
        if (report.status == camscript::Status::Error || report.status == camscript::Status::StepLimit) {
            sink(encode_frame(frame_type::Print, report.error + "\n"));
        }
        post([this, report, sink] { finish_script(report, sink); });
    });
}

void Device::finish_script(const camscript::Report& report, const Sink& sink) {
    if (script_thread_.joinable()) script_thread_.join();
    running_ = false;
    {
        std::lock_guard lock(idle_mutex_);
        running_flag_ = false;
    }
    idle_cv_.notify_all();
    sink(encode_frame(frame_type::ScriptDone, script_done_payload(static_cast<std::uint8_t>(report.status), report.steps)));
}

void Device::publish(const Image& img) {
    auto frame = std::make_shared<PublishedFrame>();
    frame->width = img.width();
    frame->height = img.height();
    frame->format = img.format();
    frame->pixels.assign(img.bytes().begin(), img.bytes().end());
    std::lock_guard lock(publish_mutex_);
    frame->sequence = ++publish_sequence_;
    published_ = std::move(frame);
}

void Device::handle_fb_request(const Sink& sink) {
    const auto frame = published();
    if (!frame) return send_error(sink, error_code::NoFrame, "no frame");
    if (frame->sequence != jpeg_sequence_ || jpeg_quality_ != jpeg_cached_quality_) {
        Arena scratch(Arena::align_up(frame->pixels.size()));
        Image img(scratch, frame->width, frame->height, frame->format);
        std::copy(frame->pixels.begin(), frame->pixels.end(), img.bytes().begin());
        jpeg_cache_ = imgio::encode_jpeg(img, {jpeg_quality_});
        jpeg_sequence_ = frame->sequence;
        jpeg_cached_quality_ = jpeg_quality_;
    }
    sink(encode_frame(frame_type::FbFrame,
                      fb_frame_payload(frame->width, frame->height, static_cast<std::uint8_t>(frame->format), jpeg_cache_)));
}

void Device::handle_attr_get(const Frame& req, const Sink& sink) {
    const std::string name(req.text());
    if (name == "jpeg.quality") return sink(encode_frame(frame_type::Ack, std::to_string(jpeg_quality_)));
    if (!sensor::Sensor::has_attribute(name)) return send_error(sink, error_code::UnknownAttribute, "unknown attribute '" + name + "'");
    std::string value;
    {
        std::lock_guard lock(sensor_mutex_);
        value = sensor_.get(name);
    }
    sink(encode_frame(frame_type::Ack, value));
}

void Device::handle_attr_set(const Frame& req, const Sink& sink) {
    const auto kv = parse_attr_set(req.payload);
    if (!kv) return send_error(sink, error_code::BadRequest, "ATTR_SET payload must be name, NUL, value");
    if (kv->name == "jpeg.quality") {
        int q = 0;
        const auto r = std::from_chars(kv->value.data(), kv->value.data() + kv->value.size(), q);
        if (r.ec != std::errc() || r.ptr != kv->value.data() + kv->value.size() || q < 1 || q > 100) {
            return send_error(sink, error_code::BadRequest, "jpeg.quality must be an integer in 1..100");
        }
        jpeg_quality_ = q;
        return send_ack(sink);
    }
    if (!sensor::Sensor::has_attribute(kv->name)) {
        return send_error(sink, error_code::UnknownAttribute, "unknown attribute '" + kv->name + "'");
    }
    try {
        std::lock_guard lock(sensor_mutex_);
        sensor_.set(kv->name, kv->value);
    } catch (const Error& e) {
        return send_error(sink, error_code::BadRequest, e.what());
    }
    send_ack(sink);
}

} // namespace virtcam::devserve
