#include "virtcam/sensor.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <optional>

#include "virtcam/imgio.hpp"

namespace virtcam::sensor {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kPatterns = {"gradient", "checker", "noise", "line", "disk", "counter"};

const std::vector<std::string> kAttributes = {
    "framesize", "pixformat", "window", "hmirror", "vflip", "brightness", "contrast",
    "led.red", "led.green", "led.blue", "led.ir", "source",
};

[[noreturn]] void bad(const std::string& msg) { fail(ErrorCode::BadValue, msg); }

std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

int parse_int(std::string_view s, const char* what) {
    int v = 0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    if (!s.empty() && *b == '+') ++b;
    const auto r = std::from_chars(b, e, v);
    if (r.ec != std::errc{} || r.ptr != e || b == e) bad(std::string("bad ") + what + " value '" + std::string(s) + "'");
    return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t pos = 0;
    for (;;) {
        const std::size_t at = s.find(sep, pos);
        parts.push_back(s.substr(pos, at == std::string_view::npos ? std::string_view::npos : at - pos));
        if (at == std::string_view::npos) break;
        pos = at + 1;
    }
    return parts;
}

bool is_image_file(const fs::path& p) {
    const std::string ext = lower(p.extension().string());
    return ext == ".pgm" || ext == ".ppm" || ext == ".bmp";
}

void validate_source(const FrameSource& src) {
    if (const auto* p = std::get_if<PatternSource>(&src)) {
        if (std::find(kPatterns.begin(), kPatterns.end(), p->name) == kPatterns.end()) bad("unknown pattern '" + p->name + "'");
    } else if (const auto* s = std::get_if<StillSource>(&src)) {
        if (!fs::is_regular_file(s->path)) fail(ErrorCode::FileError, "still image '" + s->path + "' not found");
    } else if (const auto* q = std::get_if<SequenceSource>(&src)) {
        if (!fs::is_directory(q->directory)) fail(ErrorCode::FileError, "sequence directory '" + q->directory + "' not found");
    }
}

NativeFrame load_native_file(const std::string& path) {
    const std::vector<std::uint8_t> bytes = imgio::read_file(path);
    const imgio::ImageInfo info = imgio::read_image_info(bytes);
    // The decoded still lives in a private scratch arena, not the device budget.
    Arena scratch(Arena::align_up(static_cast<std::size_t>(info.width) * info.height * bytes_per_pixel(info.format)) + 64);
    const Image img = imgio::read_image(bytes, scratch);
    NativeFrame out(static_cast<std::size_t>(kNativeWidth) * kNativeHeight * 3);
    for (int y = 0; y < kNativeHeight; ++y) {
        const int sy = static_cast<int>(static_cast<long long>(y) * img.height() / kNativeHeight);
        for (int x = 0; x < kNativeWidth; ++x) {
            const int sx = static_cast<int>(static_cast<long long>(x) * img.width() / kNativeWidth);
            std::uint8_t* o = &out[(static_cast<std::size_t>(y) * kNativeWidth + x) * 3];
            if (img.is_gray()) {
                o[0] = o[1] = o[2] = img.gray(sx, sy);
            } else {
                const std::uint16_t p = img.rgb(sx, sy);
                o[0] = rgb565::r8(p);
                o[1] = rgb565::g8(p);
                o[2] = rgb565::b8(p);
            }
        }
    }
    return out;
}

} // namespace

int SensorConfig::width() const noexcept {
    switch (framesize) {
    case FrameSize::Qqvga: return 160;
    case FrameSize::Qvga: return 320;
    case FrameSize::Vga: return 640;
    case FrameSize::Custom: return custom_w;
    }
    return 0;
}

int SensorConfig::height() const noexcept {
    switch (framesize) {
    case FrameSize::Qqvga: return 120;
    case FrameSize::Qvga: return 240;
    case FrameSize::Vga: return 480;
    case FrameSize::Custom: return custom_h;
    }
    return 0;
}

const std::vector<std::string>& pattern_names() { return kPatterns; }

FrameSource parse_source(std::string_view spec) {
    const auto colon = spec.find(':');
    if (colon == std::string_view::npos) bad("source must look like pattern:NAME[:SEED], still:PATH or seq:DIR[:loop]");
    const std::string_view kind = spec.substr(0, colon);
    const std::string_view rest = spec.substr(colon + 1);
    if (kind == "pattern") {
        const auto parts = split(rest, ':');
        if (parts.size() > 2 || parts[0].empty()) bad("bad pattern source '" + std::string(spec) + "'");
        PatternSource p{std::string(parts[0]), 0};
        if (parts.size() == 2) {
            const auto r = std::from_chars(parts[1].data(), parts[1].data() + parts[1].size(), p.seed);
            if (r.ec != std::errc{} || r.ptr != parts[1].data() + parts[1].size() || parts[1].empty()) {
                bad("bad pattern seed '" + std::string(parts[1]) + "'");
            }
        }
        if (std::find(kPatterns.begin(), kPatterns.end(), p.name) == kPatterns.end()) bad("unknown pattern '" + p.name + "'");
        return p;
    }
    if (kind == "still") {
        if (rest.empty()) bad("still source needs a path");
        return StillSource{std::string(rest)};
    }
    if (kind == "seq") {
        SequenceSource s;
        std::string_view dir = rest;
        if (dir.size() > 5 && dir.substr(dir.size() - 5) == ":loop") {
            s.loop = true;
            dir = dir.substr(0, dir.size() - 5);
        }
        if (dir.empty()) bad("sequence source needs a directory");
        s.directory = std::string(dir);
        return s;
    }
    bad("unknown source kind '" + std::string(kind) + "'");
}

std::string to_string(const FrameSource& src) {
    if (const auto* p = std::get_if<PatternSource>(&src)) return "pattern:" + p->name + ":" + std::to_string(p->seed);
    if (const auto* s = std::get_if<StillSource>(&src)) return "still:" + s->path;
    const auto& q = std::get<SequenceSource>(src);
    return "seq:" + q.directory + (q.loop ? ":loop" : "");
}

namespace {

/// One pattern bound to a frame index; per-frame quantities are computed once.
class PatternFrame {
public:
    PatternFrame(const PatternSource& p, std::uint64_t frame) : seed_(p.seed) {
        const auto it = std::find(kPatterns.begin(), kPatterns.end(), p.name);
        if (it == kPatterns.end()) bad("unknown pattern '" + p.name + "'");
        kind_ = static_cast<int>(it - kPatterns.begin());
        if (kind_ == kLine) {
            const double deg = static_cast<double>((seed_ + 5 * frame) % 180);
            const double a = deg * std::numbers::pi / 180.0;
            sin_ = std::sin(a);
            cos_ = std::cos(a);
        } else if (kind_ == kDisk) {
            cx_ = 100 + static_cast<int>((seed_ * 13 + frame * 4) % 440);
            cy_ = 140 + static_cast<int>((seed_ * 7 + frame * 2) % 200);
        } else if (kind_ == kCounter) {
            // Top and bottom halves always sum to 255; a torn frame breaks that.
            level_ = static_cast<int>((frame * 37) % 200) + 28;
        } else if (kind_ == kNoise) {
            noise_key_ = mix(mix(seed_) ^ frame);
        }
    }

    std::array<std::uint8_t, 3> at(int x, int y) const {
        auto gray = [](int v) {
            const auto b = static_cast<std::uint8_t>(std::clamp(v, 0, 255));
            return std::array<std::uint8_t, 3>{b, b, b};
        };
        switch (kind_) {
        case kGradient: return gray(x * 255 / (kNativeWidth - 1));
        case kChecker: return gray((((x / 32) + (y / 32) + static_cast<int>(seed_ & 1)) & 1) ? 255 : 0);
        case kNoise: {
            const std::uint64_t h = mix(noise_key_ ^ (static_cast<std::uint64_t>(y) << 32 | static_cast<std::uint32_t>(x)));
            return {static_cast<std::uint8_t>(h), static_cast<std::uint8_t>(h >> 8), static_cast<std::uint8_t>(h >> 16)};
        }
        case kLine: {
            const double d = -sin_ * (x - kNativeWidth / 2) + cos_ * (y - kNativeHeight / 2);
            return gray(std::abs(d) <= 1.5 ? 255 : 0);
        }
        case kDisk: {
            const int dx = x - cx_, dy = y - cy_;
            return gray(dx * dx + dy * dy <= 60 * 60 ? 40 : 200);
        }
        default: return gray(y < kNativeHeight / 2 ? level_ : 255 - level_);
        }
    }

private:
    // Order follows kPatterns.
    enum { kGradient, kChecker, kNoise, kLine, kDisk, kCounter };
    std::uint64_t seed_;
    int kind_ = 0;
    double sin_ = 0, cos_ = 0;
    int cx_ = 0, cy_ = 0, level_ = 0;
    std::uint64_t noise_key_ = 0;
};

} // namespace

std::array<std::uint8_t, 3> pattern_pixel(const PatternSource& p, std::uint64_t frame, int x, int y) {
    return PatternFrame(p, frame).at(x, y);
}

std::string framesize_to_string(const SensorConfig& c) {
    switch (c.framesize) {
    case FrameSize::Qqvga: return "QQVGA";
    case FrameSize::Qvga: return "QVGA";
    case FrameSize::Vga: return "VGA";
    case FrameSize::Custom: return std::to_string(c.custom_w) + "x" + std::to_string(c.custom_h);
    }
    return "";
}

std::optional<Led> led_from_name(std::string_view name) {
    if (name == "red") return Led::Red;
    if (name == "green") return Led::Green;
    if (name == "blue") return Led::Blue;
    if (name == "ir") return Led::Ir;
    return std::nullopt;
}

bool parse_flag(std::string_view value) {
    const std::string v = lower(value);
    if (v == "on" || v == "true" || v == "1") return true;
    if (v == "off" || v == "false" || v == "0") return false;
    bad("expected on/off, got '" + std::string(value) + "'");
}

Sensor::Sensor(FrameSource source) : source_(std::move(source)) { validate_source(source_); }

void Sensor::reset() {
    config_ = SensorConfig{};
}

void Sensor::set_framesize(FrameSize fs, int w, int h) {
    if (fs == FrameSize::Custom && (w < 1 || h < 1 || w > kNativeWidth || h > kNativeHeight)) {
        bad("custom framesize must be within 1x1..640x480");
    }
    config_.framesize = fs;
    config_.custom_w = fs == FrameSize::Custom ? w : 0;
    config_.custom_h = fs == FrameSize::Custom ? h : 0;
}

void Sensor::set_pixformat(PixelFormat f) { config_.pixformat = f; }

void Sensor::set_window(std::optional<Window> w) {
    if (w && (w->x < 0 || w->y < 0 || w->w < kMinWindow || w->h < kMinWindow || w->x + w->w > kNativeWidth ||
              w->y + w->h > kNativeHeight)) {
        bad("window must lie within 640x480 and be at least 8x8");
    }
    config_.window = w;
}

void Sensor::set_hmirror(bool on) { config_.hmirror = on; }
void Sensor::set_vflip(bool on) { config_.vflip = on; }

void Sensor::set_brightness(int v) {
    if (v < -128 || v > 127) bad("brightness must be within -128..127");
    config_.brightness = v;
}

void Sensor::set_contrast(int v) {
    if (v < 0 || v > 1024) bad("contrast must be within 0..1024");
    config_.contrast = v;
}

void Sensor::set_led(Led led, bool on) { config_.leds[static_cast<int>(led)] = on; }

void Sensor::set_source(FrameSource src) {
    validate_source(src);
    source_ = std::move(src);
    next_frame_ = 0;
    sequence_files_.clear();
    cached_path_.clear();
    cached_native_.clear();
}

const NativeFrame* Sensor::load_native(std::uint64_t index) {
    std::string path;
    if (const auto* s = std::get_if<StillSource>(&source_)) {
        path = s->path;
    } else if (const auto* q = std::get_if<SequenceSource>(&source_)) {
        if (sequence_files_.empty()) {
            std::error_code ec;
            for (const auto& entry : fs::directory_iterator(q->directory, ec)) {
                if (entry.is_regular_file() && is_image_file(entry.path())) sequence_files_.push_back(entry.path().string());
            }
            if (ec) fail(ErrorCode::FileError, "cannot list '" + q->directory + "'");
            std::sort(sequence_files_.begin(), sequence_files_.end());
            if (sequence_files_.empty()) fail(ErrorCode::FileError, "sequence directory '" + q->directory + "' has no images");
        }
        const std::uint64_t n = sequence_files_.size();
        if (!q->loop && index >= n) fail(ErrorCode::SourceExhausted, "sequence ended after " + std::to_string(n) + " frames");
        path = sequence_files_[index % n];
    } else {
        return nullptr;
    }
    if (path != cached_path_) {
        cached_native_ = load_native_file(path);
        cached_path_ = path;
    }
    return &cached_native_;
}

void Sensor::render_into(Image& out, std::uint64_t index) {
    const NativeFrame* native = load_native(index);
    const PatternSource* pattern = std::get_if<PatternSource>(&source_);
    const int w = out.width(), h = out.height();
    const Window r = config_.window.value_or(Window{0, 0, kNativeWidth, kNativeHeight});
    // Corner-aligned nearest sampling so both edges of the region are reproduced.
    std::vector<int> xs(static_cast<std::size_t>(w)), ys(static_cast<std::size_t>(h));
    for (int i = 0; i < w; ++i) {
        const int m = config_.hmirror ? w - 1 - i : i;
        xs[i] = r.x + (w == 1 ? 0 : static_cast<int>((2LL * m * (r.w - 1) + (w - 1)) / (2LL * (w - 1))));
    }
    for (int j = 0; j < h; ++j) {
        const int m = config_.vflip ? h - 1 - j : j;
        ys[j] = r.y + (h == 1 ? 0 : static_cast<int>((2LL * m * (r.h - 1) + (h - 1)) / (2LL * (h - 1))));
    }
    std::array<std::uint8_t, 256> tone;
    for (int v = 0; v < 256; ++v) tone[v] = static_cast<std::uint8_t>(std::clamp(((v * config_.contrast) >> 8) + config_.brightness, 0, 255));
    std::optional<PatternFrame> pattern_frame;
    if (pattern) pattern_frame.emplace(*pattern, index);
    const bool gray = out.is_gray();
    for (int j = 0; j < h; ++j) {
        for (int i = 0; i < w; ++i) {
            std::array<std::uint8_t, 3> px;
            if (native) {
                const std::uint8_t* p = &(*native)[(static_cast<std::size_t>(ys[j]) * kNativeWidth + xs[i]) * 3];
                px = {p[0], p[1], p[2]};
            } else {
                px = pattern_frame->at(xs[i], ys[j]);
            }
            const std::uint8_t r8 = tone[px[0]], g8 = tone[px[1]], b8 = tone[px[2]];
            if (gray) out.set_gray(i, j, static_cast<std::uint8_t>((77 * r8 + 150 * g8 + 29 * b8) >> 8));
            else out.set_rgb(i, j, rgb565::pack(r8, g8, b8));
        }
    }
}

Image Sensor::render(Arena& arena, std::uint64_t index) {
    Image out(arena, width(), height(), config_.pixformat);
    render_into(out, index);
    return out;
}

Image Sensor::snapshot(Arena& arena) {
    Image out = render(arena, next_frame_);
    ++next_frame_;
    return out;
}

void Sensor::snapshot_into(Image& dst) {
    if (dst.width() != width() || dst.height() != height() || dst.format() != config_.pixformat) {
        fail(ErrorCode::DimensionMismatch, "frame buffer does not match the sensor configuration");
    }
    render_into(dst, next_frame_);
    ++next_frame_;
}

const std::vector<std::string>& Sensor::attribute_names() { return kAttributes; }

bool Sensor::has_attribute(std::string_view name) {
    return std::find(kAttributes.begin(), kAttributes.end(), name) != kAttributes.end();
}

std::string Sensor::get(std::string_view name) const {
    auto flag = [](bool b) { return std::string(b ? "on" : "off"); };
    if (name == "framesize") return framesize_to_string(config_);
    if (name == "pixformat") return to_string(config_.pixformat);
    if (name == "window") {
        if (!config_.window) return "none";
        const Window& w = *config_.window;
        return std::to_string(w.x) + "," + std::to_string(w.y) + "," + std::to_string(w.w) + "," + std::to_string(w.h);
    }
    if (name == "hmirror") return flag(config_.hmirror);
    if (name == "vflip") return flag(config_.vflip);
    if (name == "brightness") return std::to_string(config_.brightness);
    if (name == "contrast") return std::to_string(config_.contrast);
    if (name.rfind("led.", 0) == 0) {
        if (const auto l = led_from_name(name.substr(4))) return flag(led(*l));
    }
    if (name == "source") return to_string(source_);
    fail(ErrorCode::InvalidArgument, "unknown attribute '" + std::string(name) + "'");
}

void Sensor::set(std::string_view name, std::string_view value) {
    if (name == "framesize") {
        const std::string v = lower(value);
        if (v == "qqvga") return set_framesize(FrameSize::Qqvga);
        if (v == "qvga") return set_framesize(FrameSize::Qvga);
        if (v == "vga") return set_framesize(FrameSize::Vga);
        const auto x = v.find('x');
        if (x == std::string::npos) bad("unknown framesize '" + std::string(value) + "'");
        return set_framesize(FrameSize::Custom, parse_int(std::string_view(v).substr(0, x), "framesize"),
                             parse_int(std::string_view(v).substr(x + 1), "framesize"));
    }
    if (name == "pixformat") {
        const std::string v = lower(value);
        if (v == "grayscale") return set_pixformat(PixelFormat::Grayscale8);
        if (v == "rgb565") return set_pixformat(PixelFormat::Rgb565);
        bad("unknown pixformat '" + std::string(value) + "'");
    }
    if (name == "window") {
        if (lower(value) == "none") return set_window(std::nullopt);
        const auto parts = split(value, ',');
        if (parts.size() != 4) bad("window must be 'x,y,w,h' or 'none'");
        return set_window(Window{parse_int(parts[0], "window"), parse_int(parts[1], "window"),
                                 parse_int(parts[2], "window"), parse_int(parts[3], "window")});
    }
    if (name == "hmirror") return set_hmirror(parse_flag(value));
    if (name == "vflip") return set_vflip(parse_flag(value));
    if (name == "brightness") return set_brightness(parse_int(value, "brightness"));
    if (name == "contrast") return set_contrast(parse_int(value, "contrast"));
    if (name.rfind("led.", 0) == 0) {
        if (const auto l = led_from_name(name.substr(4))) return set_led(*l, parse_flag(value));
    }
    if (name == "source") return set_source(parse_source(value));
    fail(ErrorCode::InvalidArgument, "unknown attribute '" + std::string(name) + "'");
}

} // namespace virtcam::sensor
