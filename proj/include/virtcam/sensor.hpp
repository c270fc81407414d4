#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "virtcam/membuf.hpp"

namespace virtcam::sensor {

inline constexpr int kNativeWidth = 640;
inline constexpr int kNativeHeight = 480;
inline constexpr int kMinWindow = 8;

enum class FrameSize { Qqvga, Qvga, Vga, Custom };

struct Window {
    int x = 0, y = 0, w = 0, h = 0;
    bool operator==(const Window&) const = default;
};

enum class Led { Red = 0, Green = 1, Blue = 2, Ir = 3 };

struct SensorConfig {
    FrameSize framesize = FrameSize::Qvga;
    int custom_w = 0;
    int custom_h = 0;
    PixelFormat pixformat = PixelFormat::Rgb565;
    std::optional<Window> window;
    bool hmirror = false;
    bool vflip = false;
    int brightness = 0;   // -128..127
    int contrast = 256;   // gain x256, 0..1024
    std::array<bool, 4> leds{};

    int width() const noexcept;
    int height() const noexcept;
};

struct PatternSource {
    std::string name;
    std::uint64_t seed = 0;
};
struct StillSource {
    std::string path;
};
struct SequenceSource {
    std::string directory;
    bool loop = false;
};
using FrameSource = std::variant<PatternSource, StillSource, SequenceSource>;

/// "pattern:NAME[:SEED]", "still:PATH" or "seq:DIR[:loop]".
FrameSource parse_source(std::string_view spec);
std::string to_string(const FrameSource& src);

const std::vector<std::string>& pattern_names();

/// Native 640x480 RGB888 frame, row-major, 3 bytes per pixel.
using NativeFrame = std::vector<std::uint8_t>;

class Sensor {
public:
    explicit Sensor(FrameSource source = PatternSource{"gradient", 0});

    /// Restores the default configuration; the source and frame counter are kept.
    void reset();

    const SensorConfig& config() const noexcept { return config_; }
    void set_framesize(FrameSize fs, int w = 0, int h = 0);
    void set_pixformat(PixelFormat f);
    void set_window(std::optional<Window> w);
    void set_hmirror(bool on);
    void set_vflip(bool on);
    void set_brightness(int v);
    void set_contrast(int v);
    void set_led(Led led, bool on);
    bool led(Led l) const noexcept { return config_.leds[static_cast<int>(l)]; }

    const FrameSource& source() const noexcept { return source_; }
    void set_source(FrameSource src);

    /// Renders the next frame into a new arena image and advances the frame counter.
    Image snapshot(Arena& arena);
    /// Same, reusing dst when its size and format match the configuration.
    void snapshot_into(Image& dst);
    /// Renders frame `index` without touching the counter.
    Image render(Arena& arena, std::uint64_t index);

    std::uint64_t frame_index() const noexcept { return next_frame_; }
    int width() const noexcept { return config_.width(); }
    int height() const noexcept { return config_.height(); }

    /// String attribute interface used by the scripting layer and the protocol.
    static const std::vector<std::string>& attribute_names();
    static bool has_attribute(std::string_view name);
    std::string get(std::string_view name) const;
    void set(std::string_view name, std::string_view value);

private:
    const NativeFrame* load_native(std::uint64_t index);
    void render_into(Image& out, std::uint64_t index);

    SensorConfig config_;
    FrameSource source_;
    std::uint64_t next_frame_ = 0;
    std::vector<std::string> sequence_files_;
    std::string cached_path_;
    NativeFrame cached_native_;
};

/// Pattern pixel at native coordinates, as RGB888.
std::array<std::uint8_t, 3> pattern_pixel(const PatternSource& p, std::uint64_t frame, int x, int y);

std::string framesize_to_string(const SensorConfig& c);
std::optional<Led> led_from_name(std::string_view name);
bool parse_flag(std::string_view value);

} // namespace virtcam::sensor
