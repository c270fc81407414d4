#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "virtcam/membuf.hpp"

namespace virtcam::imgproc {

enum class ScaleMethod { Nearest, Bilinear };

Image crop(const Image& img, int x, int y, int w, int h, Arena& arena);
Image scale(const Image& img, int new_w, int new_h, ScaleMethod method, Arena& arena);

/// out = (src*alpha + dst*(256-alpha)) >> 8 per channel, alpha in 0..256.
void blend(Image& dst, const Image& src, int alpha);

struct Line { int x0, y0, x1, y1; };
struct Rect { int x, y, w, h; bool filled = false; };
struct Circle { int cx, cy, r; bool filled = false; };
struct Text { int x, y; std::string text; };

struct Primitive {
    std::variant<Line, Rect, Circle, Text> shape;
    std::uint16_t color = 0;  // gray level or packed RGB565
};

/// Clips against the image; off-image geometry is silently dropped.
void draw(Image& img, const Primitive& p);

inline constexpr int kGlyphSize = 8;
/// Rows of the built-in 8x8 glyph for a printable ASCII character; bit 0 is the leftmost pixel.
const std::array<std::uint8_t, 8>& glyph(char c) noexcept;

std::uint16_t get_pixel(const Image& img, int x, int y);
void set_pixel(Image& img, int x, int y, std::uint16_t value);

struct Stats {
    int channels = 1;  // 1 for GRAYSCALE8 (gray), 3 for RGB565 (r5, g6, b5 domains)
    std::array<int, 3> min{};
    std::array<int, 3> max{};
    std::array<int, 3> mean{};  // rounded half-up
    std::array<std::vector<std::uint32_t>, 3> histogram;
};

Stats stats(const Image& img);

Image median_filter(const Image& img, int ksize, Arena& arena);
Image midpoint_filter(const Image& img, int ksize, Arena& arena);

/// Integer 1-D Gaussian taps for ksize in {3,5,7}; the taps sum to 256.
std::vector<int> gaussian_kernel(int ksize);
double gaussian_sigma(int ksize) noexcept;
Image gaussian_blur(const Image& img, int ksize, Arena& arena);

void hist_eq(Image& img);

} // namespace virtcam::imgproc
