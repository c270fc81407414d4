#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <vector>

#include "virtcam/error.hpp"

namespace virtcam {

inline constexpr std::size_t kDefaultArenaBytes = 512 * 1024;
inline constexpr std::size_t kArenaAlignment = 4;

/// Handle to a live arena region. Only meaningful for the arena that issued it.
struct Allocation {
    std::size_t offset = 0;
    std::size_t length = 0;   // aligned length actually reserved
    std::uint64_t id = 0;     // 0 means "no allocation"

    explicit operator bool() const noexcept { return id != 0; }
};

/// Fixed-capacity LIFO allocator standing in for the MCU main SRAM block.
/// Regions are zeroed on allocation and must be released in reverse order.
class Arena {
public:
    explicit Arena(std::size_t capacity = kDefaultArenaBytes);

    Arena(const Arena&) = delete;
    Arena& operator=(const Arena&) = delete;

    Allocation alloc(std::size_t length);
    void free(const Allocation& handle);
    bool try_free(const Allocation& handle) noexcept;

    std::span<std::byte> bytes(const Allocation& handle);
    std::span<const std::byte> bytes(const Allocation& handle) const;

    std::size_t capacity() const noexcept { return storage_.size(); }
    std::size_t used() const noexcept { return used_; }
    std::size_t available() const noexcept { return storage_.size() - used_; }
    std::size_t live_allocations() const noexcept { return stack_.size(); }
    std::size_t high_water() const noexcept { return high_water_; }

    static std::size_t align_up(std::size_t n) noexcept {
        return (n + (kArenaAlignment - 1)) & ~(kArenaAlignment - 1);
    }

private:
    std::vector<std::byte> storage_;
    std::vector<Allocation> stack_;
    std::size_t used_ = 0;
    std::size_t high_water_ = 0;
    std::uint64_t next_id_ = 1;
};

enum class PixelFormat : std::uint8_t { Grayscale8 = 0, Rgb565 = 1 };

constexpr std::size_t bytes_per_pixel(PixelFormat f) noexcept {
    return f == PixelFormat::Grayscale8 ? 1 : 2;
}

const char* to_string(PixelFormat f) noexcept;

/// RGB565 packing helpers. Expansion to 8 bits replicates the high bits so
/// that 0x1F maps to 0xFF exactly.
namespace rgb565 {
constexpr std::uint16_t pack(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) noexcept {
    return static_cast<std::uint16_t>(((r8 >> 3) << 11) | ((g8 >> 2) << 5) | (b8 >> 3));
}
constexpr std::uint8_t r5(std::uint16_t p) noexcept { return (p >> 11) & 0x1F; }
constexpr std::uint8_t g6(std::uint16_t p) noexcept { return (p >> 5) & 0x3F; }
constexpr std::uint8_t b5(std::uint16_t p) noexcept { return p & 0x1F; }
constexpr std::uint8_t r8(std::uint16_t p) noexcept { return static_cast<std::uint8_t>((r5(p) << 3) | (r5(p) >> 2)); }
constexpr std::uint8_t g8(std::uint16_t p) noexcept { return static_cast<std::uint8_t>((g6(p) << 2) | (g6(p) >> 4)); }
constexpr std::uint8_t b8(std::uint16_t p) noexcept { return static_cast<std::uint8_t>((b5(p) << 3) | (b5(p) >> 2)); }
constexpr std::uint16_t from_channels(unsigned r5v, unsigned g6v, unsigned b5v) noexcept {
    return static_cast<std::uint16_t>((r5v << 11) | (g6v << 5) | b5v);
}
} // namespace rgb565

/// Arena-backed 2-D pixel grid. Move-only; the backing region is released
/// when the image is destroyed, so images must die in reverse creation order.
class Image {
public:
    Image() = default;
    Image(Arena& arena, int width, int height, PixelFormat format);
    ~Image();

    Image(Image&& other) noexcept;
    Image& operator=(Image&& other) noexcept;
    Image(const Image&) = delete;
    Image& operator=(const Image&) = delete;

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    PixelFormat format() const noexcept { return format_; }
    bool is_gray() const noexcept { return format_ == PixelFormat::Grayscale8; }
    bool empty() const noexcept { return data_ == nullptr; }
    std::size_t size_bytes() const noexcept {
        return static_cast<std::size_t>(width_) * height_ * bytes_per_pixel(format_);
    }
    bool contains(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }

    std::span<std::uint8_t> bytes() noexcept { return {data_, size_bytes()}; }
    std::span<const std::uint8_t> bytes() const noexcept { return {data_, size_bytes()}; }

    /// Unchecked row access for GRAYSCALE8 images.
    std::uint8_t* gray_row(int y) noexcept { return data_ + static_cast<std::size_t>(y) * width_; }
    const std::uint8_t* gray_row(int y) const noexcept { return data_ + static_cast<std::size_t>(y) * width_; }

    /// Unchecked accessors; callers guarantee bounds and format.
    std::uint8_t gray(int x, int y) const noexcept { return gray_row(y)[x]; }
    void set_gray(int x, int y, std::uint8_t v) noexcept { gray_row(y)[x] = v; }
    std::uint16_t rgb(int x, int y) const noexcept {
        const std::uint8_t* p = data_ + (static_cast<std::size_t>(y) * width_ + x) * 2;
        return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
    }
    void set_rgb(int x, int y, std::uint16_t v) noexcept {
        std::uint8_t* p = data_ + (static_cast<std::size_t>(y) * width_ + x) * 2;
        p[0] = static_cast<std::uint8_t>(v & 0xFF);
        p[1] = static_cast<std::uint8_t>(v >> 8);
    }

    /// Format-agnostic raw value (gray level or packed RGB565), unchecked.
    std::uint16_t raw(int x, int y) const noexcept { return is_gray() ? gray(x, y) : rgb(x, y); }
    void set_raw(int x, int y, std::uint16_t v) noexcept {
        if (is_gray()) set_gray(x, y, static_cast<std::uint8_t>(v)); else set_rgb(x, y, v);
    }

    /// Bounds-checked accessors (OutOfBounds).
    std::uint16_t at(int x, int y) const;
    void set_at(int x, int y, std::uint16_t v);

    Arena* arena() const noexcept { return arena_; }

private:
    void release() noexcept;

    Arena* arena_ = nullptr;
    Allocation alloc_{};
    std::uint8_t* data_ = nullptr;
    int width_ = 0;
    int height_ = 0;
    PixelFormat format_ = PixelFormat::Grayscale8;
};

Image image_new(Arena& arena, int width, int height, PixelFormat format);
Image clone(const Image& src, Arena& arena);
bool same_pixels(const Image& a, const Image& b) noexcept;

/// Summed-area table over a GRAYSCALE8 image, optionally with a parallel
/// table of squared values. Both tables live in the arena.
class IntegralImage {
public:
    IntegralImage() = default;
    IntegralImage(Arena& arena, const Image& img, bool with_squares);
    ~IntegralImage();

    IntegralImage(IntegralImage&& other) noexcept;
    IntegralImage& operator=(IntegralImage&& other) noexcept;
    IntegralImage(const IntegralImage&) = delete;
    IntegralImage& operator=(const IntegralImage&) = delete;

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool has_squares() const noexcept { return squares_ != nullptr; }

    /// Cumulative sum over [0,x]x[0,y], unchecked.
    std::uint32_t sum_at(int x, int y) const noexcept { return sums_[static_cast<std::size_t>(y) * width_ + x]; }
    std::uint64_t square_at(int x, int y) const noexcept {
        // 4-byte arena alignment does not guarantee 8-byte alignment here.
        std::uint64_t v;
        std::memcpy(&v, squares_ + (static_cast<std::size_t>(y) * width_ + x) * sizeof(v), sizeof(v));
        return v;
    }

    /// Sum over [x,x+w)x[y,y+h). Throws OutOfBounds for rectangles outside the table.
    std::uint32_t rect_sum(int x, int y, int w, int h) const;
    std::uint64_t rect_square_sum(int x, int y, int w, int h) const;

    /// Unchecked variants for inner loops.
    std::uint32_t rect_sum_unchecked(int x, int y, int w, int h) const noexcept;
    std::uint64_t rect_square_sum_unchecked(int x, int y, int w, int h) const noexcept;

private:
    void check_rect(int x, int y, int w, int h) const;
    void release() noexcept;

    Arena* arena_ = nullptr;
    Allocation sums_alloc_{};
    Allocation squares_alloc_{};
    std::uint32_t* sums_ = nullptr;
    std::byte* squares_ = nullptr;
    int width_ = 0;
    int height_ = 0;
};

IntegralImage integral_image(Arena& arena, const Image& img, bool with_squares);

} // namespace virtcam
