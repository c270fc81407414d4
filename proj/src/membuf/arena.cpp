#include "virtcam/membuf.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <string>

namespace virtcam {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::OutOfMemory: return "OutOfMemory";
    case ErrorCode::NotTopOfStack: return "NotTopOfStack";
    case ErrorCode::WrongFormat: return "WrongFormat";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::TruncatedData: return "TruncatedData";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::BadKernelSize: return "BadKernelSize";
    case ErrorCode::ImageSmallerThanWindow: return "ImageSmallerThanWindow";
    case ErrorCode::DegenerateRoi: return "DegenerateRoi";
    case ErrorCode::MissingDescriptors: return "MissingDescriptors";
    case ErrorCode::BadRoi: return "BadRoi";
    case ErrorCode::TemplateTooLarge: return "TemplateTooLarge";
    case ErrorCode::ImageTooSmall: return "ImageTooSmall";
    case ErrorCode::BadThresholds: return "BadThresholds";
    case ErrorCode::BadValue: return "BadValue";
    case ErrorCode::SourceExhausted: return "SourceExhausted";
    case ErrorCode::FileError: return "FileError";
    case ErrorCode::CascadeSyntax: return "CascadeSyntax";
    }
    return "Unknown";
}

Arena::Arena(std::size_t capacity) : storage_(capacity) {}

Allocation Arena::alloc(std::size_t length) {
    if (length == 0) {
        fail(ErrorCode::InvalidArgument, "arena allocation of zero bytes");
    }
    const std::size_t aligned = align_up(length);
    if (aligned < length || aligned > available()) {
        fail(ErrorCode::OutOfMemory, "requested " + std::to_string(aligned) + " bytes, " +
                                          std::to_string(available()) + " of " +
                                          std::to_string(capacity()) + " available");
    }
    Allocation a{used_, aligned, next_id_++};
    std::fill_n(storage_.begin() + static_cast<std::ptrdiff_t>(a.offset), aligned, std::byte{0});
    used_ += aligned;
    high_water_ = std::max(high_water_, used_);
    stack_.push_back(a);
    return a;
}

bool Arena::try_free(const Allocation& handle) noexcept {
    if (stack_.empty() || stack_.back().id != handle.id || handle.id == 0) {
        return false;
    }
    used_ -= stack_.back().length;
    stack_.pop_back();
    return true;
}

void Arena::free(const Allocation& handle) {
    if (!try_free(handle)) {
        fail(ErrorCode::NotTopOfStack, "release of allocation #" + std::to_string(handle.id) +
                                           " violates LIFO order");
    }
}

std::span<std::byte> Arena::bytes(const Allocation& handle) {
    return {storage_.data() + handle.offset, handle.length};
}

std::span<const std::byte> Arena::bytes(const Allocation& handle) const {
    return {storage_.data() + handle.offset, handle.length};
}

const char* to_string(PixelFormat f) noexcept {
    return f == PixelFormat::Grayscale8 ? "GRAYSCALE" : "RGB565";
}

namespace {

[[noreturn]] void lifo_violation(const char* what, std::uint64_t id) noexcept {
    std::fprintf(stderr, "virtcam: %s destroyed out of LIFO order (allocation #%llu)\n", what,
                 static_cast<unsigned long long>(id));
    std::abort();
}

} // namespace

Image::Image(Arena& arena, int width, int height, PixelFormat format) {
    if (width < 1 || height < 1) {
        fail(ErrorCode::InvalidArgument,
             "image dimensions must be >= 1 (got " + std::to_string(width) + "x" + std::to_string(height) + ")");
    }
    const std::size_t n = static_cast<std::size_t>(width) * height * bytes_per_pixel(format);
    alloc_ = arena.alloc(n);
    arena_ = &arena;
    data_ = reinterpret_cast<std::uint8_t*>(arena.bytes(alloc_).data());
    width_ = width;
    height_ = height;
    format_ = format;
}

Image::~Image() { release(); }

Image::Image(Image&& other) noexcept
    : arena_(other.arena_), alloc_(other.alloc_), data_(other.data_), width_(other.width_),
      height_(other.height_), format_(other.format_) {
    other.arena_ = nullptr;
    other.alloc_ = {};
    other.data_ = nullptr;
    other.width_ = other.height_ = 0;
}

Image& Image::operator=(Image&& other) noexcept {
    if (this != &other) {
        release();
        arena_ = other.arena_;
        alloc_ = other.alloc_;
        data_ = other.data_;
        width_ = other.width_;
        height_ = other.height_;
        format_ = other.format_;
        other.arena_ = nullptr;
        other.alloc_ = {};
        other.data_ = nullptr;
        other.width_ = other.height_ = 0;
    }
    return *this;
}

void Image::release() noexcept {
    if (arena_ != nullptr && alloc_) {
        if (!arena_->try_free(alloc_)) {
            lifo_violation("image", alloc_.id);
        }
    }
    arena_ = nullptr;
    alloc_ = {};
    data_ = nullptr;
}

std::uint16_t Image::at(int x, int y) const {
    if (!contains(x, y)) {
        fail(ErrorCode::OutOfBounds, "pixel (" + std::to_string(x) + "," + std::to_string(y) +
                                         ") outside " + std::to_string(width_) + "x" + std::to_string(height_));
    }
    return raw(x, y);
}

void Image::set_at(int x, int y, std::uint16_t v) {
    if (!contains(x, y)) {
        fail(ErrorCode::OutOfBounds, "pixel (" + std::to_string(x) + "," + std::to_string(y) +
                                         ") outside " + std::to_string(width_) + "x" + std::to_string(height_));
    }
    set_raw(x, y, v);
}

Image image_new(Arena& arena, int width, int height, PixelFormat format) {
    return Image(arena, width, height, format);
}

Image clone(const Image& src, Arena& arena) {
    Image out(arena, src.width(), src.height(), src.format());
    std::copy(src.bytes().begin(), src.bytes().end(), out.bytes().begin());
    return out;
}

bool same_pixels(const Image& a, const Image& b) noexcept {
    return a.width() == b.width() && a.height() == b.height() && a.format() == b.format() &&
           std::equal(a.bytes().begin(), a.bytes().end(), b.bytes().begin());
}

// Integral image ----------------------------------------------------------

IntegralImage::IntegralImage(Arena& arena, const Image& img, bool with_squares) {
    if (!img.is_gray()) {
        fail(ErrorCode::WrongFormat, "integral image requires GRAYSCALE8 input");
    }
    const int w = img.width();
    const int h = img.height();
    const std::size_t n = static_cast<std::size_t>(w) * h;
    sums_alloc_ = arena.alloc(n * sizeof(std::uint32_t));
    arena_ = &arena;
    width_ = w;
    height_ = h;
    sums_ = reinterpret_cast<std::uint32_t*>(arena.bytes(sums_alloc_).data());
    if (with_squares) {
        try {
            squares_alloc_ = arena.alloc(n * sizeof(std::uint64_t));
        } catch (...) {
            release();
            throw;
        }
        squares_ = arena.bytes(squares_alloc_).data();
    }

    for (int y = 0; y < h; ++y) {
        const std::uint8_t* row = img.gray_row(y);
        std::uint32_t run = 0;
        std::uint64_t run_sq = 0;
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            run += row[x];
            sums_[i] = run + (y > 0 ? sums_[i - w] : 0u);
            if (squares_ != nullptr) {
                run_sq += static_cast<std::uint64_t>(row[x]) * row[x];
                const std::uint64_t v = run_sq + (y > 0 ? square_at(x, y - 1) : 0u);
                std::memcpy(squares_ + i * sizeof(v), &v, sizeof(v));
            }
        }
    }
}

IntegralImage::~IntegralImage() { release(); }

IntegralImage::IntegralImage(IntegralImage&& other) noexcept
    : arena_(other.arena_), sums_alloc_(other.sums_alloc_), squares_alloc_(other.squares_alloc_),
      sums_(other.sums_), squares_(other.squares_), width_(other.width_), height_(other.height_) {
    other.arena_ = nullptr;
    other.sums_alloc_ = other.squares_alloc_ = {};
    other.sums_ = nullptr;
    other.squares_ = nullptr;
    other.width_ = other.height_ = 0;
}

IntegralImage& IntegralImage::operator=(IntegralImage&& other) noexcept {
    if (this != &other) {
        release();
        arena_ = other.arena_;
        sums_alloc_ = other.sums_alloc_;
        squares_alloc_ = other.squares_alloc_;
        sums_ = other.sums_;
        squares_ = other.squares_;
        width_ = other.width_;
        height_ = other.height_;
        other.arena_ = nullptr;
        other.sums_alloc_ = other.squares_alloc_ = {};
        other.sums_ = nullptr;
        other.squares_ = nullptr;
        other.width_ = other.height_ = 0;
    }
    return *this;
}

void IntegralImage::release() noexcept {
    if (arena_ != nullptr) {
        if (squares_alloc_ && !arena_->try_free(squares_alloc_)) {
            lifo_violation("integral image", squares_alloc_.id);
        }
        if (sums_alloc_ && !arena_->try_free(sums_alloc_)) {
            lifo_violation("integral image", sums_alloc_.id);
        }
    }
    arena_ = nullptr;
    sums_alloc_ = squares_alloc_ = {};
    sums_ = nullptr;
    squares_ = nullptr;
}

void IntegralImage::check_rect(int x, int y, int w, int h) const {
    if (w < 1 || h < 1 || x < 0 || y < 0 || x > width_ - w || y > height_ - h) {
        fail(ErrorCode::OutOfBounds, "rect (" + std::to_string(x) + "," + std::to_string(y) + "," +
                                         std::to_string(w) + "," + std::to_string(h) + ") outside " +
                                         std::to_string(width_) + "x" + std::to_string(height_));
    }
}

std::uint32_t IntegralImage::rect_sum_unchecked(int x, int y, int w, int h) const noexcept {
    const int x1 = x + w - 1;
    const int y1 = y + h - 1;
    std::uint32_t s = sum_at(x1, y1);
    if (x > 0) s -= sum_at(x - 1, y1);
    if (y > 0) s -= sum_at(x1, y - 1);
    if (x > 0 && y > 0) s += sum_at(x - 1, y - 1);
    return s;
}

std::uint64_t IntegralImage::rect_square_sum_unchecked(int x, int y, int w, int h) const noexcept {
    const int x1 = x + w - 1;
    const int y1 = y + h - 1;
    std::uint64_t s = square_at(x1, y1);
    if (x > 0) s -= square_at(x - 1, y1);
    if (y > 0) s -= square_at(x1, y - 1);
    if (x > 0 && y > 0) s += square_at(x - 1, y - 1);
    return s;
}

std::uint32_t IntegralImage::rect_sum(int x, int y, int w, int h) const {
    check_rect(x, y, w, h);
    return rect_sum_unchecked(x, y, w, h);
}

std::uint64_t IntegralImage::rect_square_sum(int x, int y, int w, int h) const {
    if (!has_squares()) {
        fail(ErrorCode::InvalidArgument, "integral image was built without squared sums");
    }
    check_rect(x, y, w, h);
    return rect_square_sum_unchecked(x, y, w, h);
}

IntegralImage integral_image(Arena& arena, const Image& img, bool with_squares) {
    return IntegralImage(arena, img, with_squares);
}

} // namespace virtcam
