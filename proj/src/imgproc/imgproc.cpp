#include "virtcam/imgproc.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace virtcam::imgproc {

namespace {

void require_gray(const Image& img, const char* op) {
    if (!img.is_gray()) fail(ErrorCode::WrongFormat, std::string(op) + " requires a GRAYSCALE8 image");
}

void require_odd_kernel(int ksize, const char* op) {
    if (ksize < 3 || ksize % 2 == 0 || ksize > 31) {
        fail(ErrorCode::BadKernelSize, std::string(op) + ": kernel size must be odd and within 3..31, got " +
                                           std::to_string(ksize));
    }
}

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

inline void plot(Image& img, int x, int y, std::uint16_t color) {
    if (img.contains(x, y)) img.set_raw(x, y, color);
}

void hspan(Image& img, int x0, int x1, int y, std::uint16_t color) {
    if (y < 0 || y >= img.height()) return;
    x0 = std::max(x0, 0);
    x1 = std::min(x1, img.width() - 1);
    for (int x = x0; x <= x1; ++x) img.set_raw(x, y, color);
}

void draw_line(Image& img, const Line& l, std::uint16_t color) {
    int x0 = l.x0, y0 = l.y0;
    const int dx = std::abs(l.x1 - l.x0), sx = l.x0 < l.x1 ? 1 : -1;
    const int dy = -std::abs(l.y1 - l.y0), sy = l.y0 < l.y1 ? 1 : -1;
    int err = dx + dy;
    for (;;) {
        plot(img, x0, y0, color);
        if (x0 == l.x1 && y0 == l.y1) break;
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

void draw_rect(Image& img, const Rect& r, std::uint16_t color) {
    if (r.w <= 0 || r.h <= 0) return;
    const int x1 = r.x + r.w - 1;
    const int y1 = r.y + r.h - 1;
    if (r.filled) {
        for (int y = r.y; y <= y1; ++y) hspan(img, r.x, x1, y, color);
        return;
    }
    hspan(img, r.x, x1, r.y, color);
    hspan(img, r.x, x1, y1, color);
    for (int y = r.y; y <= y1; ++y) {
        plot(img, r.x, y, color);
        plot(img, x1, y, color);
    }
}

void draw_circle(Image& img, const Circle& c, std::uint16_t color) {
    if (c.r < 0) return;
    int x = c.r, y = 0, err = 1 - c.r;
    while (x >= y) {
        if (c.filled) {
            hspan(img, c.cx - x, c.cx + x, c.cy + y, color);
            hspan(img, c.cx - x, c.cx + x, c.cy - y, color);
            hspan(img, c.cx - y, c.cx + y, c.cy + x, color);
            hspan(img, c.cx - y, c.cx + y, c.cy - x, color);
        } else {
            plot(img, c.cx + x, c.cy + y, color);
            plot(img, c.cx + y, c.cy + x, color);
            plot(img, c.cx - y, c.cy + x, color);
            plot(img, c.cx - x, c.cy + y, color);
            plot(img, c.cx - x, c.cy - y, color);
            plot(img, c.cx - y, c.cy - x, color);
            plot(img, c.cx + y, c.cy - x, color);
            plot(img, c.cx + x, c.cy - y, color);
        }
        ++y;
        if (err < 0) {
            err += 2 * y + 1;
        } else {
            --x;
            err += 2 * (y - x) + 1;
        }
    }
}

void draw_text(Image& img, const Text& t, std::uint16_t color) {
    int ox = t.x;
    for (char ch : t.text) {
        const auto& rows = glyph(ch);
        for (int gy = 0; gy < kGlyphSize; ++gy) {
            for (int gx = 0; gx < kGlyphSize; ++gx) {
                if (rows[gy] & (1u << gx)) plot(img, ox + gx, t.y + gy, color);
            }
        }
        ox += kGlyphSize;
    }
}

template <typename Reduce>
Image neighborhood_filter(const Image& img, int ksize, Arena& arena, Reduce reduce) {
    Image out(arena, img.width(), img.height(), PixelFormat::Grayscale8);
    const int r = ksize / 2;
    std::vector<std::uint8_t> window(static_cast<std::size_t>(ksize) * ksize);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            std::size_t k = 0;
            for (int dy = -r; dy <= r; ++dy) {
                const std::uint8_t* row = img.gray_row(clampi(y + dy, 0, img.height() - 1));
                for (int dx = -r; dx <= r; ++dx) window[k++] = row[clampi(x + dx, 0, img.width() - 1)];
            }
            out.set_gray(x, y, reduce(window));
        }
    }
    return out;
}

} // namespace

Image crop(const Image& img, int x, int y, int w, int h, Arena& arena) {
    if (w < 1 || h < 1 || x < 0 || y < 0 || x > img.width() - w || y > img.height() - h) {
        fail(ErrorCode::OutOfBounds, "crop (" + std::to_string(x) + "," + std::to_string(y) + "," +
                                         std::to_string(w) + "," + std::to_string(h) + ") outside " +
                                         std::to_string(img.width()) + "x" + std::to_string(img.height()));
    }
    Image out(arena, w, h, img.format());
    const std::size_t bpp = bytes_per_pixel(img.format());
    for (int j = 0; j < h; ++j) {
        const auto src = img.bytes().subspan((static_cast<std::size_t>(y + j) * img.width() + x) * bpp, w * bpp);
        std::copy(src.begin(), src.end(), out.bytes().begin() + static_cast<std::ptrdiff_t>(j * w * bpp));
    }
    return out;
}

Image scale(const Image& img, int new_w, int new_h, ScaleMethod method, Arena& arena) {
    if (new_w < 1 || new_h < 1) fail(ErrorCode::InvalidArgument, "scale target must be >= 1x1");
    Image out(arena, new_w, new_h, img.format());
    const int w = img.width();
    const int h = img.height();
    if (method == ScaleMethod::Nearest) {
        for (int j = 0; j < new_h; ++j) {
            const int sy = static_cast<int>(static_cast<long long>(j) * h / new_h);
            for (int i = 0; i < new_w; ++i) {
                const int sx = static_cast<int>(static_cast<long long>(i) * w / new_w);
                out.set_raw(i, j, img.raw(sx, sy));
            }
        }
        return out;
    }

    // Bilinear with half-pixel centers; samples outside the grid clamp to the edge.
    auto channel = [&](std::uint16_t p, int c) -> double {
        if (img.is_gray()) return p;
        return c == 0 ? rgb565::r5(p) : (c == 1 ? rgb565::g6(p) : rgb565::b5(p));
    };
    const int channels = img.is_gray() ? 1 : 3;
    for (int j = 0; j < new_h; ++j) {
        double fy = (j + 0.5) * h / new_h - 0.5;
        fy = std::clamp(fy, 0.0, static_cast<double>(h - 1));
        const int y0 = static_cast<int>(std::floor(fy));
        const int y1 = std::min(y0 + 1, h - 1);
        const double ty = fy - y0;
        for (int i = 0; i < new_w; ++i) {
            double fx = (i + 0.5) * w / new_w - 0.5;
            fx = std::clamp(fx, 0.0, static_cast<double>(w - 1));
            const int x0 = static_cast<int>(std::floor(fx));
            const int x1 = std::min(x0 + 1, w - 1);
            const double tx = fx - x0;
            int v[3] = {0, 0, 0};
            for (int c = 0; c < channels; ++c) {
                const double a = channel(img.raw(x0, y0), c), b = channel(img.raw(x1, y0), c);
                const double cc = channel(img.raw(x0, y1), c), d = channel(img.raw(x1, y1), c);
                const double top = a + (b - a) * tx;
                const double bot = cc + (d - cc) * tx;
                v[c] = static_cast<int>(std::floor(top + (bot - top) * ty + 0.5));
            }
            if (img.is_gray()) {
                out.set_gray(i, j, static_cast<std::uint8_t>(clampi(v[0], 0, 255)));
            } else {
                out.set_rgb(i, j, rgb565::from_channels(clampi(v[0], 0, 31), clampi(v[1], 0, 63), clampi(v[2], 0, 31)));
            }
        }
    }
    return out;
}

void blend(Image& dst, const Image& src, int alpha) {
    if (dst.width() != src.width() || dst.height() != src.height() || dst.format() != src.format()) {
        fail(ErrorCode::DimensionMismatch, "blend requires images of identical size and format");
    }
    if (alpha < 0 || alpha > 256) fail(ErrorCode::InvalidArgument, "blend alpha must be within 0..256");
    const int inv = 256 - alpha;
    for (int y = 0; y < dst.height(); ++y) {
        for (int x = 0; x < dst.width(); ++x) {
            if (dst.is_gray()) {
                dst.set_gray(x, y, static_cast<std::uint8_t>((src.gray(x, y) * alpha + dst.gray(x, y) * inv) >> 8));
            } else {
                const std::uint16_t s = src.rgb(x, y), d = dst.rgb(x, y);
                const unsigned r = (rgb565::r5(s) * alpha + rgb565::r5(d) * inv) >> 8;
                const unsigned g = (rgb565::g6(s) * alpha + rgb565::g6(d) * inv) >> 8;
                const unsigned b = (rgb565::b5(s) * alpha + rgb565::b5(d) * inv) >> 8;
                dst.set_rgb(x, y, rgb565::from_channels(r, g, b));
            }
        }
    }
}

void draw(Image& img, const Primitive& p) {
    std::visit(
        [&](const auto& shape) {
            using T = std::decay_t<decltype(shape)>;
            if constexpr (std::is_same_v<T, Line>) draw_line(img, shape, p.color);
            else if constexpr (std::is_same_v<T, Rect>) draw_rect(img, shape, p.color);
            else if constexpr (std::is_same_v<T, Circle>) draw_circle(img, shape, p.color);
            else draw_text(img, shape, p.color);
        },
        p.shape);
}

std::uint16_t get_pixel(const Image& img, int x, int y) { return img.at(x, y); }

void set_pixel(Image& img, int x, int y, std::uint16_t value) {
    if (img.is_gray() && value > 255) fail(ErrorCode::BadValue, "gray pixel value must be within 0..255");
    img.set_at(x, y, value);
}

Stats stats(const Image& img) {
    Stats s;
    s.channels = img.is_gray() ? 1 : 3;
    const std::array<int, 3> bins = img.is_gray() ? std::array<int, 3>{256, 0, 0} : std::array<int, 3>{32, 64, 32};
    std::array<std::uint64_t, 3> sums{};
    for (int c = 0; c < s.channels; ++c) {
        s.histogram[c].assign(static_cast<std::size_t>(bins[c]), 0);
        s.min[c] = bins[c] - 1;
        s.max[c] = 0;
    }
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            int v[3];
            if (img.is_gray()) {
                v[0] = img.gray(x, y);
            } else {
                const std::uint16_t p = img.rgb(x, y);
                v[0] = rgb565::r5(p);
                v[1] = rgb565::g6(p);
                v[2] = rgb565::b5(p);
            }
            for (int c = 0; c < s.channels; ++c) {
                ++s.histogram[c][static_cast<std::size_t>(v[c])];
                s.min[c] = std::min(s.min[c], v[c]);
                s.max[c] = std::max(s.max[c], v[c]);
                sums[c] += static_cast<std::uint64_t>(v[c]);
            }
        }
    }
    const std::uint64_t n = static_cast<std::uint64_t>(img.width()) * img.height();
    for (int c = 0; c < s.channels; ++c) s.mean[c] = static_cast<int>((2 * sums[c] + n) / (2 * n));
    return s;
}

Image median_filter(const Image& img, int ksize, Arena& arena) {
    require_gray(img, "median");
    require_odd_kernel(ksize, "median");
    return neighborhood_filter(img, ksize, arena, [](std::vector<std::uint8_t>& w) {
        const auto mid = w.begin() + static_cast<std::ptrdiff_t>(w.size() / 2);
        std::nth_element(w.begin(), mid, w.end());
        return *mid;
    });
}

Image midpoint_filter(const Image& img, int ksize, Arena& arena) {
    require_gray(img, "midpoint");
    require_odd_kernel(ksize, "midpoint");
    return neighborhood_filter(img, ksize, arena, [](std::vector<std::uint8_t>& w) {
        const auto [lo, hi] = std::minmax_element(w.begin(), w.end());
        return static_cast<std::uint8_t>((*lo + *hi) / 2);
    });
}

double gaussian_sigma(int ksize) noexcept { return 0.3 * ((ksize - 1) * 0.5 - 1.0) + 0.8; }

std::vector<int> gaussian_kernel(int ksize) {
    if (ksize != 3 && ksize != 5 && ksize != 7) {
        fail(ErrorCode::BadKernelSize, "gaussian kernel size must be 3, 5 or 7, got " + std::to_string(ksize));
    }
    const double sigma = gaussian_sigma(ksize);
    const int c = ksize / 2;
    std::vector<double> w(static_cast<std::size_t>(ksize));
    double total = 0.0;
    for (int i = 0; i < ksize; ++i) {
        w[i] = std::exp(-static_cast<double>((i - c) * (i - c)) / (2.0 * sigma * sigma));
        total += w[i];
    }
    std::vector<int> taps(static_cast<std::size_t>(ksize));
    int sum = 0;
    for (int i = 0; i < ksize; ++i) {
        taps[i] = static_cast<int>(std::lround(256.0 * w[i] / total));
        sum += taps[i];
    }
    taps[c] += 256 - sum;  // quantization residue goes to the center tap
    return taps;
}

Image gaussian_blur(const Image& img, int ksize, Arena& arena) {
    require_gray(img, "gaussian");
    const std::vector<int> taps = gaussian_kernel(ksize);
    const int r = ksize / 2;
    const int w = img.width();
    const int h = img.height();
    Image out(arena, w, h, PixelFormat::Grayscale8);
    // Horizontal pass keeps 8 fractional bits; the vertical pass rounds once.
    std::vector<std::uint32_t> tmp(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y) {
        const std::uint8_t* row = img.gray_row(y);
        for (int x = 0; x < w; ++x) {
            std::uint32_t acc = 0;
            for (int k = -r; k <= r; ++k) acc += static_cast<std::uint32_t>(taps[k + r]) * row[clampi(x + k, 0, w - 1)];
            tmp[static_cast<std::size_t>(y) * w + x] = acc;
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::uint32_t acc = 0;
            for (int k = -r; k <= r; ++k) {
                acc += static_cast<std::uint32_t>(taps[k + r]) * tmp[static_cast<std::size_t>(clampi(y + k, 0, h - 1)) * w + x];
            }
            out.set_gray(x, y, static_cast<std::uint8_t>(std::min<std::uint32_t>((acc + 32768u) >> 16, 255u)));
        }
    }
    return out;
}

void hist_eq(Image& img) {
    require_gray(img, "histeq");
    std::array<std::uint64_t, 256> hist{};
    for (std::uint8_t v : img.bytes()) ++hist[v];
    std::array<std::uint64_t, 256> cdf{};
    std::uint64_t run = 0;
    std::uint64_t cdf_min = 0;
    for (int v = 0; v < 256; ++v) {
        run += hist[v];
        cdf[v] = run;
        if (cdf_min == 0 && run != 0) cdf_min = run;
    }
    const std::uint64_t n = run;
    if (cdf_min == n) return;  // single level: leave untouched
    const std::uint64_t denom = n - cdf_min;
    std::array<std::uint8_t, 256> map{};
    for (int v = 0; v < 256; ++v) {
        if (cdf[v] < cdf_min) {
            map[v] = 0;
            continue;
        }
        const std::uint64_t num = 255 * (cdf[v] - cdf_min);
        map[v] = static_cast<std::uint8_t>((2 * num + denom) / (2 * denom));
    }
    for (std::uint8_t& v : img.bytes()) v = map[v];
}

} // namespace virtcam::imgproc
