#include "virtcam/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <numbers>

#include "virtcam/imgproc.hpp"

namespace virtcam::features {

std::uint8_t luma(std::uint16_t p) noexcept {
    return static_cast<std::uint8_t>((77 * rgb565::r8(p) + 150 * rgb565::g8(p) + 29 * rgb565::b8(p)) >> 8);
}

Image to_grayscale(const Image& img, Arena& arena) {
    if (img.is_gray()) fail(ErrorCode::WrongFormat, "to_grayscale expects an RGB565 image");
    Image out(arena, img.width(), img.height(), PixelFormat::Grayscale8);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) out.set_gray(x, y, luma(img.rgb(x, y)));
    }
    return out;
}

Image canny(const Image& img, int low, int high, Arena& arena) {
    if (!img.is_gray()) fail(ErrorCode::WrongFormat, "canny requires a GRAYSCALE8 image");
    if (low < 0 || low > high) fail(ErrorCode::BadThresholds, "canny thresholds need 0 <= low <= high");
    const int w = img.width(), h = img.height();
    std::vector<int> mag(static_cast<std::size_t>(w) * h);
    std::vector<std::uint8_t> dir(mag.size());
    Image out(arena, w, h, PixelFormat::Grayscale8);
    {
        const Image blurred = imgproc::gaussian_blur(img, 5, arena);
        auto px = [&](int x, int y) { return static_cast<int>(blurred.gray(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1))); };
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const int gx = (px(x + 1, y - 1) + 2 * px(x + 1, y) + px(x + 1, y + 1)) -
                               (px(x - 1, y - 1) + 2 * px(x - 1, y) + px(x - 1, y + 1));
                const int gy = (px(x - 1, y + 1) + 2 * px(x, y + 1) + px(x + 1, y + 1)) -
                               (px(x - 1, y - 1) + 2 * px(x, y - 1) + px(x + 1, y - 1));
                const std::size_t i = static_cast<std::size_t>(y) * w + x;
                mag[i] = std::abs(gx) + std::abs(gy);
                // tan(22.5 deg) ~ 0.4142
                const int ax = std::abs(gx), ay = std::abs(gy);
                if (ay * 10000 <= ax * 4142) dir[i] = 0;
                else if (ax * 10000 <= ay * 4142) dir[i] = 2;
                else dir[i] = (gx > 0) == (gy > 0) ? 1 : 3;
            }
        }
    }

    static constexpr int kStep[4][2] = {{1, 0}, {1, 1}, {0, 1}, {-1, 1}};
    auto mag_at = [&](int x, int y) { return (x < 0 || y < 0 || x >= w || y >= h) ? 0 : mag[static_cast<std::size_t>(y) * w + x]; };
    std::vector<std::uint8_t> thin(mag.size(), 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            const int m = mag[i];
            if (m < low || m == 0) continue;
            const int sx = kStep[dir[i]][0], sy = kStep[dir[i]][1];
            if (m > mag_at(x - sx, y - sy) && m >= mag_at(x + sx, y + sy)) thin[i] = 1;
        }
    }

    std::deque<std::size_t> queue;
    for (std::size_t i = 0; i < thin.size(); ++i) {
        if (thin[i] && mag[i] >= high) {
            out.bytes()[i] = 255;
            queue.push_back(i);
        }
    }
    while (!queue.empty()) {
        const std::size_t i = queue.front();
        queue.pop_front();
        const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                const int nx = x + dx, ny = y + dy;
                if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                const std::size_t j = static_cast<std::size_t>(ny) * w + nx;
                if (thin[j] && out.bytes()[j] == 0) {
                    out.bytes()[j] = 255;
                    queue.push_back(j);
                }
            }
        }
    }
    return out;
}

std::vector<LineHit> hough_lines(const Image& edges, int threshold, int theta_step, int rho_step) {
    if (!edges.is_gray()) fail(ErrorCode::WrongFormat, "hough_lines requires a GRAYSCALE8 edge map");
    if (theta_step < 1 || theta_step > 180 || rho_step < 1) fail(ErrorCode::InvalidArgument, "bad hough step sizes");
    const int w = edges.width(), h = edges.height();
    const int diag = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(w) * w + static_cast<double>(h) * h)));
    const int nth = (180 + theta_step - 1) / theta_step;
    const int roff = (diag + rho_step - 1) / rho_step;
    const int nr = 2 * roff + 1;
    std::vector<double> cs(nth), sn(nth);
    for (int t = 0; t < nth; ++t) {
        const double a = t * theta_step * std::numbers::pi / 180.0;
        cs[t] = std::cos(a);
        sn[t] = std::sin(a);
    }
    std::vector<int> acc(static_cast<std::size_t>(nth) * nr, 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (edges.gray(x, y) == 0) continue;
            for (int t = 0; t < nth; ++t) {
                const long rho = std::lround(x * cs[t] + y * sn[t]);
                const long idx = std::lround(static_cast<double>(rho) / rho_step) + roff;
                ++acc[static_cast<std::size_t>(t) * nr + idx];
            }
        }
    }
    std::vector<LineHit> hits;
    for (int t = 0; t < nth; ++t) {
        for (int r = 0; r < nr; ++r) {
            const int v = acc[static_cast<std::size_t>(t) * nr + r];
            if (v < threshold || v == 0) continue;
            bool peak = true;
            for (int dt = -1; dt <= 1 && peak; ++dt) {
                for (int dr = -1; dr <= 1; ++dr) {
                    if (!dt && !dr) continue;
                    const int tt = t + dt, rr = r + dr;
                    if (tt < 0 || tt >= nth || rr < 0 || rr >= nr) continue;
                    const int u = acc[static_cast<std::size_t>(tt) * nr + rr];
                    const bool earlier = dt < 0 || (dt == 0 && dr < 0);
                    if (earlier ? u >= v : u > v) {
                        peak = false;
                        break;
                    }
                }
            }
            if (peak) hits.push_back({(r - roff) * rho_step, t * theta_step, v});
        }
    }
    std::sort(hits.begin(), hits.end(), [](const LineHit& a, const LineHit& b) {
        if (a.votes != b.votes) return a.votes > b.votes;
        if (a.theta != b.theta) return a.theta < b.theta;
        return a.rho < b.rho;
    });
    return hits;
}

} // namespace virtcam::features
