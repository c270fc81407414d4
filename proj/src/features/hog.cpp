#include "virtcam/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace virtcam::features {

namespace {

constexpr double kClip = 0.2;
constexpr double kEpsSq = 1e-6;

void l2_normalize(std::vector<double>& v, std::size_t begin, std::size_t end) {
    double ss = 0;
    for (std::size_t i = begin; i < end; ++i) ss += v[i] * v[i];
    const double norm = std::sqrt(ss + kEpsSq);
    for (std::size_t i = begin; i < end; ++i) v[i] /= norm;
}

} // namespace

std::vector<double> hog_descriptor(const Image& img, const Roi& roi) {
    if (!img.is_gray()) fail(ErrorCode::WrongFormat, "HoG requires a GRAYSCALE8 image");
    if (roi.w < 2 * kHogCell || roi.h < 2 * kHogCell || roi.w % kHogCell || roi.h % kHogCell || roi.x < 0 || roi.y < 0 ||
        roi.x + roi.w > img.width() || roi.y + roi.h > img.height()) {
        fail(ErrorCode::BadRoi, "HoG roi must be inside the image, a multiple of 8 and at least 16x16");
    }
    const int cells_x = roi.w / kHogCell, cells_y = roi.h / kHogCell;
    std::vector<double> cells(static_cast<std::size_t>(cells_x) * cells_y * kHogBins, 0.0);
    auto px = [&](int x, int y) {
        return static_cast<int>(img.gray(std::clamp(x, 0, img.width() - 1), std::clamp(y, 0, img.height() - 1)));
    };
    for (int y = 0; y < roi.h; ++y) {
        for (int x = 0; x < roi.w; ++x) {
            const int ix = roi.x + x, iy = roi.y + y;
            const int gx = px(ix + 1, iy) - px(ix - 1, iy);
            const int gy = px(ix, iy + 1) - px(ix, iy - 1);
            if (gx == 0 && gy == 0) continue;
            const double mag = std::hypot(gx, gy);
            double deg = std::atan2(static_cast<double>(gy), static_cast<double>(gx)) * 180.0 / std::numbers::pi;
            if (deg < 0) deg += 180.0;
            if (deg >= 180.0) deg -= 180.0;
            const double pos = deg / 20.0;
            const int b0 = static_cast<int>(std::floor(pos)) % kHogBins;
            const int b1 = (b0 + 1) % kHogBins;
            const double frac = pos - std::floor(pos);
            double* cell = &cells[(static_cast<std::size_t>(y / kHogCell) * cells_x + x / kHogCell) * kHogBins];
            cell[b0] += mag * (1.0 - frac);
            cell[b1] += mag * frac;
        }
    }

    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(cells_x - 1) * (cells_y - 1) * 4 * kHogBins);
    for (int by = 0; by + 1 < cells_y; ++by) {
        for (int bx = 0; bx + 1 < cells_x; ++bx) {
            const std::size_t begin = out.size();
            for (int cy = by; cy < by + 2; ++cy) {
                for (int cx = bx; cx < bx + 2; ++cx) {
                    const double* cell = &cells[(static_cast<std::size_t>(cy) * cells_x + cx) * kHogBins];
                    out.insert(out.end(), cell, cell + kHogBins);
                }
            }
            l2_normalize(out, begin, out.size());
            for (std::size_t i = begin; i < out.size(); ++i) out[i] = std::min(out[i], kClip);
            l2_normalize(out, begin, out.size());
        }
    }
    return out;
}

} // namespace virtcam::features
