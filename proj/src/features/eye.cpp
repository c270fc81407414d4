#include "virtcam/features.hpp"

#include <algorithm>
#include <cmath>

#include "virtcam/imgproc.hpp"

namespace virtcam::features {

namespace {

struct Grad {
    int x, y;
    double gx, gy;  // unit length
};

int px(const Image& img, int x, int y) {
    return img.gray(std::clamp(x, 0, img.width() - 1), std::clamp(y, 0, img.height() - 1));
}

} // namespace

Point find_eye_center(const Image& img, const Roi& roi, bool darkness_prior) {
    if (!img.is_gray()) fail(ErrorCode::WrongFormat, "find_eye_center requires a GRAYSCALE8 image");
    if (roi.w < 3 || roi.h < 3 || roi.x < 0 || roi.y < 0 || roi.x + roi.w > img.width() || roi.y + roi.h > img.height()) {
        fail(ErrorCode::OutOfBounds, "eye roi must lie inside the image and be at least 3x3");
    }

    std::vector<double> mags;
    std::vector<Grad> raw;
    mags.reserve(static_cast<std::size_t>(roi.w) * roi.h);
    for (int y = roi.y; y < roi.y + roi.h; ++y) {
        for (int x = roi.x; x < roi.x + roi.w; ++x) {
            const double gx = (px(img, x + 1, y) - px(img, x - 1, y)) / 2.0;
            const double gy = (px(img, x, y + 1) - px(img, x, y - 1)) / 2.0;
            mags.push_back(std::hypot(gx, gy));
            raw.push_back({x, y, gx, gy});
        }
    }
    double mean = 0;
    for (double m : mags) mean += m;
    mean /= static_cast<double>(mags.size());
    double var = 0;
    for (double m : mags) var += (m - mean) * (m - mean);
    const double threshold = mean + 0.3 * std::sqrt(var / static_cast<double>(mags.size()));

    std::vector<Grad> grads;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (mags[i] > 0 && mags[i] >= threshold) grads.push_back({raw[i].x, raw[i].y, raw[i].gx / mags[i], raw[i].gy / mags[i]});
    }
    if (grads.empty()) fail(ErrorCode::DegenerateRoi, "no gradients above threshold in eye roi");

    const std::vector<int> taps = imgproc::gaussian_kernel(5);
    auto smoothed = [&](int cx, int cy) {
        long acc = 0;
        for (int j = -2; j <= 2; ++j) {
            for (int i = -2; i <= 2; ++i) acc += static_cast<long>(taps[j + 2]) * taps[i + 2] * px(img, cx + i, cy + j);
        }
        return static_cast<double>(acc) / 65536.0;
    };

    Point best{roi.x, roi.y};
    double best_score = -1.0;
    for (int cy = roi.y; cy < roi.y + roi.h; ++cy) {
        for (int cx = roi.x; cx < roi.x + roi.w; ++cx) {
            double sum = 0;
            for (const Grad& g : grads) {
                const double dx = g.x - cx;
                const double dy = g.y - cy;
                const double len = std::hypot(dx, dy);
                if (len == 0) continue;
                const double dot = (dx * g.gx + dy * g.gy) / len;
                sum += dot * dot;
            }
            double score = sum / static_cast<double>(grads.size());
            if (darkness_prior) score *= 255.0 - smoothed(cx, cy);
            if (score > best_score) {
                best_score = score;
                best = {cx, cy};
            }
        }
    }
    return best;
}

} // namespace virtcam::features
