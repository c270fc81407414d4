#include "virtcam/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <random>

namespace virtcam::features {

namespace {

constexpr std::array<Point, 16> kCircle = {{
    {0, -3}, {1, -3}, {2, -2}, {3, -1}, {3, 0}, {3, 1}, {2, 2}, {1, 3},
    {0, 3}, {-1, 3}, {-2, 2}, {-3, 1}, {-3, 0}, {-3, -1}, {-2, -2}, {-1, -3},
}};

constexpr int kArc = 9;
constexpr std::uint32_t kPatternSeed = 0x12345678u;
constexpr double kPatternSigma = 3.0;  // variance 15^2 / 25
constexpr int kBoxRadius = 4;          // 9x9 box

class Gaussian {
public:
    explicit Gaussian(std::uint32_t seed) : gen_(seed) {}

    double next() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = (static_cast<double>(gen_()) + 0.5) / 4294967296.0;
        const double u2 = (static_cast<double>(gen_()) + 0.5) / 4294967296.0;
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
        has_spare_ = true;
        return r * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

std::array<OrbPair, 256> make_pattern() {
    Gaussian g(kPatternSeed);
    auto point = [&](int& x, int& y) {
        do {
            x = static_cast<int>(std::lround(kPatternSigma * g.next()));
            y = static_cast<int>(std::lround(kPatternSigma * g.next()));
        } while (x * x + y * y > kOrbPatchRadius * kOrbPatchRadius);
    };
    std::array<OrbPair, 256> pattern{};
    for (OrbPair& p : pattern) {
        point(p.x1, p.y1);
        point(p.x2, p.y2);
    }
    return pattern;
}

// 9x9 box sums with replicate borders; sums compare the same way means do.
std::vector<std::uint32_t> box_sums(const Image& img) {
    const int w = img.width(), h = img.height();
    std::vector<std::uint32_t> horiz(static_cast<std::size_t>(w) * h), out(horiz.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::uint32_t s = 0;
            for (int k = -kBoxRadius; k <= kBoxRadius; ++k) s += img.gray(std::clamp(x + k, 0, w - 1), y);
            horiz[static_cast<std::size_t>(y) * w + x] = s;
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::uint32_t s = 0;
            for (int k = -kBoxRadius; k <= kBoxRadius; ++k) s += horiz[static_cast<std::size_t>(std::clamp(y + k, 0, h - 1)) * w + x];
            out[static_cast<std::size_t>(y) * w + x] = s;
        }
    }
    return out;
}

} // namespace

const std::array<Point, 16>& fast_circle() noexcept { return kCircle; }

bool fast_segment_test(const Image& img, int x, int y, int t) noexcept {
    const int p = img.gray(x, y);
    int state[16];
    for (int i = 0; i < 16; ++i) {
        const int v = img.gray(x + kCircle[i].x, y + kCircle[i].y);
        state[i] = v > p + t ? 1 : (v < p - t ? -1 : 0);
    }
    for (int sign : {1, -1}) {
        int run = 0;
        for (int i = 0; i < 32; ++i) {
            run = state[i & 15] == sign ? run + 1 : 0;
            if (run >= kArc) return true;
        }
    }
    return false;
}

int fast_score(const Image& img, int x, int y, int t) noexcept {
    if (!fast_segment_test(img, x, y, t)) return 0;
    int lo = t, hi = 256;
    while (hi - lo > 1) {
        const int mid = (lo + hi) / 2;
        if (fast_segment_test(img, x, y, mid)) lo = mid; else hi = mid;
    }
    return lo;
}

std::vector<Keypoint> fast_detect(const Image& img, int threshold, bool nonmax) {
    if (!img.is_gray()) fail(ErrorCode::WrongFormat, "FAST requires a GRAYSCALE8 image");
    if (threshold < 0 || threshold > 255) fail(ErrorCode::InvalidArgument, "FAST threshold must be within 0..255");
    if (img.width() < 7 || img.height() < 7) fail(ErrorCode::ImageTooSmall, "FAST requires at least 7x7 pixels");
    const int w = img.width(), h = img.height();
    std::vector<int> scores(static_cast<std::size_t>(w) * h, 0);
    for (int y = 3; y < h - 3; ++y) {
        for (int x = 3; x < w - 3; ++x) scores[static_cast<std::size_t>(y) * w + x] = fast_score(img, x, y, threshold);
    }
    std::vector<Keypoint> out;
    for (int y = 3; y < h - 3; ++y) {
        for (int x = 3; x < w - 3; ++x) {
            const int s = scores[static_cast<std::size_t>(y) * w + x];
            if (s == 0 && !fast_segment_test(img, x, y, threshold)) continue;
            if (nonmax) {
                bool keep = true;
                for (int dy = -1; dy <= 1 && keep; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        if ((dx || dy) && scores[static_cast<std::size_t>(y + dy) * w + x + dx] > s) {
                            keep = false;
                            break;
                        }
                    }
                }
                if (!keep) continue;
            }
            Keypoint k;
            k.x = x;
            k.y = y;
            k.score = s;
            out.push_back(k);
        }
    }
    return out;
}

const std::array<OrbPair, 256>& orb_pattern() {
    static const std::array<OrbPair, 256> pattern = make_pattern();
    return pattern;
}

double orb_orientation(const Image& img, int x, int y) noexcept {
    long long m10 = 0, m01 = 0;
    for (int dy = -kOrbPatchRadius; dy <= kOrbPatchRadius; ++dy) {
        for (int dx = -kOrbPatchRadius; dx <= kOrbPatchRadius; ++dx) {
            if (dx * dx + dy * dy > kOrbPatchRadius * kOrbPatchRadius) continue;
            const int v = img.gray(x + dx, y + dy);
            m10 += static_cast<long long>(dx) * v;
            m01 += static_cast<long long>(dy) * v;
        }
    }
    double a = std::atan2(static_cast<double>(m01), static_cast<double>(m10));
    if (a < 0) a += 2.0 * std::numbers::pi;
    if (a >= 2.0 * std::numbers::pi) a = 0.0;
    return a;
}

OrbResult orb_describe(const Image& img, const std::vector<Keypoint>& keypoints) {
    if (!img.is_gray()) fail(ErrorCode::WrongFormat, "ORB requires a GRAYSCALE8 image");
    OrbResult result;
    const int w = img.width(), h = img.height();
    std::vector<std::uint32_t> box;
    const auto& pattern = orb_pattern();
    for (const Keypoint& in : keypoints) {
        if (in.x < kOrbBorder || in.y < kOrbBorder || in.x > w - 1 - kOrbBorder || in.y > h - 1 - kOrbBorder) {
            ++result.dropped;
            continue;
        }
        if (box.empty()) box = box_sums(img);
        Keypoint k = in;
        k.angle = orb_orientation(img, k.x, k.y);
        const double c = std::cos(k.angle), s = std::sin(k.angle);
        auto sample = [&](int px, int py) {
            const int rx = static_cast<int>(std::lround(px * c - py * s));
            const int ry = static_cast<int>(std::lround(px * s + py * c));
            return box[static_cast<std::size_t>(k.y + ry) * w + (k.x + rx)];
        };
        k.descriptor.fill(0);
        for (std::size_t i = 0; i < pattern.size(); ++i) {
            const OrbPair& p = pattern[i];
            if (sample(p.x1, p.y1) < sample(p.x2, p.y2)) k.descriptor[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
        }
        k.has_descriptor = true;
        result.keypoints.push_back(k);
    }
    return result;
}

int hamming(const Descriptor& a, const Descriptor& b) noexcept {
    int d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += std::popcount(static_cast<unsigned>(a[i] ^ b[i]));
    return d;
}

std::vector<Match> match_descriptors(const std::vector<Keypoint>& a, const std::vector<Keypoint>& b, int max_distance,
                                     int ratio) {
    for (const auto* set : {&a, &b}) {
        for (const Keypoint& k : *set) {
            if (!k.has_descriptor) fail(ErrorCode::MissingDescriptors, "keypoints must be described before matching");
        }
    }
    std::vector<Match> out;
    for (std::size_t i = 0; i < a.size(); ++i) {
        int best = -1, second = -1;
        std::size_t best_j = 0;
        for (std::size_t j = 0; j < b.size(); ++j) {
            const int d = hamming(a[i].descriptor, b[j].descriptor);
            if (best < 0 || d < best) {
                second = best;
                best = d;
                best_j = j;
            } else if (second < 0 || d < second) {
                second = d;
            }
        }
        if (best < 0 || best > max_distance) continue;
        if (second >= 0 && best * 100 > ratio * second) continue;
        out.push_back({i, best_j, best});
    }
    return out;
}

} // namespace virtcam::features
