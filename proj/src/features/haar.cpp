#include "virtcam/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace virtcam::features {

namespace {

int scaled_len(int v, double s) { return static_cast<int>(std::lround(v * s)); }

struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t i) {
        while (parent[i] != i) {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        return i;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

int mean_half_up(long long sum, long long n) { return static_cast<int>((2 * sum + n) / (2 * n)); }

} // namespace

std::vector<ScaledCascade> haar_pyramid(const Cascade& c, const HaarParams& p, int img_w, int img_h) {
    if (!(p.scale_factor > 1.0)) fail(ErrorCode::InvalidArgument, "scale factor must be greater than 1");
    if (p.step < 1) fail(ErrorCode::InvalidArgument, "step must be at least 1");
    std::vector<ScaledCascade> levels;
    for (int k = 0;; ++k) {
        const double s = std::pow(p.scale_factor, k);
        const int sw = scaled_len(c.window_w, s);
        const int sh = scaled_len(c.window_h, s);
        if (sw > img_w || sh > img_h) break;
        ScaledCascade level;
        level.scale = s;
        level.step = std::max(1, scaled_len(p.step, s));
        level.cascade.window_w = sw;
        level.cascade.window_h = sh;
        for (const Stage& stage : c.stages) {
            Stage out{stage.threshold, {}};
            for (const Stump& stump : stage.stumps) {
                Stump st{{}, stump.threshold, stump.pass_value, stump.fail_value};
                for (const HaarRect& r : stump.rects) {
                    HaarRect q;
                    q.x = std::min(scaled_len(r.x, s), sw - 1);
                    q.y = std::min(scaled_len(r.y, s), sh - 1);
                    q.w = std::clamp(scaled_len(r.w, s), 1, sw - q.x);
                    q.h = std::clamp(scaled_len(r.h, s), 1, sh - q.y);
                    q.weight = r.weight;
                    st.rects.push_back(q);
                }
                out.stumps.push_back(std::move(st));
            }
            level.cascade.stages.push_back(std::move(out));
        }
        levels.push_back(std::move(level));
    }
    return levels;
}

bool stump_passes(__int128 feature, std::int32_t threshold, std::uint64_t v) noexcept {
    using u128 = unsigned __int128;
    const u128 t = static_cast<u128>(threshold < 0 ? -static_cast<std::int64_t>(threshold) : threshold);
    const u128 rhs = t * t * v;
    if (threshold <= 0) {
        if (feature >= 0) return true;
        const u128 f = static_cast<u128>(-feature);
        return f * f <= rhs;
    }
    if (feature < 0) return false;
    const u128 f = static_cast<u128>(feature);
    return f * f >= rhs;
}

bool window_is_flat(std::uint64_t v, std::uint64_t area) noexcept {
    return static_cast<unsigned __int128>(v) * 10000 < static_cast<unsigned __int128>(area) * area;
}

std::vector<Detection> haar_scan_raw(const Image& img, const Cascade& c, const HaarParams& p, Arena& arena) {
    if (!img.is_gray()) fail(ErrorCode::WrongFormat, "haar detection requires a GRAYSCALE8 image");
    validate_cascade(c);
    if (img.width() < c.window_w || img.height() < c.window_h) {
        fail(ErrorCode::ImageSmallerThanWindow, "image " + std::to_string(img.width()) + "x" +
                                                    std::to_string(img.height()) + " is smaller than the " +
                                                    std::to_string(c.window_w) + "x" + std::to_string(c.window_h) +
                                                    " window");
    }
    const std::vector<ScaledCascade> levels = haar_pyramid(c, p, img.width(), img.height());
    IntegralImage ii(arena, img, true);
    std::vector<Detection> hits;
    for (const ScaledCascade& level : levels) {
        const Cascade& sc = level.cascade;
        const std::uint64_t area = static_cast<std::uint64_t>(sc.window_w) * sc.window_h;
        for (int y = 0; y + sc.window_h <= img.height(); y += level.step) {
            for (int x = 0; x + sc.window_w <= img.width(); x += level.step) {
                const std::uint64_t s = ii.rect_sum_unchecked(x, y, sc.window_w, sc.window_h);
                const std::uint64_t q = ii.rect_square_sum_unchecked(x, y, sc.window_w, sc.window_h);
                const std::uint64_t v = area * q - s * s;
                if (window_is_flat(v, area)) continue;
                bool accepted = true;
                std::int64_t margin = 0;
                for (const Stage& stage : sc.stages) {
                    std::int64_t total = 0;
                    for (const Stump& stump : stage.stumps) {
                        __int128 f = 0;
                        for (const HaarRect& r : stump.rects) {
                            f += static_cast<__int128>(r.weight) * ii.rect_sum_unchecked(x + r.x, y + r.y, r.w, r.h);
                        }
                        total += stump_passes(f, stump.threshold, v) ? stump.pass_value : stump.fail_value;
                    }
                    if (total < stage.threshold) {
                        accepted = false;
                        break;
                    }
                    margin += total - stage.threshold;
                }
                if (accepted) hits.push_back({x, y, sc.window_w, sc.window_h, static_cast<double>(margin) / 65536.0});
            }
        }
    }
    return hits;
}

double iou(const Detection& a, const Detection& b) noexcept {
    const int ix = std::max(0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
    const int iy = std::max(0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
    const double inter = static_cast<double>(ix) * iy;
    const double uni = static_cast<double>(a.w) * a.h + static_cast<double>(b.w) * b.h - inter;
    return uni > 0 ? inter / uni : 0.0;
}

std::vector<Detection> group_detections(const std::vector<Detection>& raw, int min_neighbors) {
    if (min_neighbors < 0) fail(ErrorCode::InvalidArgument, "min_neighbors must be non-negative");
    UnionFind uf(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        for (std::size_t j = i + 1; j < raw.size(); ++j) {
            if (iou(raw[i], raw[j]) >= 0.5) uf.unite(i, j);
        }
    }
    struct Acc {
        long long x = 0, y = 0, w = 0, h = 0, n = 0;
        double score = 0;
    };
    std::vector<Acc> acc(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        Acc& a = acc[uf.find(i)];
        a.x += raw[i].x;
        a.y += raw[i].y;
        a.w += raw[i].w;
        a.h += raw[i].h;
        a.score += raw[i].score;
        ++a.n;
    }
    std::vector<Detection> out;
    for (const Acc& a : acc) {
        if (a.n == 0 || a.n < min_neighbors) continue;
        out.push_back({mean_half_up(a.x, a.n), mean_half_up(a.y, a.n), mean_half_up(a.w, a.n), mean_half_up(a.h, a.n),
                       a.score / static_cast<double>(a.n)});
    }
    std::sort(out.begin(), out.end(), [](const Detection& l, const Detection& r) {
        if (l.score != r.score) return l.score > r.score;
        if (l.y != r.y) return l.y < r.y;
        return l.x < r.x;
    });
    return out;
}

std::vector<Detection> haar_detect(const Image& img, const Cascade& c, const HaarParams& p, Arena& arena) {
    return group_detections(haar_scan_raw(img, c, p, arena), p.min_neighbors);
}

} // namespace virtcam::features
