#include "virtcam/features.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace virtcam::features {

namespace {

constexpr std::array<Point, 9> kLdsp = {{{0, 0}, {0, -2}, {-1, -1}, {1, -1}, {-2, 0}, {2, 0}, {-1, 1}, {1, 1}, {0, 2}}};
constexpr std::array<Point, 5> kSdsp = {{{0, 0}, {0, -1}, {-1, 0}, {1, 0}, {0, 1}}};

/// A template is any rectangle of a gray image; flow uses a sub-block of prev.
struct TemplateView {
    const Image* img;
    int ox, oy, w, h;
    std::int64_t sum = 0;
    std::int64_t sum_sq = 0;

    TemplateView(const Image& im, int x, int y, int tw, int th) : img(&im), ox(x), oy(y), w(tw), h(th) {
        for (int j = 0; j < h; ++j) {
            for (int i = 0; i < w; ++i) {
                const std::int64_t v = at(i, j);
                sum += v;
                sum_sq += v * v;
            }
        }
    }
    int at(int i, int j) const { return img->gray(ox + i, oy + j); }
};

std::int64_t cross(const Image& img, const TemplateView& t, int x, int y) {
    std::int64_t acc = 0;
    for (int j = 0; j < t.h; ++j) {
        const std::uint8_t* row = img.gray_row(y + j) + x;
        const std::uint8_t* trow = t.img->gray_row(t.oy + j) + t.ox;
        for (int i = 0; i < t.w; ++i) acc += static_cast<std::int64_t>(row[i]) * trow[i];
    }
    return acc;
}

double combine(std::int64_t n, std::int64_t sf, std::int64_t sff, std::int64_t st, std::int64_t stt, std::int64_t sft) {
    const std::int64_t vf = n * sff - sf * sf;
    const std::int64_t vt = n * stt - st * st;
    if (vf <= 0 || vt <= 0) return 0.0;
    const double num = static_cast<double>(n * sft - sf * st);
    const double r = num / std::sqrt(static_cast<double>(vf) * static_cast<double>(vt));
    return std::clamp(r, -1.0, 1.0);
}

double direct_score(const Image& img, const TemplateView& t, int x, int y) {
    std::int64_t sf = 0, sff = 0;
    for (int j = 0; j < t.h; ++j) {
        const std::uint8_t* row = img.gray_row(y + j) + x;
        for (int i = 0; i < t.w; ++i) {
            sf += row[i];
            sff += static_cast<std::int64_t>(row[i]) * row[i];
        }
    }
    return combine(static_cast<std::int64_t>(t.w) * t.h, sf, sff, t.sum, t.sum_sq, cross(img, t, x, y));
}

void require_gray(const Image& img, const Image& tmpl) {
    if (!img.is_gray() || !tmpl.is_gray()) fail(ErrorCode::WrongFormat, "template matching requires GRAYSCALE8 images");
}

class DiamondSearch {
public:
    DiamondSearch(const Image& img, const TemplateView& t) : img_(img), t_(t) {}

    bool valid(Point p) const { return p.x >= 0 && p.y >= 0 && p.x + t_.w <= img_.width() && p.y + t_.h <= img_.height(); }

    double score(Point p) {
        const long long key = static_cast<long long>(p.y) * img_.width() + p.x;
        if (auto it = memo_.find(key); it != memo_.end()) return it->second;
        const double s = direct_score(img_, t_, p.x, p.y);
        memo_.emplace(key, s);
        return s;
    }

    /// Best point of a pattern around c; c wins ties, then smallest y, then x.
    template <std::size_t N>
    Point best_of(Point c, const std::array<Point, N>& pattern) {
        Point best = c;
        double best_score = score(c);
        Point runner{};
        double runner_score = -2.0;
        bool have_runner = false;
        for (std::size_t i = 1; i < N; ++i) {
            const Point p{c.x + pattern[i].x, c.y + pattern[i].y};
            if (!valid(p)) continue;
            const double s = score(p);
            if (!have_runner || s > runner_score ||
                (s == runner_score && (p.y < runner.y || (p.y == runner.y && p.x < runner.x)))) {
                runner = p;
                runner_score = s;
                have_runner = true;
            }
        }
        if (have_runner && runner_score > best_score) best = runner;
        return best;
    }

    Point run(Point start) {
        Point c = start;
        for (;;) {
            const Point next = best_of(c, kLdsp);
            if (next == c) break;
            c = next;
        }
        return best_of(c, kSdsp);
    }

    std::size_t evaluations() const { return memo_.size(); }

private:
    const Image& img_;
    const TemplateView& t_;
    std::unordered_map<long long, double> memo_;
};

} // namespace

double ncc_score(const Image& img, const Image& tmpl, int x, int y) {
    require_gray(img, tmpl);
    if (x < 0 || y < 0 || x + tmpl.width() > img.width() || y + tmpl.height() > img.height()) {
        fail(ErrorCode::OutOfBounds, "template placement outside the image");
    }
    return direct_score(img, TemplateView(tmpl, 0, 0, tmpl.width(), tmpl.height()), x, y);
}

NccResult ncc_match_exhaustive(const Image& img, const Image& tmpl, const Roi& roi, Arena& arena) {
    require_gray(img, tmpl);
    if (roi.w < 1 || roi.h < 1 || roi.x < 0 || roi.y < 0 || roi.x + roi.w > img.width() || roi.y + roi.h > img.height()) {
        fail(ErrorCode::BadRoi, "search roi must lie inside the image");
    }
    if (tmpl.width() > roi.w || tmpl.height() > roi.h) {
        fail(ErrorCode::TemplateTooLarge, "template " + std::to_string(tmpl.width()) + "x" + std::to_string(tmpl.height()) +
                                              " does not fit the " + std::to_string(roi.w) + "x" + std::to_string(roi.h) +
                                              " search region");
    }
    const TemplateView t(tmpl, 0, 0, tmpl.width(), tmpl.height());
    const std::int64_t n = static_cast<std::int64_t>(t.w) * t.h;
    IntegralImage ii(arena, img, true);
    NccResult best;
    best.score = -2.0;
    for (int y = roi.y; y + t.h <= roi.y + roi.h; ++y) {
        for (int x = roi.x; x + t.w <= roi.x + roi.w; ++x) {
            const std::int64_t sf = ii.rect_sum_unchecked(x, y, t.w, t.h);
            const std::int64_t sff = static_cast<std::int64_t>(ii.rect_square_sum_unchecked(x, y, t.w, t.h));
            const double s = combine(n, sf, sff, t.sum, t.sum_sq, cross(img, t, x, y));
            ++best.evaluations;
            if (s > best.score) {
                best.score = s;
                best.x = x;
                best.y = y;
            }
        }
    }
    return best;
}

NccResult ncc_match_exhaustive(const Image& img, const Image& tmpl, Arena& arena) {
    return ncc_match_exhaustive(img, tmpl, Roi{0, 0, img.width(), img.height()}, arena);
}

NccResult ncc_match_ds(const Image& img, const Image& tmpl, Point start) {
    require_gray(img, tmpl);
    if (tmpl.width() > img.width() || tmpl.height() > img.height()) {
        fail(ErrorCode::TemplateTooLarge, "template does not fit the image");
    }
    const TemplateView t(tmpl, 0, 0, tmpl.width(), tmpl.height());
    DiamondSearch ds(img, t);
    if (!ds.valid(start)) fail(ErrorCode::OutOfBounds, "diamond search start is not a valid placement");
    const Point p = ds.run(start);
    return {p.x, p.y, ds.score(p), ds.evaluations()};
}

MotionVector optical_flow(const Image& prev, const Image& next, int radius) {
    require_gray(prev, next);
    if (prev.width() != next.width() || prev.height() != next.height()) {
        fail(ErrorCode::DimensionMismatch, "optical flow requires frames of equal size");
    }
    if (radius < 0) fail(ErrorCode::InvalidArgument, "flow radius must be non-negative");
    if (prev.width() <= 2 * radius || prev.height() <= 2 * radius) {
        fail(ErrorCode::ImageTooSmall, "frames must be larger than twice the search radius");
    }
    const TemplateView block(prev, radius, radius, prev.width() - 2 * radius, prev.height() - 2 * radius);
    DiamondSearch ds(next, block);
    Point p = ds.run({radius, radius});
    // Re-check the large diamond around the result; restart if anything beats it.
    for (;;) {
        const Point q = ds.best_of(p, kLdsp);
        if (q == p) break;
        p = ds.run(q);
    }
    return {p.x - radius, p.y - radius, ds.score(p), ds.evaluations()};
}

} // namespace virtcam::features
