#include "checks.hpp"

#include <cmath>

#include "virtcam/imgproc.hpp"

using namespace vt;
namespace ip = virtcam::imgproc;

namespace {

Image from_rows(Arena& a, const std::vector<std::vector<int>>& rows) {
    Image img(a, static_cast<int>(rows[0].size()), static_cast<int>(rows.size()), PixelFormat::Grayscale8);
    for (std::size_t y = 0; y < rows.size(); ++y) {
        for (std::size_t x = 0; x < rows[y].size(); ++x) img.set_gray(static_cast<int>(x), static_cast<int>(y), static_cast<std::uint8_t>(rows[y][x]));
    }
    return img;
}

int count_nonzero(const Image& img) {
    int n = 0;
    for (auto v : img.bytes()) n += v != 0;
    return n;
}

std::vector<int> neighbourhood(const Image& img, int x, int y, int k) {
    std::vector<int> v;
    for (int j = -k / 2; j <= k / 2; ++j) {
        for (int i = -k / 2; i <= k / 2; ++i) v.push_back(shifted(img, x + i, y + j));
    }
    return v;
}

} // namespace

TEST_SUITE("imgproc") {

TEST_CASE("crop") {
    Arena a;
    std::mt19937_64 rng(1);
    const Image img = random_gray(a, 4, 4, rng);
    const Image all = ip::crop(img, 0, 0, 4, 4, a);
    CHECK(same_pixels(all, img));
    Image four = constant_gray(a, 4, 4, 0);
    four.set_gray(2, 3, 9);
    const Image one = ip::crop(four, 2, 3, 1, 1, a);
    CHECK(one.width() == 1);
    CHECK(one.gray(0, 0) == 9);
    CHECK_CODE(ip::crop(four, 2, 2, 3, 1, a), ErrorCode::OutOfBounds);
    CHECK_CODE(ip::crop(four, 0, 0, 0, 1, a), ErrorCode::OutOfBounds);
}

TEST_CASE("scale nearest, identity and bilinear half-pixel centres") {
    Arena a;
    const Image src = from_rows(a, {{0, 255}, {255, 0}});
    const Image up = ip::scale(src, 4, 4, ip::ScaleMethod::Nearest, a);
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 4; ++x) CHECK(up.gray(x, y) == src.gray(x / 2, y / 2));
    }
    std::mt19937_64 rng(2);
    const Image r = random_gray(a, 7, 5, rng);
    CHECK(same_pixels(ip::scale(r, 7, 5, ip::ScaleMethod::Nearest, a), r));
    CHECK(same_pixels(ip::scale(r, 7, 5, ip::ScaleMethod::Bilinear, a), r));
    const Image row = from_rows(a, {{0, 255}});
    const Image b = ip::scale(row, 4, 1, ip::ScaleMethod::Bilinear, a);
    // Centres map to -0.25, 0.25, 0.75, 1.25 in the source, clamped at the edges.
    CHECK(b.gray(0, 0) == 0);
    CHECK(b.gray(1, 0) == 64);
    CHECK(b.gray(2, 0) == 191);
    CHECK(b.gray(3, 0) == 255);
    CHECK_CODE(ip::scale(row, 0, 1, ip::ScaleMethod::Nearest, a), ErrorCode::InvalidArgument);
}

TEST_CASE("blend") {
    Arena a;
    Image dst = constant_gray(a, 3, 3, 0);
    const Image src = constant_gray(a, 3, 3, 255);
    ip::blend(dst, src, 0);
    CHECK(dst.gray(1, 1) == 0);
    ip::blend(dst, src, 128);
    CHECK(dst.gray(1, 1) == 127);
    ip::blend(dst, src, 256);
    CHECK(same_pixels(dst, src));
    const Image small = constant_gray(a, 2, 3, 0);
    CHECK_CODE(ip::blend(dst, small, 10), ErrorCode::DimensionMismatch);
    CHECK_CODE(ip::blend(dst, src, 257), ErrorCode::InvalidArgument);
}

TEST_CASE("blend RGB565 per channel") {
    Arena a;
    Image dst(a, 1, 1, PixelFormat::Rgb565);
    Image src(a, 1, 1, PixelFormat::Rgb565);
    src.set_rgb(0, 0, 0xFFFF);
    ip::blend(dst, src, 128);
    CHECK(dst.rgb(0, 0) == rgb565::from_channels(15, 31, 15));
}

TEST_CASE("draw primitives") {
    Arena a;
    Image img = constant_gray(a, 4, 4, 0);
    ip::draw(img, {ip::Line{0, 0, 3, 0}, 255});
    for (int x = 0; x < 4; ++x) CHECK(img.gray(x, 0) == 255);
    CHECK(count_nonzero(img) == 4);

    Image r = constant_gray(a, 4, 4, 0);
    ip::draw(r, {ip::Rect{1, 1, 2, 2, true}, 255});
    CHECK(count_nonzero(r) == 4);
    CHECK(r.gray(1, 1) == 255);
    CHECK(r.gray(2, 2) == 255);

    Image c = constant_gray(a, 4, 4, 0);
    ip::draw(c, {ip::Circle{2, 2, 0, false}, 255});
    CHECK(count_nonzero(c) == 1);
    CHECK(c.gray(2, 2) == 255);

    Image off = constant_gray(a, 4, 4, 0);
    ip::draw(off, {ip::Line{-10, -10, -5, -20}, 255});
    ip::draw(off, {ip::Rect{10, 10, 5, 5, true}, 255});
    ip::draw(off, {ip::Text{50, 0, "x"}, 255});
    CHECK(count_nonzero(off) == 0);
}

TEST_CASE("Bresenham diagonal and clipped line") {
    Arena a;
    Image img = constant_gray(a, 8, 8, 0);
    ip::draw(img, {ip::Line{-2, -2, 9, 9}, 200});
    for (int i = 0; i < 8; ++i) CHECK(img.gray(i, i) == 200);
    CHECK(count_nonzero(img) == 8);
}

TEST_CASE("rectangle outline and midpoint circle") {
    Arena a;
    Image img = constant_gray(a, 10, 10, 0);
    ip::draw(img, {ip::Rect{1, 1, 4, 3, false}, 255});
    CHECK(count_nonzero(img) == 10);  // 2*4 + 2*3 - 4
    Image c = constant_gray(a, 21, 21, 0);
    ip::draw(c, {ip::Circle{10, 10, 5, false}, 255});
    CHECK(c.gray(15, 10) == 255);
    CHECK(c.gray(10, 5) == 255);
    CHECK(c.gray(10, 10) == 0);
    Image f = constant_gray(a, 21, 21, 0);
    ip::draw(f, {ip::Circle{10, 10, 5, true}, 255});
    CHECK(f.gray(10, 10) == 255);
    // Filled disk contains every outline pixel.
    for (int y = 0; y < 21; ++y) {
        for (int x = 0; x < 21; ++x) {
            if (c.gray(x, y)) CHECK(f.gray(x, y) == 255);
        }
    }
}

TEST_CASE("text uses the 8x8 font with an 8 px advance") {
    Arena a;
    Image img = constant_gray(a, 24, 8, 0);
    ip::draw(img, {ip::Text{0, 0, "AB"}, 255});
    for (int ch = 0; ch < 2; ++ch) {
        const auto& g = ip::glyph("AB"[ch]);
        for (int y = 0; y < 8; ++y) {
            for (int x = 0; x < 8; ++x) CHECK((img.gray(ch * 8 + x, y) != 0) == (((g[y] >> x) & 1) != 0));
        }
    }
    for (int y = 0; y < 8; ++y) {
        for (int x = 16; x < 24; ++x) CHECK(img.gray(x, y) == 0);
    }
    CHECK(count_nonzero(img) > 10);
}

TEST_CASE("property: drawing is idempotent and commutes with crop") {
    Arena a(1 << 20);
    std::mt19937_64 rng(4);
    for (int n = 0; n < 100; ++n) {
        const int kind = static_cast<int>(rng() % 4);
        auto c = [&](int lo, int hi) { return lo + static_cast<int>(rng() % static_cast<unsigned>(hi - lo + 1)); };
        ip::Primitive p;
        p.color = static_cast<std::uint16_t>(c(1, 255));
        // Keep geometry inside [8, 40) so it sits fully inside the crop below.
        switch (kind) {
        case 0: p.shape = ip::Line{c(8, 39), c(8, 39), c(8, 39), c(8, 39)}; break;
        case 1: p.shape = ip::Rect{c(8, 20), c(8, 20), c(1, 19), c(1, 19), rng() % 2 == 0}; break;
        case 2: p.shape = ip::Circle{c(18, 29), c(18, 29), c(0, 10), rng() % 2 == 0}; break;
        default: p.shape = ip::Text{c(8, 16), c(8, 31), "Hi!"}; break;
        }
        const Image base = random_gray(a, 48, 48, rng);
        Image once = clone(base, a);
        ip::draw(once, p);
        Image twice = clone(once, a);
        ip::draw(twice, p);
        REQUIRE(same_pixels(once, twice));

        const Image cropped_after = ip::crop(once, 8, 8, 32, 32, a);
        Image cropped_first = ip::crop(base, 8, 8, 32, 32, a);
        ip::Primitive q = p;
        std::visit([](auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, ip::Line>) { s.x0 -= 8; s.y0 -= 8; s.x1 -= 8; s.y1 -= 8; }
            else if constexpr (std::is_same_v<T, ip::Circle>) { s.cx -= 8; s.cy -= 8; }
            else { s.x -= 8; s.y -= 8; }
        }, q.shape);
        ip::draw(cropped_first, q);
        REQUIRE(same_pixels(cropped_after, cropped_first));
    }
}

TEST_CASE("pixel access and stats") {
    Arena a;
    Image img = constant_gray(a, 5, 4, 7);
    ip::set_pixel(img, 4, 3, 7);
    CHECK(ip::get_pixel(img, 4, 3) == 7);
    CHECK_CODE(ip::get_pixel(img, 5, 0), ErrorCode::OutOfBounds);
    const ip::Stats s = ip::stats(img);
    CHECK(s.channels == 1);
    CHECK(s.min[0] == 7);
    CHECK(s.max[0] == 7);
    CHECK(s.mean[0] == 7);
    CHECK(s.histogram[0].size() == 256);
    CHECK(s.histogram[0][7] == 20);

    std::mt19937_64 rng(8);
    for (int n = 0; n < 20; ++n) {
        const Image r = random_gray(a, 13, 11, rng);
        long long sum = 0;
        int lo = 255, hi = 0;
        for (auto v : r.bytes()) {
            sum += v;
            lo = std::min<int>(lo, v);
            hi = std::max<int>(hi, v);
        }
        const ip::Stats t = ip::stats(r);
        CHECK(t.mean[0] == static_cast<int>(std::floor(static_cast<double>(sum) / 143.0 + 0.5)));
        CHECK(t.min[0] == lo);
        CHECK(t.max[0] == hi);
    }
}

TEST_CASE("RGB565 stats use 32/64/32 channel bins") {
    Arena a;
    Image img(a, 2, 1, PixelFormat::Rgb565);
    img.set_rgb(0, 0, rgb565::from_channels(31, 63, 0));
    img.set_rgb(1, 0, rgb565::from_channels(0, 0, 31));
    const ip::Stats s = ip::stats(img);
    CHECK(s.channels == 3);
    CHECK(s.histogram[0].size() == 32);
    CHECK(s.histogram[1].size() == 64);
    CHECK(s.histogram[2].size() == 32);
    CHECK(s.max[1] == 63);
    CHECK(s.mean[0] == 16);  // 15.5 rounds up
}

TEST_CASE("median filter") {
    Arena a;
    const Image c = constant_gray(a, 6, 6, 42);
    CHECK(same_pixels(ip::median_filter(c, 3, a), c));
    Image imp = constant_gray(a, 5, 5, 0);
    imp.set_gray(2, 2, 255);
    CHECK(count_nonzero(ip::median_filter(imp, 3, a)) == 0);
    CHECK_CODE(ip::median_filter(c, 4, a), ErrorCode::BadKernelSize);
    CHECK_CODE(ip::median_filter(c, 1, a), ErrorCode::BadKernelSize);
    Image rgb(a, 4, 4, PixelFormat::Rgb565);
    CHECK_CODE(ip::median_filter(rgb, 3, a), ErrorCode::WrongFormat);

    std::mt19937_64 rng(12);
    for (int k : {3, 5}) {
        const Image r = random_gray(a, 16, 16, rng);
        const Image m = ip::median_filter(r, k, a);
        for (int y = 0; y < 16; ++y) {
            for (int x = 0; x < 16; ++x) {
                auto v = neighbourhood(r, x, y, k);
                std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
                REQUIRE(m.gray(x, y) == v[v.size() / 2]);
            }
        }
    }
}

TEST_CASE("midpoint filter") {
    Arena a;
    const Image c = constant_gray(a, 6, 6, 9);
    CHECK(same_pixels(ip::midpoint_filter(c, 3, a), c));
    Image imp = constant_gray(a, 5, 5, 0);
    imp.set_gray(2, 2, 255);
    CHECK(ip::midpoint_filter(imp, 3, a).gray(2, 2) == 127);
    std::mt19937_64 rng(13);
    const Image r = random_gray(a, 16, 16, rng);
    const Image m = ip::midpoint_filter(r, 3, a);
    for (int y = 0; y < 16; ++y) {
        for (int x = 0; x < 16; ++x) {
            const auto v = neighbourhood(r, x, y, 3);
            const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
            REQUIRE(m.gray(x, y) == (*lo + *hi) / 2);
        }
    }
}

TEST_CASE("gaussian kernel quantisation") {
    for (int k : {3, 5, 7}) {
        const double sigma = 0.3 * ((k - 1) * 0.5 - 1) + 0.8;
        CHECK(ip::gaussian_sigma(k) == doctest::Approx(sigma));
        const auto taps = ip::gaussian_kernel(k);
        REQUIRE(taps.size() == static_cast<std::size_t>(k));
        int sum = 0;
        double total = 0;
        for (int i = 0; i < k; ++i) total += std::exp(-(i - k / 2) * (i - k / 2) / (2 * sigma * sigma));
        for (int i = 0; i < k; ++i) {
            sum += taps[i];
            const double ideal = 256.0 * std::exp(-(i - k / 2) * (i - k / 2) / (2 * sigma * sigma)) / total;
            CHECK(std::abs(taps[i] - ideal) <= 1.5);
            CHECK(taps[i] == taps[k - 1 - i]);
        }
        CHECK(sum == 256);
    }
    CHECK_CODE(ip::gaussian_kernel(9), ErrorCode::BadKernelSize);
}

TEST_CASE("gaussian blur: constants and impulse response") {
    Arena a;
    const Image c = constant_gray(a, 9, 9, 200);
    for (int k : {3, 5, 7}) CHECK(same_pixels(ip::gaussian_blur(c, k, a), c));
    for (int k : {3, 5, 7}) {
        Image imp = constant_gray(a, 11, 11, 0);
        imp.set_gray(5, 5, 255);
        const Image out = ip::gaussian_blur(imp, k, a);
        const auto taps = ip::gaussian_kernel(k);
        for (int y = 0; y < 11; ++y) {
            for (int x = 0; x < 11; ++x) {
                const int dx = x - 5 + k / 2, dy = y - 5 + k / 2;
                const int expect = (dx < 0 || dy < 0 || dx >= k || dy >= k) ? 0 : (taps[dx] * taps[dy] * 255 + 32768) >> 16;
                REQUIRE(out.gray(x, y) == expect);
            }
        }
    }
}

TEST_CASE("property: filters preserve shape and format") {
    Arena a(1 << 20);
    std::mt19937_64 rng(14);
    for (int n = 0; n < 10; ++n) {
        const Image r = random_gray(a, 5 + n, 9, rng);
        for (int k : {3, 5}) {
            const Image m = ip::median_filter(r, k, a);
            const Image p = ip::midpoint_filter(r, k, a);
            const Image g = ip::gaussian_blur(r, k, a);
            for (const Image* o : {&m, &p, &g}) {
                CHECK(o->width() == r.width());
                CHECK(o->height() == r.height());
                CHECK(o->is_gray());
            }
        }
    }
}

TEST_CASE("hist_eq: formula oracle, constant images, monotonicity") {
    Arena a;
    Image c = constant_gray(a, 4, 4, 77);
    ip::hist_eq(c);
    CHECK(c.gray(0, 0) == 77);

    Image two = constant_gray(a, 4, 4, 0);
    for (int y = 2; y < 4; ++y) {
        for (int x = 0; x < 4; ++x) two.set_gray(x, y, 255);
    }
    ip::hist_eq(two);
    // cdf(0) is itself cdf_min, so the lower level maps to 0.
    CHECK(two.gray(0, 0) == 0);
    CHECK(two.gray(0, 3) == 255);

    std::mt19937_64 rng(15);
    for (int n = 0; n < 20; ++n) {
        Image r = random_gray(a, 17, 9, rng, 30, 140);
        std::array<long, 256> hist{};
        for (auto v : r.bytes()) ++hist[v];
        std::array<long, 256> cdf{};
        long run = 0, cmin = 0;
        for (int v = 0; v < 256; ++v) {
            run += hist[v];
            cdf[v] = run;
            if (!cmin && run) cmin = run;
        }
        const Image before = clone(r, a);
        ip::hist_eq(r);
        for (int i = 0; i < 17 * 9; ++i) {
            const int v = before.bytes()[i];
            const double expect = 255.0 * static_cast<double>(cdf[v] - cmin) / static_cast<double>(run - cmin);
            REQUIRE(r.bytes()[i] == static_cast<int>(std::floor(expect + 0.5)));
        }
        for (int i = 0; i < 17 * 9; ++i) {
            for (int j = 0; j < 17 * 9; j += 7) {
                if (before.bytes()[i] <= before.bytes()[j]) REQUIRE(r.bytes()[i] <= r.bytes()[j]);
            }
        }
    }
    Image rgb(a, 2, 2, PixelFormat::Rgb565);
    CHECK_CODE(ip::hist_eq(rgb), ErrorCode::WrongFormat);
}

}
