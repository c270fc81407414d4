#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <jpeglib.h>
#include <zlib.h>

#include "virtcam/imgproc.hpp"

namespace vt {

std::filesystem::path test_dir() { return VIRTCAM_TEST_DIR; }

std::filesystem::path scratch_dir(const std::string& name) {
    const auto p = std::filesystem::path(VIRTCAM_SCRATCH_DIR) / name;
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

Image random_gray(Arena& arena, int w, int h, std::mt19937_64& rng, int lo, int hi) {
    Image img(arena, w, h, PixelFormat::Grayscale8);
    std::uniform_int_distribution<int> d(lo, hi);
    for (auto& b : img.bytes()) b = static_cast<std::uint8_t>(d(rng));
    return img;
}

Image random_rgb(Arena& arena, int w, int h, std::mt19937_64& rng) {
    Image img(arena, w, h, PixelFormat::Rgb565);
    std::uniform_int_distribution<int> d(0, 0xFFFF);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) img.set_rgb(x, y, static_cast<std::uint16_t>(d(rng)));
    }
    return img;
}

Image constant_gray(Arena& arena, int w, int h, std::uint8_t v) {
    Image img(arena, w, h, PixelFormat::Grayscale8);
    std::fill(img.bytes().begin(), img.bytes().end(), v);
    return img;
}

std::uint64_t brute_rect_sum(const Image& img, int x, int y, int w, int h) {
    std::uint64_t s = 0;
    for (int j = y; j < y + h; ++j) {
        for (int i = x; i < x + w; ++i) s += img.gray(i, j);
    }
    return s;
}

std::uint64_t brute_rect_square_sum(const Image& img, int x, int y, int w, int h) {
    std::uint64_t s = 0;
    for (int j = y; j < y + h; ++j) {
        for (int i = x; i < x + w; ++i) s += static_cast<std::uint64_t>(img.gray(i, j)) * img.gray(i, j);
    }
    return s;
}

std::vector<fx::Detection> brute_haar_raw(const Image& img, const fx::Cascade& c, const fx::HaarParams& p) {
    std::vector<fx::Detection> hits;
    for (const auto& level : fx::haar_pyramid(c, p, img.width(), img.height())) {
        const fx::Cascade& sc = level.cascade;
        const long double area = static_cast<long double>(sc.window_w) * sc.window_h;
        for (int y = 0; y + sc.window_h <= img.height(); y += level.step) {
            for (int x = 0; x + sc.window_w <= img.width(); x += level.step) {
                const long double s = static_cast<long double>(brute_rect_sum(img, x, y, sc.window_w, sc.window_h));
                const long double q = static_cast<long double>(brute_rect_square_sum(img, x, y, sc.window_w, sc.window_h));
                const long double v = area * q - s * s;
                if (v / (area * area) < 1e-4L) continue;
                const long double norm = std::sqrt(v);
                bool ok = true;
                long double margin = 0;
                for (const auto& stage : sc.stages) {
                    long double total = 0;
                    for (const auto& stump : stage.stumps) {
                        long double f = 0;
                        for (const auto& r : stump.rects) {
                            f += static_cast<long double>(r.weight) * brute_rect_sum(img, x + r.x, y + r.y, r.w, r.h);
                        }
                        total += f >= stump.threshold * norm ? stump.pass_value : stump.fail_value;
                    }
                    if (total < stage.threshold) {
                        ok = false;
                        break;
                    }
                    margin += total - stage.threshold;
                }
                if (ok) hits.push_back({x, y, sc.window_w, sc.window_h, static_cast<double>(margin / 65536.0L)});
            }
        }
    }
    return hits;
}

fx::Cascade random_cascade(std::mt19937_64& rng, int window, int stages, int stumps) {
    fx::Cascade c;
    c.window_w = window;
    c.window_h = window;
    std::uniform_int_distribution<int> pos(0, window - 1);
    std::uniform_int_distribution<int> nrects(2, 3);
    std::uniform_real_distribution<double> weight(-2.0, 2.0);
    std::uniform_real_distribution<double> thr(-0.15, 0.15);
    for (int s = 0; s < stages; ++s) {
        fx::Stage st;
        std::int32_t best = 0;
        for (int k = 0; k < stumps; ++k) {
            fx::Stump sp;
            const int n = nrects(rng);
            double weighted_area = 0;
            for (int r = 0; r < n; ++r) {
                fx::HaarRect hr;
                hr.x = pos(rng);
                hr.y = pos(rng);
                hr.w = std::uniform_int_distribution<int>(1, window - hr.x)(rng);
                hr.h = std::uniform_int_distribution<int>(1, window - hr.y)(rng);
                double wv = weight(rng);
                // The last rect cancels the others' area so the feature measures contrast.
                if (r == n - 1) wv = std::clamp(-weighted_area / (hr.w * hr.h), -64.0, 64.0);
                hr.weight = fx::to_fixed(wv);
                weighted_area += fx::from_fixed(hr.weight) * hr.w * hr.h;
                sp.rects.push_back(hr);
            }
            sp.threshold = fx::to_fixed(thr(rng));
            sp.pass_value = fx::to_fixed(1.0);
            sp.fail_value = fx::to_fixed(-1.0);
            best += sp.pass_value;
            st.stumps.push_back(std::move(sp));
        }
        // Require roughly half of the stumps to pass.
        st.threshold = best / 2 - fx::to_fixed(0.5) * (stumps % 2 == 0);
        c.stages.push_back(std::move(st));
    }
    return c;
}

double brute_ncc(const Image& img, const Image& tmpl, int x, int y) {
    const int w = tmpl.width(), h = tmpl.height();
    const double n = static_cast<double>(w) * h;
    double fm = 0, tm = 0;
    for (int j = 0; j < h; ++j) {
        for (int i = 0; i < w; ++i) {
            fm += img.gray(x + i, y + j);
            tm += tmpl.gray(i, j);
        }
    }
    fm /= n;
    tm /= n;
    double num = 0, fv = 0, tv = 0;
    for (int j = 0; j < h; ++j) {
        for (int i = 0; i < w; ++i) {
            const double a = img.gray(x + i, y + j) - fm;
            const double b = tmpl.gray(i, j) - tm;
            num += a * b;
            fv += a * a;
            tv += b * b;
        }
    }
    if (fv <= 1e-9 || tv <= 1e-9) return 0.0;
    return num / std::sqrt(fv * tv);
}

namespace {
// Radius-3 Bresenham circle, clockwise from the top.
constexpr int kCx[16] = {0, 1, 2, 3, 3, 3, 2, 1, 0, -1, -2, -3, -3, -3, -2, -1};
constexpr int kCy[16] = {-3, -3, -2, -1, 0, 1, 2, 3, 3, 3, 2, 1, 0, -1, -2, -3};
} // namespace

bool brute_segment(const Image& img, int x, int y, int t) {
    const int p = img.gray(x, y);
    for (int start = 0; start < 16; ++start) {
        bool bright = true, dark = true;
        for (int k = 0; k < 9; ++k) {
            const int i = (start + k) % 16;
            const int v = img.gray(x + kCx[i], y + kCy[i]);
            bright = bright && v > p + t;
            dark = dark && v < p - t;
        }
        if (bright || dark) return true;
    }
    return false;
}

int brute_fast_score(const Image& img, int x, int y, int t) {
    int best = 0;
    for (int s = t; s <= 255; ++s) {
        if (brute_segment(img, x, y, s)) best = s;
    }
    return best;
}

std::vector<fx::Point> brute_fast(const Image& img, int t, bool nonmax) {
    const int w = img.width(), h = img.height();
    std::vector<int> score(static_cast<std::size_t>(w) * h, -1);
    for (int y = 3; y < h - 3; ++y) {
        for (int x = 3; x < w - 3; ++x) {
            if (brute_segment(img, x, y, t)) score[static_cast<std::size_t>(y) * w + x] = brute_fast_score(img, x, y, t);
        }
    }
    std::vector<fx::Point> out;
    for (int y = 3; y < h - 3; ++y) {
        for (int x = 3; x < w - 3; ++x) {
            const int s = score[static_cast<std::size_t>(y) * w + x];
            if (s < 0) continue;
            bool keep = true;
            if (nonmax) {
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        if ((dx || dy) && score[static_cast<std::size_t>(y + dy) * w + x + dx] > s) keep = false;
                    }
                }
            }
            if (keep) out.push_back({x, y});
        }
    }
    return out;
}

std::vector<fx::Match> brute_match(const std::vector<fx::Keypoint>& a, const std::vector<fx::Keypoint>& b,
                                   int max_distance, int ratio) {
    std::vector<fx::Match> out;
    for (std::size_t i = 0; i < a.size(); ++i) {
        std::vector<std::pair<int, std::size_t>> d;
        for (std::size_t j = 0; j < b.size(); ++j) {
            int bits = 0;
            for (std::size_t k = 0; k < 32; ++k) bits += __builtin_popcount(a[i].descriptor[k] ^ b[j].descriptor[k]);
            d.emplace_back(bits, j);
        }
        if (d.empty()) continue;
        std::sort(d.begin(), d.end());
        const int second = d.size() > 1 ? d[1].first : 257;
        if (d[0].first <= max_distance && d[0].first * 100 <= ratio * second) out.push_back({i, d[0].second, d[0].first});
    }
    return out;
}

std::uint8_t shifted(const Image& img, int x, int y) {
    return img.gray(std::clamp(x, 0, img.width() - 1), std::clamp(y, 0, img.height() - 1));
}

std::vector<double> eye_objective(const Image& img, const fx::Roi& roi, bool prior) {
    struct G {
        int x, y;
        double gx, gy, m;
    };
    std::vector<G> all;
    for (int y = roi.y; y < roi.y + roi.h; ++y) {
        for (int x = roi.x; x < roi.x + roi.w; ++x) {
            const double gx = (shifted(img, x + 1, y) - shifted(img, x - 1, y)) / 2.0;
            const double gy = (shifted(img, x, y + 1) - shifted(img, x, y - 1)) / 2.0;
            all.push_back({x, y, gx, gy, std::sqrt(gx * gx + gy * gy)});
        }
    }
    double mean = 0, var = 0;
    for (const auto& g : all) mean += g.m;
    mean /= static_cast<double>(all.size());
    for (const auto& g : all) var += (g.m - mean) * (g.m - mean);
    const double thr = mean + 0.3 * std::sqrt(var / static_cast<double>(all.size()));
    std::vector<G> keep;
    for (const auto& g : all) {
        if (g.m > 0 && g.m >= thr) keep.push_back(g);
    }
    const std::vector<int> k = imgproc::gaussian_kernel(5);
    std::vector<double> out;
    for (int cy = roi.y; cy < roi.y + roi.h; ++cy) {
        for (int cx = roi.x; cx < roi.x + roi.w; ++cx) {
            double s = 0;
            for (const auto& g : keep) {
                const double dx = g.x - cx, dy = g.y - cy;
                const double len = std::sqrt(dx * dx + dy * dy);
                if (len == 0) continue;
                const double dot = (dx * g.gx + dy * g.gy) / (len * g.m);
                s += dot * dot;
            }
            s /= static_cast<double>(keep.size());
            if (prior) {
                double acc = 0;
                for (int j = -2; j <= 2; ++j) {
                    for (int i = -2; i <= 2; ++i) acc += k[j + 2] * k[i + 2] * shifted(img, cx + i, cy + j);
                }
                s *= 255.0 - acc / 65536.0;
            }
            out.push_back(s);
        }
    }
    return out;
}

fx::MotionVector brute_flow(const Image& prev, const Image& next, int radius) {
    Arena arena(static_cast<std::size_t>(prev.width()) * prev.height() + 64);
    const int bw = prev.width() - 2 * radius, bh = prev.height() - 2 * radius;
    Image block(arena, bw, bh, PixelFormat::Grayscale8);
    for (int y = 0; y < bh; ++y) {
        for (int x = 0; x < bw; ++x) block.set_gray(x, y, prev.gray(x + radius, y + radius));
    }
    fx::MotionVector best{0, 0, -2.0, 0};
    for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
            const double s = brute_ncc(next, block, radius + dx, radius + dy);
            ++best.evaluations;
            if (s > best.response + 1e-12) {
                best.dx = dx;
                best.dy = dy;
                best.response = s;
            }
        }
    }
    return best;
}

std::vector<int> blurred_sobel_l1(const Image& img, Arena& arena) {
    const Image b = imgproc::gaussian_blur(img, 5, arena);
    const int w = b.width(), h = b.height();
    std::vector<int> out(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            int gx = 0, gy = 0;
            static constexpr int kx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
            for (int j = -1; j <= 1; ++j) {
                for (int i = -1; i <= 1; ++i) {
                    const int v = shifted(b, x + i, y + j);
                    gx += kx[j + 1][i + 1] * v;
                    gy += kx[i + 1][j + 1] * v;
                }
            }
            out[static_cast<std::size_t>(y) * w + x] = std::abs(gx) + std::abs(gy);
        }
    }
    return out;
}

namespace {
struct JpegError {
    jpeg_error_mgr mgr;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void on_jpeg_error(j_common_ptr cinfo) {
    auto* e = reinterpret_cast<JpegError*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, e->message);
    std::longjmp(e->jump, 1);
}
} // namespace

Decoded decode_jpeg(std::span<const std::uint8_t> bytes) {
    jpeg_decompress_struct cinfo{};
    JpegError err{};
    cinfo.err = jpeg_std_error(&err.mgr);
    err.mgr.error_exit = on_jpeg_error;
    Decoded out;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw std::runtime_error(std::string("libjpeg: ") + err.message);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);
    jpeg_start_decompress(&cinfo);
    out.width = static_cast<int>(cinfo.output_width);
    out.height = static_cast<int>(cinfo.output_height);
    out.components = cinfo.output_components;
    out.pixels.resize(static_cast<std::size_t>(out.width) * out.height * out.components);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = out.pixels.data() + static_cast<std::size_t>(cinfo.output_scanline) * out.width * out.components;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return out;
}

double psnr(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
    if (a.size() != b.size() || a.empty()) throw std::invalid_argument("psnr size mismatch");
    double se = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - b[i];
        se += d * d;
    }
    const double mse = se / static_cast<double>(a.size());
    if (mse == 0) return 1e9;
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

std::uint32_t zlib_crc32(std::span<const std::uint8_t> bytes) {
    return static_cast<std::uint32_t>(::crc32(0L, bytes.data(), static_cast<uInt>(bytes.size())));
}

int run_refcheck(const std::string& args) {
    const std::string cmd = std::string(VIRTCAM_PYTHON) + " " + (test_dir() / "ref" / "refcheck.py").string() + " " + args;
    const int rc = std::system(cmd.c_str());
    return rc == -1 ? -1 : WEXITSTATUS(rc);
}

ScriptRun run_script(const std::string& source, const std::string& frame_source, std::size_t arena_bytes,
                     std::uint64_t max_steps) {
    Arena arena(arena_bytes);
    sensor::Sensor sensor(sensor::parse_source(frame_source));
    camscript::Environment env;
    env.arena = &arena;
    env.sensor = &sensor;
    camscript::Limits limits;
    limits.max_steps = max_steps;
    ScriptRun out;
    out.arena_before = arena.used();
    out.report = camscript::run_source(source, env, limits);
    out.arena_after = arena.used();
    return out;
}

std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

} // namespace vt
