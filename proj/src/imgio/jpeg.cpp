// Baseline sequential JPEG encoder (JFIF container, Annex-K tables).

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "virtcam/imgio.hpp"

namespace virtcam::imgio {

namespace {

constexpr std::array<int, 64> kZigzag = {
    0,  1,  8,  16, 9,  2,  3,  10, 17, 24, 32, 25, 18, 11, 4,  5,  12, 19, 26, 33, 40, 48,
    41, 34, 27, 20, 13, 6,  7,  14, 21, 28, 35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23,
    30, 37, 44, 51, 58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63};

constexpr std::array<int, 64> kLumaQuant = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
    14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
    18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

constexpr std::array<int, 64> kChromaQuant = {
    17, 18, 24, 47, 99, 99, 99, 99, 18, 21, 26, 66, 99, 99, 99, 99, 24, 26, 56, 99, 99, 99,
    99, 99, 47, 66, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99};

struct HuffSpec {
    std::array<std::uint8_t, 16> bits;
    std::vector<std::uint8_t> values;
};

const HuffSpec kDcLuma{{0, 1, 5, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0},
                       {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11}};
const HuffSpec kDcChroma{{0, 3, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0},
                         {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11}};
const HuffSpec kAcLuma{
    {0, 2, 1, 3, 3, 2, 4, 3, 5, 5, 4, 4, 0, 0, 1, 0x7d},
    {0x01, 0x02, 0x03, 0x00, 0x04, 0x11, 0x05, 0x12, 0x21, 0x31, 0x41, 0x06, 0x13, 0x51, 0x61,
     0x07, 0x22, 0x71, 0x14, 0x32, 0x81, 0x91, 0xa1, 0x08, 0x23, 0x42, 0xb1, 0xc1, 0x15, 0x52,
     0xd1, 0xf0, 0x24, 0x33, 0x62, 0x72, 0x82, 0x09, 0x0a, 0x16, 0x17, 0x18, 0x19, 0x1a, 0x25,
     0x26, 0x27, 0x28, 0x29, 0x2a, 0x34, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3a, 0x43, 0x44, 0x45,
     0x46, 0x47, 0x48, 0x49, 0x4a, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59, 0x5a, 0x63, 0x64,
     0x65, 0x66, 0x67, 0x68, 0x69, 0x6a, 0x73, 0x74, 0x75, 0x76, 0x77, 0x78, 0x79, 0x7a, 0x83,
     0x84, 0x85, 0x86, 0x87, 0x88, 0x89, 0x8a, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98, 0x99,
     0x9a, 0xa2, 0xa3, 0xa4, 0xa5, 0xa6, 0xa7, 0xa8, 0xa9, 0xaa, 0xb2, 0xb3, 0xb4, 0xb5, 0xb6,
     0xb7, 0xb8, 0xb9, 0xba, 0xc2, 0xc3, 0xc4, 0xc5, 0xc6, 0xc7, 0xc8, 0xc9, 0xca, 0xd2, 0xd3,
     0xd4, 0xd5, 0xd6, 0xd7, 0xd8, 0xd9, 0xda, 0xe1, 0xe2, 0xe3, 0xe4, 0xe5, 0xe6, 0xe7, 0xe8,
     0xe9, 0xea, 0xf1, 0xf2, 0xf3, 0xf4, 0xf5, 0xf6, 0xf7, 0xf8, 0xf9, 0xfa}};
const HuffSpec kAcChroma{
    {0, 2, 1, 2, 4, 4, 3, 4, 7, 5, 4, 4, 0, 1, 2, 0x77},
    {0x00, 0x01, 0x02, 0x03, 0x11, 0x04, 0x05, 0x21, 0x31, 0x06, 0x12, 0x41, 0x51, 0x07, 0x61,
     0x71, 0x13, 0x22, 0x32, 0x81, 0x08, 0x14, 0x42, 0x91, 0xa1, 0xb1, 0xc1, 0x09, 0x23, 0x33,
     0x52, 0xf0, 0x15, 0x62, 0x72, 0xd1, 0x0a, 0x16, 0x24, 0x34, 0xe1, 0x25, 0xf1, 0x17, 0x18,
     0x19, 0x1a, 0x26, 0x27, 0x28, 0x29, 0x2a, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3a, 0x43, 0x44,
     0x45, 0x46, 0x47, 0x48, 0x49, 0x4a, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59, 0x5a, 0x63,
     0x64, 0x65, 0x66, 0x67, 0x68, 0x69, 0x6a, 0x73, 0x74, 0x75, 0x76, 0x77, 0x78, 0x79, 0x7a,
     0x82, 0x83, 0x84, 0x85, 0x86, 0x87, 0x88, 0x89, 0x8a, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97,
     0x98, 0x99, 0x9a, 0xa2, 0xa3, 0xa4, 0xa5, 0xa6, 0xa7, 0xa8, 0xa9, 0xaa, 0xb2, 0xb3, 0xb4,
     0xb5, 0xb6, 0xb7, 0xb8, 0xb9, 0xba, 0xc2, 0xc3, 0xc4, 0xc5, 0xc6, 0xc7, 0xc8, 0xc9, 0xca,
     0xd2, 0xd3, 0xd4, 0xd5, 0xd6, 0xd7, 0xd8, 0xd9, 0xda, 0xe2, 0xe3, 0xe4, 0xe5, 0xe6, 0xe7,
     0xe8, 0xe9, 0xea, 0xf2, 0xf3, 0xf4, 0xf5, 0xf6, 0xf7, 0xf8, 0xf9, 0xfa}};

struct HuffTable {
    std::array<std::uint16_t, 256> code{};
    std::array<std::uint8_t, 256> length{};
};

HuffTable build_table(const HuffSpec& spec) {
    HuffTable t;
    std::uint16_t code = 0;
    std::size_t k = 0;
    for (int len = 1; len <= 16; ++len) {
        for (int i = 0; i < spec.bits[len - 1]; ++i) {
            const std::uint8_t sym = spec.values[k++];
            t.code[sym] = code++;
            t.length[sym] = static_cast<std::uint8_t>(len);
        }
        code = static_cast<std::uint16_t>(code << 1);
    }
    return t;
}

class BitWriter {
public:
    explicit BitWriter(std::vector<std::uint8_t>& out) : out_(out) {}

    void put(std::uint32_t bits, int count) {
        for (int i = count - 1; i >= 0; --i) {
            acc_ = static_cast<std::uint8_t>((acc_ << 1) | ((bits >> i) & 1u));
            if (++fill_ == 8) emit();
        }
    }

    void flush() {
        while (fill_ != 0) {
            acc_ = static_cast<std::uint8_t>((acc_ << 1) | 1u);
            if (++fill_ == 8) emit();
        }
    }

private:
    void emit() {
        out_.push_back(acc_);
        if (acc_ == 0xFF) out_.push_back(0x00);
        acc_ = 0;
        fill_ = 0;
    }

    std::vector<std::uint8_t>& out_;
    std::uint8_t acc_ = 0;
    int fill_ = 0;
};

struct CosTable {
    double c[8][8];
    CosTable() {
        for (int u = 0; u < 8; ++u) {
            const double cu = u == 0 ? std::numbers::sqrt2 / 2.0 : 1.0;
            for (int x = 0; x < 8; ++x) {
                c[u][x] = 0.5 * cu * std::cos((2.0 * x + 1.0) * u * std::numbers::pi / 16.0);
            }
        }
    }
};

const CosTable& cos_table() {
    static const CosTable t;
    return t;
}

// Forward 8x8 DCT on level-shifted samples, quantized into zigzag order.
void fdct_quantize(const double in[64], const std::array<int, 64>& quant, int out_zz[64]) {
    const auto& c = cos_table().c;
    double tmp[64];
    for (int y = 0; y < 8; ++y) {
        for (int u = 0; u < 8; ++u) {
            double s = 0.0;
            for (int x = 0; x < 8; ++x) s += c[u][x] * in[y * 8 + x];
            tmp[y * 8 + u] = s;
        }
    }
    double coef[64];
    for (int u = 0; u < 8; ++u) {
        for (int v = 0; v < 8; ++v) {
            double s = 0.0;
            for (int y = 0; y < 8; ++y) s += c[v][y] * tmp[y * 8 + u];
            coef[v * 8 + u] = s;
        }
    }
    for (int k = 0; k < 64; ++k) {
        const int natural = kZigzag[k];
        out_zz[k] = static_cast<int>(std::lround(coef[natural] / quant[natural]));
    }
}

int magnitude_category(int v) {
    int a = v < 0 ? -v : v;
    int n = 0;
    while (a != 0) {
        ++n;
        a >>= 1;
    }
    return n;
}

std::uint32_t magnitude_bits(int v, int category) {
    if (v >= 0) return static_cast<std::uint32_t>(v);
    return static_cast<std::uint32_t>(v - 1) & ((1u << category) - 1u);
}

void encode_block(BitWriter& bw, const int zz[64], int& prev_dc, const HuffTable& dc, const HuffTable& ac) {
    const int diff = zz[0] - prev_dc;
    prev_dc = zz[0];
    const int dcat = magnitude_category(diff);
    bw.put(dc.code[dcat], dc.length[dcat]);
    if (dcat != 0) bw.put(magnitude_bits(diff, dcat), dcat);

    int run = 0;
    for (int k = 1; k < 64; ++k) {
        if (zz[k] == 0) {
            ++run;
            continue;
        }
        while (run > 15) {
            bw.put(ac.code[0xF0], ac.length[0xF0]);
            run -= 16;
        }
        const int cat = magnitude_category(zz[k]);
        const int sym = (run << 4) | cat;
        bw.put(ac.code[sym], ac.length[sym]);
        bw.put(magnitude_bits(zz[k], cat), cat);
        run = 0;
    }
    if (run > 0) bw.put(ac.code[0x00], ac.length[0x00]);
}

void put_marker(std::vector<std::uint8_t>& out, std::uint8_t marker) {
    out.push_back(0xFF);
    out.push_back(marker);
}

void put_be16(std::vector<std::uint8_t>& out, int v) {
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

void write_dqt(std::vector<std::uint8_t>& out, int id, const std::array<int, 64>& table) {
    put_marker(out, 0xDB);
    put_be16(out, 67);
    out.push_back(static_cast<std::uint8_t>(id));
    for (int k = 0; k < 64; ++k) out.push_back(static_cast<std::uint8_t>(table[kZigzag[k]]));
}

void write_dht(std::vector<std::uint8_t>& out, int cls_id, const HuffSpec& spec) {
    put_marker(out, 0xC4);
    put_be16(out, 3 + 16 + static_cast<int>(spec.values.size()));
    out.push_back(static_cast<std::uint8_t>(cls_id));
    out.insert(out.end(), spec.bits.begin(), spec.bits.end());
    out.insert(out.end(), spec.values.begin(), spec.values.end());
}

std::array<int, 64> scaled_table(const std::array<int, 64>& base, int quality) {
    std::array<int, 64> t{};
    for (int i = 0; i < 64; ++i) t[i] = scale_quant_entry(base[i], quality);
    return t;
}

} // namespace

int scale_quant_entry(int base, int quality) noexcept {
    quality = std::clamp(quality, 1, 100);
    const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
    return std::clamp((base * scale + 50) / 100, 1, 255);
}

std::vector<std::uint8_t> encode_jpeg(const Image& img, const JpegConfig& config) {
    if (config.quality < 1 || config.quality > 100) {
        fail(ErrorCode::InvalidArgument, "JPEG quality must be within 1..100");
    }
    if (img.width() > 65535 || img.height() > 65535) {
        fail(ErrorCode::InvalidArgument, "image too large for baseline JPEG");
    }
    const bool gray = img.is_gray();
    const int w = img.width();
    const int h = img.height();
    const auto qy = scaled_table(kLumaQuant, config.quality);
    const auto qc = scaled_table(kChromaQuant, config.quality);

    std::vector<std::uint8_t> out;
    out.reserve(1024 + static_cast<std::size_t>(w) * h / 4);
    put_marker(out, 0xD8);

    // JFIF APP0
    put_marker(out, 0xE0);
    put_be16(out, 16);
    for (char c : {'J', 'F', 'I', 'F', '\0'}) out.push_back(static_cast<std::uint8_t>(c));
    out.push_back(1);
    out.push_back(1);
    out.push_back(0);
    put_be16(out, 1);
    put_be16(out, 1);
    out.push_back(0);
    out.push_back(0);

    write_dqt(out, 0, qy);
    if (!gray) write_dqt(out, 1, qc);

    put_marker(out, 0xC0);
    put_be16(out, gray ? 11 : 17);
    out.push_back(8);
    put_be16(out, h);
    put_be16(out, w);
    out.push_back(gray ? 1 : 3);
    if (gray) {
        out.insert(out.end(), {1, 0x11, 0});
    } else {
        out.insert(out.end(), {1, 0x22, 0, 2, 0x11, 1, 3, 0x11, 1});
    }

    write_dht(out, 0x00, kDcLuma);
    write_dht(out, 0x10, kAcLuma);
    if (!gray) {
        write_dht(out, 0x01, kDcChroma);
        write_dht(out, 0x11, kAcChroma);
    }

    put_marker(out, 0xDA);
    put_be16(out, gray ? 8 : 12);
    out.push_back(gray ? 1 : 3);
    if (gray) {
        out.insert(out.end(), {1, 0x00});
    } else {
        out.insert(out.end(), {1, 0x00, 2, 0x11, 3, 0x11});
    }
    out.insert(out.end(), {0, 63, 0});

    static const HuffTable dc_l = build_table(kDcLuma);
    static const HuffTable ac_l = build_table(kAcLuma);
    static const HuffTable dc_c = build_table(kDcChroma);
    static const HuffTable ac_c = build_table(kAcChroma);

    BitWriter bw(out);
    double block[64];
    int zz[64];

    if (gray) {
        int prev = 0;
        for (int by = 0; by < h; by += 8) {
            for (int bx = 0; bx < w; bx += 8) {
                for (int y = 0; y < 8; ++y) {
                    const int sy = std::min(by + y, h - 1);
                    for (int x = 0; x < 8; ++x) {
                        const int sx = std::min(bx + x, w - 1);
                        block[y * 8 + x] = static_cast<double>(img.gray(sx, sy)) - 128.0;
                    }
                }
                fdct_quantize(block, qy, zz);
                encode_block(bw, zz, prev, dc_l, ac_l);
            }
        }
    } else {
        int prev_y = 0, prev_cb = 0, prev_cr = 0;
        double ys[16][16], cbs[16][16], crs[16][16];
        for (int my = 0; my < h; my += 16) {
            for (int mx = 0; mx < w; mx += 16) {
                for (int y = 0; y < 16; ++y) {
                    const int sy = std::min(my + y, h - 1);
                    for (int x = 0; x < 16; ++x) {
                        const int sx = std::min(mx + x, w - 1);
                        const std::uint16_t p = img.rgb(sx, sy);
                        const double r = rgb565::r8(p), g = rgb565::g8(p), b = rgb565::b8(p);
                        ys[y][x] = 0.299 * r + 0.587 * g + 0.114 * b - 128.0;
                        cbs[y][x] = -0.168736 * r - 0.331264 * g + 0.5 * b;
                        crs[y][x] = 0.5 * r - 0.418688 * g - 0.081312 * b;
                    }
                }
                for (int q = 0; q < 4; ++q) {
                    const int ox = (q & 1) * 8;
                    const int oy = (q >> 1) * 8;
                    for (int y = 0; y < 8; ++y)
                        for (int x = 0; x < 8; ++x) block[y * 8 + x] = ys[oy + y][ox + x];
                    fdct_quantize(block, qy, zz);
                    encode_block(bw, zz, prev_y, dc_l, ac_l);
                }
                for (int plane = 0; plane < 2; ++plane) {
                    auto& src = plane == 0 ? cbs : crs;
                    for (int y = 0; y < 8; ++y) {
                        for (int x = 0; x < 8; ++x) {
                            block[y * 8 + x] = 0.25 * (src[2 * y][2 * x] + src[2 * y][2 * x + 1] +
                                                       src[2 * y + 1][2 * x] + src[2 * y + 1][2 * x + 1]);
                        }
                    }
                    fdct_quantize(block, qc, zz);
                    encode_block(bw, zz, plane == 0 ? prev_cb : prev_cr, dc_c, ac_c);
                }
            }
        }
    }
    bw.flush();
    put_marker(out, 0xD9);
    return out;
}

} // namespace virtcam::imgio
