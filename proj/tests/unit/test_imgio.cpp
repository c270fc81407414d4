#include "checks.hpp"

#include <cstring>

#include "virtcam/imgio.hpp"

using namespace vt;
namespace io = virtcam::imgio;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

Image gradient(Arena& a, int w, int h) {
    Image img(a, w, h, PixelFormat::Grayscale8);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) img.set_gray(x, y, static_cast<std::uint8_t>(x * 255 / (w - 1)));
    }
    return img;
}

std::uint32_t u32_at(const std::vector<std::uint8_t>& b, std::size_t off) {
    std::uint32_t v;
    std::memcpy(&v, b.data() + off, 4);
    return v;
}

std::size_t find_tag(const std::vector<std::uint8_t>& b, const char* tag) {
    for (std::size_t i = 0; i + 4 <= b.size(); ++i) {
        if (std::memcmp(b.data() + i, tag, 4) == 0) return i;
    }
    return std::string::npos;
}

} // namespace

TEST_SUITE("imgio") {

TEST_CASE("P5 decode") {
    Arena a;
    auto data = bytes_of("P5 2 2 255\n");
    for (int v : {0, 64, 128, 255}) data.push_back(static_cast<std::uint8_t>(v));
    const Image img = io::read_image(data, a);
    CHECK(img.format() == PixelFormat::Grayscale8);
    CHECK(img.gray(0, 0) == 0);
    CHECK(img.gray(1, 0) == 64);
    CHECK(img.gray(0, 1) == 128);
    CHECK(img.gray(1, 1) == 255);
}

TEST_CASE("P6 red packs to 0xF800; ASCII variants and comments") {
    Arena a;
    auto p6 = bytes_of("P6\n# comment\n1 1\n255\n");
    p6.insert(p6.end(), {255, 0, 0});
    const Image red = io::read_image(p6, a);
    CHECK(red.format() == PixelFormat::Rgb565);
    CHECK(red.rgb(0, 0) == 0xF800);
    const Image p2 = io::read_image(bytes_of("P2 2 1 255 7 9"), a);
    CHECK(p2.gray(1, 0) == 9);
    const Image p3 = io::read_image(bytes_of("P3 1 1 255 0 255 0"), a);
    CHECK(p3.rgb(0, 0) == 0x07E0);
}

TEST_CASE("decode errors") {
    Arena a;
    CHECK_CODE(io::read_image(bytes_of("GIF89a"), a), ErrorCode::UnsupportedFormat);
    CHECK_CODE(io::read_image(bytes_of("P5 2 x 255\n"), a), ErrorCode::MalformedHeader);
    CHECK_CODE(io::read_image(bytes_of("P5 2 2 255\n\x01"), a), ErrorCode::TruncatedData);
    CHECK_CODE(io::read_image(bytes_of("BM"), a), ErrorCode::TruncatedData);
    CHECK_CODE(io::read_image(bytes_of("P5 700 700 255\n"), a), ErrorCode::TruncatedData);
}

TEST_CASE("header info") {
    const auto info = io::read_image_info(bytes_of("P6 12 34 255\n"));
    CHECK(info.width == 12);
    CHECK(info.height == 34);
    CHECK(info.format == PixelFormat::Rgb565);
}

TEST_CASE("PGM needs grayscale; PPM/BMP expand gray") {
    Arena a;
    Image rgb(a, 2, 2, PixelFormat::Rgb565);
    CHECK_CODE(io::encode_pgm(rgb), ErrorCode::WrongFormat);
    Image g = constant_gray(a, 3, 2, 200);
    const Image back = io::read_image(io::encode_ppm(g), a);
    CHECK(back.rgb(0, 0) == rgb565::pack(200, 200, 200));
    const Image back2 = io::read_image(io::encode_bmp(g), a);
    CHECK(back2.rgb(2, 1) == rgb565::pack(200, 200, 200));
}

TEST_CASE("property: lossless round trips on seeded images") {
    std::mt19937_64 rng(3);
    Arena a(2 * 1024 * 1024);
    for (int n = 0; n < 50; ++n) {
        const int w = 1 + static_cast<int>(rng() % 37), h = 1 + static_cast<int>(rng() % 23);
        const Image g = random_gray(a, w, h, rng);
        const Image c = random_rgb(a, w, h, rng);
        const Image g2 = io::read_image(io::write_image(g, io::FileFormat::Pgm), a);
        const Image c2 = io::read_image(io::write_image(c, io::FileFormat::Ppm), a);
        const Image c3 = io::read_image(io::write_image(c, io::FileFormat::Bmp), a);
        REQUIRE(same_pixels(g, g2));
        REQUIRE(same_pixels(c, c2));
        REQUIRE(same_pixels(c, c3));
    }
}

TEST_CASE("BMP layout: 24-bit, bottom-up, padded rows") {
    Arena a;
    Image img(a, 3, 2, PixelFormat::Rgb565);
    img.set_rgb(0, 0, 0xF800);  // top-left red
    const auto bmp = io::encode_bmp(img);
    CHECK(bmp[0] == 'B');
    CHECK(bmp[1] == 'M');
    CHECK(u32_at(bmp, 2) == bmp.size());
    const std::uint16_t bpp = static_cast<std::uint16_t>(bmp[28] | (bmp[29] << 8));
    CHECK(bpp == 24);
    const std::uint32_t offset = u32_at(bmp, 10);
    // Row stride is 3*3 = 9 padded to 12; the top row is stored second, in BGR order.
    CHECK(bmp.size() == offset + 24);
    CHECK(bmp[offset + 12 + 2] == 255);
    CHECK(bmp[offset + 12 + 0] == 0);
}

TEST_CASE("quantisation scaling") {
    CHECK(io::scale_quant_entry(16, 50) == 16);
    CHECK(io::scale_quant_entry(16, 100) == 1);
    CHECK(io::scale_quant_entry(16, 1) == 255);
    CHECK(io::scale_quant_entry(99, 90) == 20);  // (99*20 + 50) / 100
    CHECK(io::scale_quant_entry(16, 25) == 32);
}

TEST_CASE("JPEG framing: SOI/EOI, JFIF, stuffed entropy data") {
    Arena a;
    std::mt19937_64 rng(5);
    const Image img = random_gray(a, 33, 17, rng);
    const auto j = io::encode_jpeg(img, {75});
    REQUIRE(j.size() > 4);
    CHECK(j[0] == 0xFF);
    CHECK(j[1] == 0xD8);
    CHECK(j[j.size() - 2] == 0xFF);
    CHECK(j[j.size() - 1] == 0xD9);
    CHECK(find_tag(j, "JFIF") != std::string::npos);
    // Walk marker segments up to SOS, then check the scan.
    std::size_t p = 2;
    while (p + 4 < j.size() && !(j[p] == 0xFF && j[p + 1] == 0xDA)) {
        REQUIRE(j[p] == 0xFF);
        p += 2 + ((j[p + 2] << 8) | j[p + 3]);
    }
    REQUIRE(j[p + 1] == 0xDA);
    p += 2 + ((j[p + 2] << 8) | j[p + 3]);
    for (; p < j.size() - 2; ++p) {
        if (j[p] == 0xFF) {
            REQUIRE(j[p + 1] == 0x00);
            ++p;
        }
    }
}

TEST_CASE("JPEG quality range") {
    Arena a;
    const Image img = constant_gray(a, 8, 8, 1);
    CHECK_CODE(io::encode_jpeg(img, {0}), ErrorCode::InvalidArgument);
    CHECK_CODE(io::encode_jpeg(img, {101}), ErrorCode::InvalidArgument);
}

TEST_CASE("JPEG gradient decodes with PSNR >= 35 dB at quality 90") {
    Arena a;
    const Image img = gradient(a, 64, 64);
    const Decoded d = decode_jpeg(io::encode_jpeg(img, {90}));
    REQUIRE(d.width == 64);
    REQUIRE(d.height == 64);
    REQUIRE(d.components == 1);
    CHECK(psnr(d.pixels, img.bytes()) >= 35.0);
}

TEST_CASE("JPEG of a constant image stays within +/-2") {
    Arena a;
    const Image img = constant_gray(a, 40, 24, 128);
    for (int q : {1, 10, 50, 90, 100}) {
        const Decoded d = decode_jpeg(io::encode_jpeg(img, {q}));
        for (auto v : d.pixels) REQUIRE(std::abs(static_cast<int>(v) - 128) <= 2);
    }
}

TEST_CASE("property: JPEG PSNR is non-decreasing in quality") {
    Arena a;
    std::mt19937_64 rng(9);
    Image img = gradient(a, 64, 48);
    for (int y = 0; y < 48; ++y) {
        for (int x = 0; x < 64; ++x) {
            img.set_gray(x, y, static_cast<std::uint8_t>(std::clamp<int>(img.gray(x, y) + static_cast<int>(rng() % 41) - 20, 0, 255)));
        }
    }
    double last = 0;
    for (int q : {25, 50, 75, 95}) {
        const double p = psnr(decode_jpeg(io::encode_jpeg(img, {q})).pixels, img.bytes());
        CHECK(p >= last);
        last = p;
    }
}

TEST_CASE("colour JPEG decodes to RGB of the right size") {
    Arena a;
    Image img(a, 37, 21, PixelFormat::Rgb565);
    for (int y = 0; y < 21; ++y) {
        for (int x = 0; x < 37; ++x) img.set_rgb(x, y, rgb565::pack(static_cast<std::uint8_t>(x * 7), static_cast<std::uint8_t>(y * 12), 90));
    }
    const Decoded d = decode_jpeg(io::encode_jpeg(img, {90}));
    CHECK(d.width == 37);
    CHECK(d.height == 21);
    CHECK(d.components == 3);
    std::vector<std::uint8_t> ref;
    for (int y = 0; y < 21; ++y) {
        for (int x = 0; x < 37; ++x) {
            const auto p = img.rgb(x, y);
            ref.insert(ref.end(), {rgb565::r8(p), rgb565::g8(p), rgb565::b8(p)});
        }
    }
    CHECK(psnr(d.pixels, ref) >= 28.0);
}

TEST_CASE("GIF palettes") {
    const auto& g = io::gray_palette();
    CHECK(g.rgb[0][0] == 0);
    CHECK(g.rgb[255][2] == 255);
    CHECK(io::color_index(0xFFFF) == io::color_index(rgb565::pack(255, 255, 255)));
    const auto& c = io::color_palette();
    const auto i = io::color_index(0xF800);
    CHECK(c.rgb[i][0] == 255);
    CHECK(c.rgb[i][1] == 0);
}

TEST_CASE("GIF: single black frame and a black/white pair") {
    Arena a;
    const auto dir = scratch_dir("imgio_gif");
    {
        io::GifWriter w(16, 8, false);
        w.add_frame(constant_gray(a, 16, 8, 0), 0);
        const auto bytes = w.end();
        CHECK(std::memcmp(bytes.data(), "GIF89a", 6) == 0);
        CHECK(bytes.back() == 0x3B);
        io::write_file((dir / "one.gif").string(), bytes);
    }
    {
        io::GifWriter w(16, 8, true);
        w.add_frame(constant_gray(a, 16, 8, 0), 10);
        w.add_frame(constant_gray(a, 16, 8, 255), 10);
        CHECK(w.frame_count() == 2);
        io::write_file((dir / "two.gif").string(), w.end());
    }
    CHECK(run_refcheck("gif " + (dir / "two.gif").string() + " 2 100 0 255") == 0);
    CHECK(run_refcheck("gif " + (dir / "one.gif").string() + " 1 0 0") == 0);
}

TEST_CASE("GIF rejects mismatched frames") {
    Arena a;
    io::GifWriter w(16, 8, false);
    CHECK_CODE(w.add_frame(constant_gray(a, 8, 8, 0), 0), ErrorCode::DimensionMismatch);
}

TEST_CASE("GIF LZW stream starts with a clear code and ends with end-of-information") {
    const std::vector<std::uint8_t> idx(100, 3);
    const auto code = io::gif_lzw_encode(idx, 8);
    REQUIRE(!code.empty());
    // First 9-bit code is the clear code 256: low byte 0x00, bit 8 set in the next byte.
    CHECK(code[0] == 0x00);
    CHECK((code[1] & 1) == 1);
}

TEST_CASE("MJPEG AVI header fields and reference parse") {
    Arena a;
    const auto dir = scratch_dir("imgio_avi");
    io::MjpegWriter w(32, 24, 10);
    for (int i = 0; i < 3; ++i) w.add_frame(constant_gray(a, 32, 24, static_cast<std::uint8_t>(40 * i)));
    const auto avi = w.end();
    CHECK(std::memcmp(avi.data(), "RIFF", 4) == 0);
    CHECK(std::memcmp(avi.data() + 8, "AVI ", 4) == 0);
    CHECK(u32_at(avi, 4) + 8 == avi.size());
    const auto avih = find_tag(avi, "avih");
    REQUIRE(avih != std::string::npos);
    CHECK(u32_at(avi, avih + 8) == 100000);      // microseconds per frame
    CHECK(u32_at(avi, avih + 8 + 16) == 3);      // total frames
    const auto strh = find_tag(avi, "strh");
    REQUIRE(strh != std::string::npos);
    CHECK(std::memcmp(avi.data() + strh + 8, "vids", 4) == 0);
    CHECK(std::memcmp(avi.data() + strh + 12, "MJPG", 4) == 0);
    CHECK(u32_at(avi, strh + 8 + 24) / u32_at(avi, strh + 8 + 20) == 10);
    CHECK(u32_at(avi, strh + 8 + 32) == 3);
    CHECK(find_tag(avi, "idx1") != std::string::npos);
    io::write_file((dir / "three.avi").string(), avi);
    CHECK(run_refcheck("avi " + (dir / "three.avi").string() + " 3 10 32 24") == 0);
}

TEST_CASE("MJPEG zero frames") {
    io::MjpegWriter w(32, 24, 10);
    const auto avi = w.end();
    const auto avih = find_tag(avi, "avih");
    REQUIRE(avih != std::string::npos);
    CHECK(u32_at(avi, avih + 8 + 16) == 0);
    CHECK(u32_at(avi, 4) + 8 == avi.size());
}

TEST_CASE("MJPEG rejects mismatched frames") {
    Arena a;
    io::MjpegWriter w(32, 24, 10);
    CHECK_CODE(w.add_frame(constant_gray(a, 24, 24, 0)), ErrorCode::DimensionMismatch);
}

TEST_CASE("extensions select codecs") {
    CHECK(io::format_for_extension("a.PGM") == io::FileFormat::Pgm);
    CHECK(io::format_for_extension("x/y.jpeg") == io::FileFormat::Jpeg);
    CHECK(io::format_for_extension("y.jpg") == io::FileFormat::Jpeg);
    CHECK(io::format_for_extension("z.gif") == io::FileFormat::Gif);
    CHECK(io::format_for_extension("z.bmp") == io::FileFormat::Bmp);
    CHECK_CODE(io::format_for_extension("z.png"), ErrorCode::UnsupportedFormat);
}

TEST_CASE("file errors") {
    CHECK_CODE(io::read_file("/nonexistent/dir/file.pgm"), ErrorCode::FileError);
}

}
