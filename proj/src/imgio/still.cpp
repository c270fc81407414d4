#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <string>

#include "virtcam/imgio.hpp"

namespace virtcam::imgio {

namespace {

struct PnmHeader {
    char kind = 0;  // '2', '3', '5', '6'
    int width = 0;
    int height = 0;
    int maxval = 0;
    std::size_t data_offset = 0;
};

class PnmCursor {
public:
    explicit PnmCursor(std::span<const std::uint8_t> b) : bytes_(b) {}

    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            const char c = static_cast<char>(bytes_[pos_]);
            if (c == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    // Header integers; a missing value is a header defect.
    int header_int(const char* what) {
        skip_space_and_comments();
        return number(ErrorCode::MalformedHeader, what);
    }

    // ASCII raster samples; running out is truncation.
    int sample() {
        skip_space_and_comments();
        return number(ErrorCode::TruncatedData, "sample");
    }

    std::size_t pos() const noexcept { return pos_; }
    void advance(std::size_t n) noexcept { pos_ += n; }

private:
    int number(ErrorCode missing, const char* what) {
        if (pos_ >= bytes_.size()) fail(missing, std::string("missing ") + what);
        if (!std::isdigit(bytes_[pos_])) fail(ErrorCode::MalformedHeader, std::string("expected digits for ") + what);
        long v = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            v = v * 10 + (bytes_[pos_] - '0');
            if (v > 1'000'000'000L) fail(ErrorCode::MalformedHeader, std::string(what) + " out of range");
            ++pos_;
        }
        return static_cast<int>(v);
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

PnmHeader parse_pnm_header(std::span<const std::uint8_t> bytes, PnmCursor& cur) {
    PnmHeader h;
    h.kind = static_cast<char>(bytes[1]);
    cur.advance(2);
    h.width = cur.header_int("width");
    h.height = cur.header_int("height");
    h.maxval = cur.header_int("maxval");
    if (h.width < 1 || h.height < 1 || h.width > 65535 || h.height > 65535) {
        fail(ErrorCode::MalformedHeader, "bad dimensions");
    }
    if (h.maxval < 1) fail(ErrorCode::MalformedHeader, "maxval must be >= 1");
    if (h.maxval > 255) fail(ErrorCode::UnsupportedFormat, "16-bit PNM samples are not supported");
    if (h.kind == '5' || h.kind == '6') {
        // Exactly one whitespace byte separates the header from binary data.
        if (cur.pos() >= bytes.size() || !std::isspace(bytes[cur.pos()])) {
            fail(ErrorCode::MalformedHeader, "missing separator before raster");
        }
        cur.advance(1);
    }
    h.data_offset = cur.pos();
    return h;
}

std::uint8_t rescale(int v, int maxval) {
    if (v > maxval) fail(ErrorCode::MalformedHeader, "sample exceeds maxval");
    if (maxval == 255) return static_cast<std::uint8_t>(v);
    return static_cast<std::uint8_t>((v * 255 + maxval / 2) / maxval);
}

std::uint32_t le32(std::span<const std::uint8_t> b, std::size_t at) {
    return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
           (static_cast<std::uint32_t>(b[at + 2]) << 16) | (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

std::uint16_t le16(std::span<const std::uint8_t> b, std::size_t at) {
    return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

void put16(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
}

void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    put16(out, v & 0xFFFF);
    put16(out, v >> 16);
}

struct BmpHeader {
    int width = 0;
    int height = 0;
    std::size_t data_offset = 0;
    std::size_t stride = 0;
};

BmpHeader parse_bmp_header(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 54) fail(ErrorCode::TruncatedData, "BMP header truncated");
    BmpHeader h;
    h.data_offset = le32(bytes, 10);
    const std::uint32_t info_size = le32(bytes, 14);
    if (info_size < 40) fail(ErrorCode::UnsupportedFormat, "only BITMAPINFOHEADER BMPs are supported");
    const auto w = static_cast<std::int32_t>(le32(bytes, 18));
    const auto hgt = static_cast<std::int32_t>(le32(bytes, 22));
    const std::uint16_t planes = le16(bytes, 26);
    const std::uint16_t bpp = le16(bytes, 28);
    const std::uint32_t compression = le32(bytes, 30);
    if (planes != 1) fail(ErrorCode::MalformedHeader, "BMP planes must be 1");
    if (bpp != 24) fail(ErrorCode::UnsupportedFormat, "only 24-bit BMPs are supported");
    if (compression != 0) fail(ErrorCode::UnsupportedFormat, "only BI_RGB BMPs are supported");
    if (hgt < 0) fail(ErrorCode::UnsupportedFormat, "top-down BMPs are not supported");
    if (w < 1 || hgt < 1 || w > 65535 || hgt > 65535) fail(ErrorCode::MalformedHeader, "bad BMP dimensions");
    h.width = w;
    h.height = hgt;
    h.stride = (static_cast<std::size_t>(w) * 3 + 3) & ~std::size_t{3};
    if (h.data_offset < 54) fail(ErrorCode::MalformedHeader, "pixel data offset inside header");
    return h;
}

enum class Kind { Pgm, Ppm, Bmp };

Kind sniff(std::span<const std::uint8_t> bytes) {
    if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '2' || bytes[1] == '5')) return Kind::Pgm;
    if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '3' || bytes[1] == '6')) return Kind::Ppm;
    if (bytes.size() >= 2 && bytes[0] == 'B' && bytes[1] == 'M') return Kind::Bmp;
    fail(ErrorCode::UnsupportedFormat, "unrecognized image magic");
}

} // namespace

ImageInfo read_image_info(std::span<const std::uint8_t> bytes) {
    switch (sniff(bytes)) {
    case Kind::Pgm:
    case Kind::Ppm: {
        PnmCursor cur(bytes);
        const PnmHeader h = parse_pnm_header(bytes, cur);
        return {h.width, h.height,
                (h.kind == '2' || h.kind == '5') ? PixelFormat::Grayscale8 : PixelFormat::Rgb565};
    }
    case Kind::Bmp: {
        const BmpHeader h = parse_bmp_header(bytes);
        return {h.width, h.height, PixelFormat::Rgb565};
    }
    }
    fail(ErrorCode::UnsupportedFormat, "unrecognized image magic");
}

Image read_image(std::span<const std::uint8_t> bytes, Arena& arena) {
    const Kind kind = sniff(bytes);
    if (kind == Kind::Bmp) {
        const BmpHeader h = parse_bmp_header(bytes);
        if (bytes.size() < h.data_offset + h.stride * h.height) {
            fail(ErrorCode::TruncatedData, "BMP raster truncated");
        }
        Image img(arena, h.width, h.height, PixelFormat::Rgb565);
        for (int row = 0; row < h.height; ++row) {
            const std::uint8_t* src = bytes.data() + h.data_offset + h.stride * row;
            const int y = h.height - 1 - row;  // bottom-up
            for (int x = 0; x < h.width; ++x) {
                img.set_rgb(x, y, rgb565::pack(src[3 * x + 2], src[3 * x + 1], src[3 * x]));
            }
        }
        return img;
    }

    PnmCursor cur(bytes);
    const PnmHeader h = parse_pnm_header(bytes, cur);
    const bool gray = (h.kind == '2' || h.kind == '5');
    const bool binary = (h.kind == '5' || h.kind == '6');
    const std::size_t channels = gray ? 1 : 3;
    const std::size_t n = static_cast<std::size_t>(h.width) * h.height * channels;
    if (binary && bytes.size() < h.data_offset + n) {
        fail(ErrorCode::TruncatedData, "PNM raster truncated");
    }
    Image img(arena, h.width, h.height, gray ? PixelFormat::Grayscale8 : PixelFormat::Rgb565);
    std::size_t pos = h.data_offset;
    auto next = [&]() -> std::uint8_t {
        if (binary) return rescale(bytes[pos++], h.maxval);
        return rescale(cur.sample(), h.maxval);
    };
    for (int y = 0; y < h.height; ++y) {
        for (int x = 0; x < h.width; ++x) {
            if (gray) {
                img.set_gray(x, y, next());
            } else {
                const std::uint8_t r = next();
                const std::uint8_t g = next();
                const std::uint8_t b = next();
                img.set_rgb(x, y, rgb565::pack(r, g, b));
            }
        }
    }
    return img;
}

namespace {

void rgb888_at(const Image& img, int x, int y, std::uint8_t& r, std::uint8_t& g, std::uint8_t& b) {
    if (img.is_gray()) {
        r = g = b = img.gray(x, y);
    } else {
        const std::uint16_t p = img.rgb(x, y);
        r = rgb565::r8(p);
        g = rgb565::g8(p);
        b = rgb565::b8(p);
    }
}

void append_ascii(std::vector<std::uint8_t>& out, const std::string& s) {
    out.insert(out.end(), s.begin(), s.end());
}

} // namespace

std::vector<std::uint8_t> encode_pgm(const Image& img) {
    if (!img.is_gray()) fail(ErrorCode::WrongFormat, "PGM output requires a GRAYSCALE8 image");
    std::vector<std::uint8_t> out;
    append_ascii(out, "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n");
    out.insert(out.end(), img.bytes().begin(), img.bytes().end());
    return out;
}

std::vector<std::uint8_t> encode_ppm(const Image& img) {
    std::vector<std::uint8_t> out;
    append_ascii(out, "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n");
    out.reserve(out.size() + static_cast<std::size_t>(img.width()) * img.height() * 3);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            std::uint8_t r, g, b;
            rgb888_at(img, x, y, r, g, b);
            out.push_back(r);
            out.push_back(g);
            out.push_back(b);
        }
    }
    return out;
}

std::vector<std::uint8_t> encode_bmp(const Image& img) {
    const std::size_t stride = (static_cast<std::size_t>(img.width()) * 3 + 3) & ~std::size_t{3};
    const std::size_t raster = stride * img.height();
    std::vector<std::uint8_t> out;
    out.reserve(54 + raster);
    out.push_back('B');
    out.push_back('M');
    put32(out, static_cast<std::uint32_t>(54 + raster));
    put32(out, 0);
    put32(out, 54);
    put32(out, 40);
    put32(out, static_cast<std::uint32_t>(img.width()));
    put32(out, static_cast<std::uint32_t>(img.height()));
    put16(out, 1);
    put16(out, 24);
    put32(out, 0);
    put32(out, static_cast<std::uint32_t>(raster));
    put32(out, 2835);  // 72 dpi
    put32(out, 2835);
    put32(out, 0);
    put32(out, 0);
    for (int row = 0; row < img.height(); ++row) {
        const int y = img.height() - 1 - row;
        std::size_t written = 0;
        for (int x = 0; x < img.width(); ++x) {
            std::uint8_t r, g, b;
            rgb888_at(img, x, y, r, g, b);
            out.push_back(b);
            out.push_back(g);
            out.push_back(r);
            written += 3;
        }
        for (; written < stride; ++written) out.push_back(0);
    }
    return out;
}

std::vector<std::uint8_t> write_image(const Image& img, FileFormat format, const JpegConfig& config) {
    switch (format) {
    case FileFormat::Pgm: return encode_pgm(img);
    case FileFormat::Ppm: return encode_ppm(img);
    case FileFormat::Bmp: return encode_bmp(img);
    case FileFormat::Jpeg: return encode_jpeg(img, config);
    case FileFormat::Gif: {
        GifWriter gif(img.width(), img.height(), false);
        gif.add_frame(img, 0);
        return gif.end();
    }
    }
    fail(ErrorCode::UnsupportedFormat, "unknown output format");
}

FileFormat format_for_extension(std::string_view path) {
    const auto dot = path.rfind('.');
    if (dot == std::string_view::npos) fail(ErrorCode::UnsupportedFormat, "file has no extension");
    std::string ext(path.substr(dot + 1));
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == "pgm") return FileFormat::Pgm;
    if (ext == "ppm") return FileFormat::Ppm;
    if (ext == "bmp") return FileFormat::Bmp;
    if (ext == "jpg" || ext == "jpeg") return FileFormat::Jpeg;
    if (ext == "gif") return FileFormat::Gif;
    fail(ErrorCode::UnsupportedFormat, "unsupported extension ." + ext);
}

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::FileError, "cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::FileError, "cannot create " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCode::FileError, "write failed for " + path);
}

} // namespace virtcam::imgio
