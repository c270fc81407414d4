// GIF89a and MJPEG/AVI writers.

#include <algorithm>
#include <limits>
#include <unordered_map>

#include "virtcam/imgio.hpp"

namespace virtcam::imgio {

namespace {

void le16(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
}

void le32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    le16(out, v & 0xFFFF);
    le16(out, v >> 16);
}

void fourcc(std::vector<std::uint8_t>& out, const char* cc) {
    out.insert(out.end(), cc, cc + 4);
}

void patch32(std::vector<std::uint8_t>& out, std::size_t at, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out[at + i] = static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF);
}

GifPalette make_gray_palette() {
    GifPalette p{};
    for (int i = 0; i < 256; ++i) p.rgb[i][0] = p.rgb[i][1] = p.rgb[i][2] = static_cast<std::uint8_t>(i);
    return p;
}

GifPalette make_color_palette() {
    GifPalette p{};
    int i = 0;
    for (int r = 0; r < 6; ++r)
        for (int g = 0; g < 6; ++g)
            for (int b = 0; b < 6; ++b, ++i) {
                p.rgb[i][0] = static_cast<std::uint8_t>(r * 51);
                p.rgb[i][1] = static_cast<std::uint8_t>(g * 51);
                p.rgb[i][2] = static_cast<std::uint8_t>(b * 51);
            }
    for (int k = 0; k < 40; ++k, ++i) {
        const auto v = static_cast<std::uint8_t>(((k + 1) * 255 + 20) / 41);
        p.rgb[i][0] = p.rgb[i][1] = p.rgb[i][2] = v;
    }
    return p;
}

class LzwBitSink {
public:
    explicit LzwBitSink(std::vector<std::uint8_t>& out) : out_(out) {}
    void put(unsigned code, int size) {
        acc_ |= static_cast<std::uint32_t>(code) << fill_;
        fill_ += size;
        while (fill_ >= 8) {
            out_.push_back(static_cast<std::uint8_t>(acc_ & 0xFF));
            acc_ >>= 8;
            fill_ -= 8;
        }
    }
    void flush() {
        if (fill_ > 0) out_.push_back(static_cast<std::uint8_t>(acc_ & 0xFF));
        acc_ = 0;
        fill_ = 0;
    }

private:
    std::vector<std::uint8_t>& out_;
    std::uint32_t acc_ = 0;
    int fill_ = 0;
};

void append_sub_blocks(std::vector<std::uint8_t>& out, const std::vector<std::uint8_t>& data) {
    for (std::size_t i = 0; i < data.size(); i += 255) {
        const std::size_t n = std::min<std::size_t>(255, data.size() - i);
        out.push_back(static_cast<std::uint8_t>(n));
        out.insert(out.end(), data.begin() + static_cast<std::ptrdiff_t>(i),
                   data.begin() + static_cast<std::ptrdiff_t>(i + n));
    }
    out.push_back(0);
}

void append_palette(std::vector<std::uint8_t>& out, const GifPalette& p) {
    for (const auto& e : p.rgb) out.insert(out.end(), e, e + 3);
}

} // namespace

const GifPalette& gray_palette() {
    static const GifPalette p = make_gray_palette();
    return p;
}

const GifPalette& color_palette() {
    static const GifPalette p = make_color_palette();
    return p;
}

std::uint8_t color_index(std::uint16_t px) noexcept {
    static const std::vector<std::uint8_t> lut = [] {
        std::vector<std::uint8_t> t(65536);
        const GifPalette& p = color_palette();
        for (std::uint32_t v = 0; v < 65536; ++v) {
            const int r = rgb565::r8(static_cast<std::uint16_t>(v));
            const int g = rgb565::g8(static_cast<std::uint16_t>(v));
            const int b = rgb565::b8(static_cast<std::uint16_t>(v));
            int best = 0;
            int best_d = std::numeric_limits<int>::max();
            for (int i = 0; i < 256; ++i) {
                const int dr = r - p.rgb[i][0], dg = g - p.rgb[i][1], db = b - p.rgb[i][2];
                const int d = dr * dr + dg * dg + db * db;
                if (d < best_d) {
                    best_d = d;
                    best = i;
                }
            }
            t[v] = static_cast<std::uint8_t>(best);
        }
        return t;
    }();
    return lut[px];
}

std::vector<std::uint8_t> gif_lzw_encode(std::span<const std::uint8_t> indices, int min_code_size) {
    std::vector<std::uint8_t> out;
    LzwBitSink sink(out);
    const unsigned clear = 1u << min_code_size;
    const unsigned eoi = clear + 1;
    int code_size = min_code_size + 1;
    unsigned next = clear + 2;
    std::unordered_map<std::uint32_t, std::uint16_t> dict;
    dict.reserve(8192);

    sink.put(clear, code_size);
    if (indices.empty()) {
        sink.put(eoi, code_size);
        sink.flush();
        return out;
    }
    unsigned prefix = indices[0];
    for (std::size_t i = 1; i < indices.size(); ++i) {
        const std::uint8_t c = indices[i];
        const std::uint32_t key = (prefix << 8) | c;
        const auto it = dict.find(key);
        if (it != dict.end()) {
            prefix = it->second;
            continue;
        }
        sink.put(prefix, code_size);
        if (next < 4096) {
            if (next == (1u << code_size)) ++code_size;
            dict.emplace(key, static_cast<std::uint16_t>(next++));
        } else {
            sink.put(clear, code_size);
            dict.clear();
            code_size = min_code_size + 1;
            next = clear + 2;
        }
        prefix = c;
    }
    sink.put(prefix, code_size);
    sink.put(eoi, code_size);
    sink.flush();
    return out;
}

GifWriter::GifWriter(int width, int height, bool loop) : width_(width), height_(height), loop_(loop) {
    if (width < 1 || height < 1 || width > 65535 || height > 65535) {
        fail(ErrorCode::InvalidArgument, "GIF dimensions out of range");
    }
}

void GifWriter::write_header(PixelFormat first_format) {
    global_format_ = first_format;
    const char sig[] = "GIF89a";
    out_.insert(out_.end(), sig, sig + 6);
    le16(out_, static_cast<std::uint32_t>(width_));
    le16(out_, static_cast<std::uint32_t>(height_));
    out_.push_back(0xF7);  // global table, 8-bit color resolution, 256 entries
    out_.push_back(0);
    out_.push_back(0);
    append_palette(out_, first_format == PixelFormat::Grayscale8 ? gray_palette() : color_palette());
    if (loop_) {
        out_.insert(out_.end(), {0x21, 0xFF, 0x0B});
        const char app[] = "NETSCAPE2.0";
        out_.insert(out_.end(), app, app + 11);
        out_.insert(out_.end(), {0x03, 0x01, 0x00, 0x00, 0x00});
    }
    header_written_ = true;
}

void GifWriter::add_frame(const Image& img, int delay_cs) {
    if (img.width() != width_ || img.height() != height_) {
        fail(ErrorCode::DimensionMismatch, "GIF frame is " + std::to_string(img.width()) + "x" +
                                               std::to_string(img.height()) + ", stream is " +
                                               std::to_string(width_) + "x" + std::to_string(height_));
    }
    if (delay_cs < 0 || delay_cs > 65535) fail(ErrorCode::InvalidArgument, "GIF delay out of range");
    if (!header_written_) write_header(img.format());

    // Graphic control extension: disposal "do not dispose", no transparency.
    out_.insert(out_.end(), {0x21, 0xF9, 0x04, 0x04});
    le16(out_, static_cast<std::uint32_t>(delay_cs));
    out_.insert(out_.end(), {0x00, 0x00});

    const bool local = img.format() != global_format_;
    out_.push_back(0x2C);
    le16(out_, 0);
    le16(out_, 0);
    le16(out_, static_cast<std::uint32_t>(width_));
    le16(out_, static_cast<std::uint32_t>(height_));
    out_.push_back(local ? 0x87 : 0x00);
    if (local) append_palette(out_, img.is_gray() ? gray_palette() : color_palette());

    std::vector<std::uint8_t> indices(static_cast<std::size_t>(width_) * height_);
    std::size_t k = 0;
    for (int y = 0; y < height_; ++y) {
        for (int x = 0; x < width_; ++x) {
            indices[k++] = img.is_gray() ? img.gray(x, y) : color_index(img.rgb(x, y));
        }
    }
    out_.push_back(8);
    append_sub_blocks(out_, gif_lzw_encode(indices, 8));
    ++frames_;
}

std::vector<std::uint8_t> GifWriter::end() {
    if (!header_written_) write_header(PixelFormat::Grayscale8);
    out_.push_back(0x3B);
    return std::move(out_);
}

// MJPEG in AVI -------------------------------------------------------------

MjpegWriter::MjpegWriter(int width, int height, int fps) : width_(width), height_(height), fps_(fps) {
    if (width < 1 || height < 1) fail(ErrorCode::InvalidArgument, "AVI dimensions must be >= 1");
    if (fps < 1) fail(ErrorCode::InvalidArgument, "AVI frame rate must be >= 1");
}

void MjpegWriter::add_frame(const Image& img, const JpegConfig& config) {
    if (img.width() != width_ || img.height() != height_) {
        fail(ErrorCode::DimensionMismatch, "AVI frame is " + std::to_string(img.width()) + "x" +
                                               std::to_string(img.height()) + ", stream is " +
                                               std::to_string(width_) + "x" + std::to_string(height_));
    }
    frames_.push_back(encode_jpeg(img, config));
}

std::vector<std::uint8_t> MjpegWriter::end() {
    const auto n = static_cast<std::uint32_t>(frames_.size());
    std::uint32_t max_frame = 0;
    for (const auto& f : frames_) max_frame = std::max<std::uint32_t>(max_frame, static_cast<std::uint32_t>(f.size()));

    std::vector<std::uint8_t> out;
    fourcc(out, "RIFF");
    const std::size_t riff_size_at = out.size();
    le32(out, 0);
    fourcc(out, "AVI ");

    fourcc(out, "LIST");
    const std::size_t hdrl_size_at = out.size();
    le32(out, 0);
    fourcc(out, "hdrl");

    fourcc(out, "avih");
    le32(out, 56);
    le32(out, static_cast<std::uint32_t>(1000000 / fps_));
    le32(out, max_frame * static_cast<std::uint32_t>(fps_));
    le32(out, 0);
    le32(out, 0x10);  // AVIF_HASINDEX
    le32(out, n);
    le32(out, 0);
    le32(out, 1);
    le32(out, max_frame);
    le32(out, static_cast<std::uint32_t>(width_));
    le32(out, static_cast<std::uint32_t>(height_));
    for (int i = 0; i < 4; ++i) le32(out, 0);

    fourcc(out, "LIST");
    le32(out, 4 + 8 + 56 + 8 + 40);
    fourcc(out, "strl");
    fourcc(out, "strh");
    le32(out, 56);
    fourcc(out, "vids");
    fourcc(out, "MJPG");
    le32(out, 0);
    le16(out, 0);
    le16(out, 0);
    le32(out, 0);
    le32(out, 1);
    le32(out, static_cast<std::uint32_t>(fps_));
    le32(out, 0);
    le32(out, n);
    le32(out, max_frame);
    le32(out, 0xFFFFFFFFu);
    le32(out, 0);
    le16(out, 0);
    le16(out, 0);
    le16(out, static_cast<std::uint32_t>(width_));
    le16(out, static_cast<std::uint32_t>(height_));

    fourcc(out, "strf");
    le32(out, 40);
    le32(out, 40);
    le32(out, static_cast<std::uint32_t>(width_));
    le32(out, static_cast<std::uint32_t>(height_));
    le16(out, 1);
    le16(out, 24);
    fourcc(out, "MJPG");
    le32(out, static_cast<std::uint32_t>(width_) * static_cast<std::uint32_t>(height_) * 3);
    for (int i = 0; i < 4; ++i) le32(out, 0);
    patch32(out, hdrl_size_at, static_cast<std::uint32_t>(out.size() - hdrl_size_at - 4));

    fourcc(out, "LIST");
    const std::size_t movi_size_at = out.size();
    le32(out, 0);
    const std::size_t movi_fourcc_at = out.size();
    fourcc(out, "movi");
    std::vector<std::pair<std::uint32_t, std::uint32_t>> index;
    for (const auto& f : frames_) {
        index.emplace_back(static_cast<std::uint32_t>(out.size() - movi_fourcc_at),
                           static_cast<std::uint32_t>(f.size()));
        fourcc(out, "00dc");
        le32(out, static_cast<std::uint32_t>(f.size()));
        out.insert(out.end(), f.begin(), f.end());
        if (f.size() % 2 != 0) out.push_back(0);
    }
    patch32(out, movi_size_at, static_cast<std::uint32_t>(out.size() - movi_size_at - 4));

    fourcc(out, "idx1");
    le32(out, static_cast<std::uint32_t>(index.size() * 16));
    for (const auto& [offset, size] : index) {
        fourcc(out, "00dc");
        le32(out, 0x10);  // AVIIF_KEYFRAME
        le32(out, offset);
        le32(out, size);
    }
    patch32(out, riff_size_at, static_cast<std::uint32_t>(out.size() - 8));
    frames_.clear();
    return out;
}

} // namespace virtcam::imgio
