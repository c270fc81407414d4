#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "virtcam/membuf.hpp"

namespace virtcam::imgio {

enum class FileFormat { Pgm, Ppm, Bmp, Jpeg, Gif };

struct JpegConfig {
    int quality = 90;  // 1..100
};

struct ImageInfo {
    int width = 0;
    int height = 0;
    PixelFormat format = PixelFormat::Grayscale8;
};

/// Parses only the header of a PGM/PPM/BMP buffer.
ImageInfo read_image_info(std::span<const std::uint8_t> bytes);

/// Decodes PGM (P2/P5), PPM (P3/P6) or 24-bit BI_RGB BMP into the arena.
/// PGM yields GRAYSCALE8, PPM/BMP yield RGB565.
Image read_image(std::span<const std::uint8_t> bytes, Arena& arena);

std::vector<std::uint8_t> write_image(const Image& img, FileFormat format, const JpegConfig& config = {});

std::vector<std::uint8_t> encode_pgm(const Image& img);
std::vector<std::uint8_t> encode_ppm(const Image& img);
std::vector<std::uint8_t> encode_bmp(const Image& img);
std::vector<std::uint8_t> encode_jpeg(const Image& img, const JpegConfig& config = {});

/// IJG/Annex-K quality scaling of a base table entry.
int scale_quant_entry(int base, int quality) noexcept;

/// Picks a container by file extension (".pgm", ".jpg", ...). Throws UnsupportedFormat.
FileFormat format_for_extension(std::string_view path);

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> bytes);

/// 256-entry RGB888 palette used for GIF output.
struct GifPalette {
    std::uint8_t rgb[256][3];
};

const GifPalette& gray_palette();
/// 6x6x6 color cube followed by 40 gray levels.
const GifPalette& color_palette();
/// Nearest color-palette entry for an RGB565 pixel.
std::uint8_t color_index(std::uint16_t rgb565) noexcept;

/// Incremental GIF89a writer.
class GifWriter {
public:
    GifWriter(int width, int height, bool loop);

    void add_frame(const Image& img, int delay_cs);
    std::vector<std::uint8_t> end();

    int frame_count() const noexcept { return frames_; }

private:
    void write_header(PixelFormat first_format);

    int width_;
    int height_;
    bool loop_;
    bool header_written_ = false;
    PixelFormat global_format_ = PixelFormat::Grayscale8;
    int frames_ = 0;
    std::vector<std::uint8_t> out_;
};

/// LZW code stream (GIF variant, no sub-blocking) for palette indices.
std::vector<std::uint8_t> gif_lzw_encode(std::span<const std::uint8_t> indices, int min_code_size);

/// Minimal RIFF/AVI writer with an MJPG video stream and idx1 index.
class MjpegWriter {
public:
    MjpegWriter(int width, int height, int fps);

    void add_frame(const Image& img, const JpegConfig& config = {});
    std::vector<std::uint8_t> end();

    int frame_count() const noexcept { return static_cast<int>(frames_.size()); }

private:
    int width_;
    int height_;
    int fps_;
    std::vector<std::vector<std::uint8_t>> frames_;
};

} // namespace virtcam::imgio
