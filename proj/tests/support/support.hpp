#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "virtcam/camscript/interpreter.hpp"
#include "virtcam/features.hpp"
#include "virtcam/membuf.hpp"
#include "virtcam/sensor.hpp"

namespace vt {

using namespace virtcam;
namespace fx = virtcam::features;

std::filesystem::path test_dir();      // tests/ in the source tree
std::filesystem::path scratch_dir(const std::string& name);  // fresh directory under the build tree

// ---- images --------------------------------------------------------------

Image random_gray(Arena& arena, int w, int h, std::mt19937_64& rng, int lo = 0, int hi = 255);
Image random_rgb(Arena& arena, int w, int h, std::mt19937_64& rng);
Image constant_gray(Arena& arena, int w, int h, std::uint8_t v);

// ---- brute-force oracles -------------------------------------------------

std::uint64_t brute_rect_sum(const Image& img, int x, int y, int w, int h);
std::uint64_t brute_rect_square_sum(const Image& img, int x, int y, int w, int h);

/// Raw Haar window hits computed with per-pixel loops and floating-point normalisation.
std::vector<fx::Detection> brute_haar_raw(const Image& img, const fx::Cascade& c, const fx::HaarParams& p);
fx::Cascade random_cascade(std::mt19937_64& rng, int window, int stages, int stumps);

/// Two-pass zero-mean NCC at one placement; 0 for flat windows or templates.
double brute_ncc(const Image& img, const Image& tmpl, int x, int y);

/// Segment test with its own circle table: 9 contiguous of 16 beyond p +/- t.
bool brute_segment(const Image& img, int x, int y, int t);
int brute_fast_score(const Image& img, int x, int y, int t);
std::vector<fx::Point> brute_fast(const Image& img, int t, bool nonmax);

std::vector<fx::Match> brute_match(const std::vector<fx::Keypoint>& a, const std::vector<fx::Keypoint>& b,
                                   int max_distance, int ratio);

/// Eye-centre objective at candidate (cx, cy) over the gradient set of roi.
std::vector<double> eye_objective(const Image& img, const fx::Roi& roi, bool prior);

/// Exhaustive global displacement of the central block of prev within next.
fx::MotionVector brute_flow(const Image& prev, const Image& next, int radius);

/// 3x3 Sobel L1 magnitude of the 5-tap Gaussian-blurred image.
std::vector<int> blurred_sobel_l1(const Image& img, Arena& arena);

std::uint8_t shifted(const Image& img, int x, int y);  // replicate-border read

// ---- reference codecs ----------------------------------------------------

struct Decoded {
    int width = 0;
    int height = 0;
    int components = 0;
    std::vector<std::uint8_t> pixels;  // interleaved 8-bit
};

/// libjpeg decode; throws std::runtime_error on malformed data.
Decoded decode_jpeg(std::span<const std::uint8_t> bytes);
double psnr(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);
std::uint32_t zlib_crc32(std::span<const std::uint8_t> bytes);

/// Runs the Python reference checker; returns its exit status.
int run_refcheck(const std::string& args);

// ---- scripts -------------------------------------------------------------

struct ScriptRun {
    camscript::Report report;
    std::size_t arena_before = 0;
    std::size_t arena_after = 0;
};

ScriptRun run_script(const std::string& source, const std::string& frame_source = "pattern:gradient:0",
                     std::size_t arena_bytes = kDefaultArenaBytes, std::uint64_t max_steps = camscript::Limits{}.max_steps);

std::string read_text(const std::filesystem::path& p);

} // namespace vt
