#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "virtcam/membuf.hpp"

namespace virtcam::features {

struct Roi {
    int x = 0, y = 0, w = 0, h = 0;
};

struct Point {
    int x = 0, y = 0;
    bool operator==(const Point&) const = default;
};

/// gray = (77*R8 + 150*G8 + 29*B8) >> 8 on bit-replicated channels.
std::uint8_t luma(std::uint16_t rgb565) noexcept;
Image to_grayscale(const Image& img, Arena& arena);

// ---- Haar cascades -------------------------------------------------------

/// All thresholds and weights are signed 16.16 fixed point.
struct HaarRect {
    int x = 0, y = 0, w = 0, h = 0;
    std::int32_t weight = 0;
    bool operator==(const HaarRect&) const = default;
};

struct Stump {
    std::vector<HaarRect> rects;
    std::int32_t threshold = 0;
    std::int32_t pass_value = 0;
    std::int32_t fail_value = 0;
    bool operator==(const Stump&) const = default;
};

struct Stage {
    std::int32_t threshold = 0;
    std::vector<Stump> stumps;
    bool operator==(const Stage&) const = default;
};

struct Cascade {
    int window_w = 0;
    int window_h = 0;
    std::vector<Stage> stages;
    bool operator==(const Cascade&) const = default;
};

std::int32_t to_fixed(double v);
double from_fixed(std::int32_t v) noexcept;
/// Exact decimal rendering of a 16.16 value ("-0.5", "1.25", "3").
std::string format_fixed(std::int32_t v);
/// Parses a decimal literal to the nearest 16.16 value (ties away from zero).
std::int32_t parse_fixed(std::string_view text);

Cascade parse_cascade(std::string_view text);
std::string serialize_cascade(const Cascade& c);
void validate_cascade(const Cascade& c);
/// "builtin:NAME" selects an embedded cascade; anything else is a file path.
Cascade load_cascade(const std::string& spec);
std::string_view builtin_cascade_text(std::string_view name);

struct Detection {
    int x = 0, y = 0, w = 0, h = 0;
    double score = 0.0;
};

struct HaarParams {
    double scale_factor = 1.25;
    int step = 2;
    int min_neighbors = 3;
};

/// One pyramid level: the cascade with window and rectangles resized.
struct ScaledCascade {
    double scale = 1.0;
    int step = 1;
    Cascade cascade;
};

std::vector<ScaledCascade> haar_pyramid(const Cascade& c, const HaarParams& p, int img_w, int img_h);

/// Stump decision on integer window statistics: passes when
/// F >= T * sqrt(V) with F = sum(weight * rectsum) and V = A*Q - S*S.
bool stump_passes(__int128 feature, std::int32_t threshold, std::uint64_t v) noexcept;
/// Variance guard: windows with V * 10000 < A * A are rejected.
bool window_is_flat(std::uint64_t v, std::uint64_t area) noexcept;

/// Ungrouped window hits, in scan order (scale, y, x).
std::vector<Detection> haar_scan_raw(const Image& img, const Cascade& c, const HaarParams& p, Arena& arena);
/// IoU >= 0.5 connected components; groups below min_neighbors are dropped.
std::vector<Detection> group_detections(const std::vector<Detection>& raw, int min_neighbors);
std::vector<Detection> haar_detect(const Image& img, const Cascade& c, const HaarParams& p, Arena& arena);

double iou(const Detection& a, const Detection& b) noexcept;

// ---- Eye centre ----------------------------------------------------------

Point find_eye_center(const Image& img, const Roi& roi, bool darkness_prior = true);

// ---- FAST / ORB ----------------------------------------------------------

using Descriptor = std::array<std::uint8_t, 32>;

struct Keypoint {
    int x = 0, y = 0;
    int score = 0;
    double angle = 0.0;
    bool has_descriptor = false;
    Descriptor descriptor{};
};

/// Offsets of the radius-3 Bresenham circle, clockwise from 12 o'clock.
const std::array<Point, 16>& fast_circle() noexcept;
bool fast_segment_test(const Image& img, int x, int y, int t) noexcept;
int fast_score(const Image& img, int x, int y, int t) noexcept;
std::vector<Keypoint> fast_detect(const Image& img, int threshold, bool nonmax);

struct OrbPair {
    int x1, y1, x2, y2;
};
const std::array<OrbPair, 256>& orb_pattern();
inline constexpr int kOrbPatchRadius = 15;
inline constexpr int kOrbBorder = 16;

struct OrbResult {
    std::vector<Keypoint> keypoints;
    std::size_t dropped = 0;
};

double orb_orientation(const Image& img, int x, int y) noexcept;
OrbResult orb_describe(const Image& img, const std::vector<Keypoint>& keypoints);

int hamming(const Descriptor& a, const Descriptor& b) noexcept;

struct Match {
    std::size_t index_a = 0;
    std::size_t index_b = 0;
    int distance = 0;
    bool operator==(const Match&) const = default;
};

std::vector<Match> match_descriptors(const std::vector<Keypoint>& a, const std::vector<Keypoint>& b,
                                     int max_distance = 64, int ratio = 75);

// ---- HoG -----------------------------------------------------------------

inline constexpr int kHogCell = 8;
inline constexpr int kHogBins = 9;
std::vector<double> hog_descriptor(const Image& img, const Roi& roi);

// ---- NCC template matching ----------------------------------------------

struct NccResult {
    int x = 0, y = 0;
    double score = 0.0;
    std::size_t evaluations = 0;
};

/// Zero-mean NCC of the template against img at placement (x,y); 0 when either side is flat.
double ncc_score(const Image& img, const Image& tmpl, int x, int y);
NccResult ncc_match_exhaustive(const Image& img, const Image& tmpl, const Roi& roi, Arena& arena);
NccResult ncc_match_exhaustive(const Image& img, const Image& tmpl, Arena& arena);
NccResult ncc_match_ds(const Image& img, const Image& tmpl, Point start);

struct MotionVector {
    int dx = 0, dy = 0;
    double response = 0.0;
    std::size_t evaluations = 0;
};

MotionVector optical_flow(const Image& prev, const Image& next, int radius = 8);

// ---- Edges and lines ----------------------------------------------------

Image canny(const Image& img, int low, int high, Arena& arena);

struct LineHit {
    int rho = 0;
    int theta = 0;
    int votes = 0;
    bool operator==(const LineHit&) const = default;
};

std::vector<LineHit> hough_lines(const Image& edges, int threshold, int theta_step = 1, int rho_step = 1);

} // namespace virtcam::features
