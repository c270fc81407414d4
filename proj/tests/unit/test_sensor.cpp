#include "checks.hpp"

#include <fstream>

#include "virtcam/imgio.hpp"

using namespace vt;
namespace sn = virtcam::sensor;

namespace {

void write_pgm(const std::filesystem::path& p, const Image& img) {
    imgio::write_file(p.string(), imgio::encode_pgm(img));
}

} // namespace

TEST_SUITE("sensor") {

TEST_CASE("defaults") {
    sn::Sensor s;
    CHECK(s.width() == 320);
    CHECK(s.height() == 240);
    CHECK(s.config().pixformat == PixelFormat::Rgb565);
    CHECK(s.get("framesize") == "QVGA");
    CHECK(s.get("window") == "none");
    CHECK(s.get("source") == "pattern:gradient:0");
}

TEST_CASE("gradient endpoints, mirroring and flipping") {
    Arena a;
    sn::Sensor s(sn::PatternSource{"gradient", 0});
    s.set_pixformat(PixelFormat::Grayscale8);
    {
        const Image f = s.snapshot(a);
        CHECK(f.gray(0, 0) == 0);
        CHECK(f.gray(319, 0) == 255);
        CHECK(f.gray(160, 100) == f.gray(160, 0));
    }
    s.set_hmirror(true);
    {
        const Image f = s.snapshot(a);
        CHECK(f.gray(0, 0) == 255);
        CHECK(f.gray(319, 239) == 0);
    }
    s.set_hmirror(false);
    s.set_vflip(true);
    const Image f = s.snapshot(a);
    CHECK(f.gray(0, 0) == 0);
    CHECK(f.gray(319, 0) == 255);
}

TEST_CASE("pattern pixels follow their definitions") {
    CHECK(sn::pattern_pixel({"gradient", 0}, 0, 639, 0)[0] == 255);
    CHECK(sn::pattern_pixel({"gradient", 0}, 0, 320, 0)[0] == 320 * 255 / 639);
    CHECK(sn::pattern_pixel({"checker", 0}, 0, 0, 0)[0] == 0);
    CHECK(sn::pattern_pixel({"checker", 0}, 0, 32, 0)[0] == 255);
    CHECK(sn::pattern_pixel({"checker", 1}, 0, 0, 0)[0] == 255);
    for (std::uint64_t f = 0; f < 20; ++f) {
        const int top = sn::pattern_pixel({"counter", 0}, f, 5, 0)[0];
        const int bottom = sn::pattern_pixel({"counter", 0}, f, 5, 479)[0];
        CHECK(top + bottom == 255);
    }
    CHECK(sn::pattern_pixel({"noise", 3}, 4, 10, 10) == sn::pattern_pixel({"noise", 3}, 4, 10, 10));
    CHECK(sn::pattern_pixel({"noise", 3}, 4, 10, 10) != sn::pattern_pixel({"noise", 4}, 4, 10, 10));
}

TEST_CASE("snapshots are deterministic in source, seed and frame index") {
    Arena a(2 * kDefaultArenaBytes);
    for (const std::string& name : sn::pattern_names()) {
        sn::Sensor s1(sn::PatternSource{name, 9}), s2(sn::PatternSource{name, 9});
        for (int i = 0; i < 3; ++i) {
            const Image x = s1.snapshot(a);
            const Image y = s2.snapshot(a);
            REQUIRE(same_pixels(x, y));
        }
        const Image r = s1.render(a, 1);
        sn::Sensor s3(sn::PatternSource{name, 9});
        { const Image skip = s3.snapshot(a); }
        const Image second = s3.snapshot(a);
        CHECK(same_pixels(r, second));
        CHECK(s1.frame_index() == 3);
    }
}

TEST_CASE("VGA grayscale fits the default arena") {
    Arena a;
    sn::Sensor s;
    s.set("framesize", "VGA");
    s.set("pixformat", "GRAYSCALE");
    const Image f = s.snapshot(a);
    CHECK(f.width() == 640);
    CHECK(f.height() == 480);
    CHECK(a.used() == 307200);
    s.set_pixformat(PixelFormat::Rgb565);
    CHECK_CODE(s.snapshot(a), ErrorCode::OutOfMemory);
}

TEST_CASE("window validation") {
    sn::Sensor s;
    CHECK_CODE(s.set_window(sn::Window{0, 0, 4, 4}), ErrorCode::BadValue);
    CHECK_CODE(s.set("window", "0,0,4,4"), ErrorCode::BadValue);
    CHECK_CODE(s.set_window(sn::Window{600, 0, 64, 64}), ErrorCode::BadValue);
    CHECK_CODE(s.set_window(sn::Window{-1, 0, 64, 64}), ErrorCode::BadValue);
    s.set_window(sn::Window{0, 0, 8, 8});
    CHECK(s.get("window") == "0,0,8,8");
    s.set("window", "none");
    CHECK(!s.config().window);
}

TEST_CASE("property: snapshot dimensions follow the framesize regardless of window") {
    Arena a;
    std::mt19937_64 rng(20);
    sn::Sensor s(sn::PatternSource{"noise", 1});
    s.set_pixformat(PixelFormat::Grayscale8);
    for (int n = 0; n < 30; ++n) {
        const int w = 8 + static_cast<int>(rng() % 400), h = 8 + static_cast<int>(rng() % 300);
        const int x = static_cast<int>(rng() % static_cast<unsigned>(640 - w + 1));
        const int y = static_cast<int>(rng() % static_cast<unsigned>(480 - h + 1));
        s.set_window(sn::Window{x, y, w, h});
        const sn::FrameSize fs = std::array{sn::FrameSize::Qqvga, sn::FrameSize::Qvga}[rng() % 2];
        s.set_framesize(fs);
        const Image f = s.snapshot(a);
        CHECK(f.width() == s.config().width());
        CHECK(f.height() == s.config().height());
    }
    s.set("framesize", "100x50");
    const Image f = s.snapshot(a);
    CHECK(f.width() == 100);
    CHECK(f.height() == 50);
    CHECK_CODE(s.set("framesize", "700x10"), ErrorCode::BadValue);
    CHECK_CODE(s.set("framesize", "HUGE"), ErrorCode::BadValue);
}

TEST_CASE("window crops at native resolution before scaling") {
    Arena a;
    sn::Sensor s;
    s.set_pixformat(PixelFormat::Grayscale8);
    s.set_window(sn::Window{320, 0, 320, 240});
    const Image f = s.snapshot(a);
    for (int x = 0; x < 320; x += 17) CHECK(f.gray(x, 5) == (320 + x) * 255 / 639);
}

TEST_CASE("tone pipeline") {
    const auto dir = scratch_dir("sensor_tone");
    Arena a(4 * kDefaultArenaBytes);
    std::mt19937_64 rng(21);
    {
        const Image still = random_gray(a, 640, 480, rng);
        write_pgm(dir / "still.pgm", still);
    }
    sn::Sensor s(sn::parse_source("still:" + (dir / "still.pgm").string()));
    s.set_framesize(sn::FrameSize::Vga);
    s.set_pixformat(PixelFormat::Grayscale8);
    const Image ref = imgio::read_image(imgio::read_file((dir / "still.pgm").string()), a);
    {
        const Image f = s.snapshot(a);
        CHECK(same_pixels(f, ref));
    }
    s.set_contrast(512);
    s.set_brightness(-10);
    const Image f = s.snapshot(a);
    for (int i = 0; i < 2000; ++i) {
        const int x = static_cast<int>(rng() % 640), y = static_cast<int>(rng() % 480);
        REQUIRE(f.gray(x, y) == std::clamp(((ref.gray(x, y) * 512) >> 8) - 10, 0, 255));
    }
    CHECK_CODE(s.set_brightness(128), ErrorCode::BadValue);
    CHECK_CODE(s.set_contrast(1025), ErrorCode::BadValue);
    CHECK_CODE(s.set_contrast(-1), ErrorCode::BadValue);
}

TEST_CASE("sequence sources loop or exhaust") {
    const auto dir = scratch_dir("sensor_seq");
    Arena a;
    for (int i = 0; i < 3; ++i) {
        const Image img = constant_gray(a, 32, 24, static_cast<std::uint8_t>(10 * (i + 1)));
        write_pgm(dir / ("f" + std::to_string(i) + ".pgm"), img);
    }
    std::ofstream(dir / "readme.txt") << "ignored";
    sn::Sensor once(sn::parse_source("seq:" + dir.string()));
    once.set_pixformat(PixelFormat::Grayscale8);
    for (int i = 0; i < 3; ++i) {
        const Image f = once.snapshot(a);
        CHECK(f.gray(7, 7) == 10 * (i + 1));
    }
    CHECK_CODE(once.snapshot(a), ErrorCode::SourceExhausted);

    sn::Sensor looped(sn::parse_source("seq:" + dir.string() + ":loop"));
    looped.set_pixformat(PixelFormat::Grayscale8);
    for (int i = 0; i < 7; ++i) {
        const Image f = looped.snapshot(a);
        CHECK(f.gray(100, 100) == 10 * (i % 3 + 1));
    }
    CHECK(looped.get("source") == "seq:" + dir.string() + ":loop");
}

TEST_CASE("source errors") {
    CHECK_CODE(sn::parse_source("pattern:nope"), ErrorCode::BadValue);
    CHECK_CODE(sn::parse_source("bogus"), ErrorCode::BadValue);
    CHECK_CODE(sn::parse_source("pattern:noise:x"), ErrorCode::BadValue);
    CHECK_CODE(sn::Sensor(sn::StillSource{"/no/such.pgm"}), ErrorCode::FileError);
    CHECK_CODE(sn::Sensor(sn::SequenceSource{"/no/such/dir", false}), ErrorCode::FileError);
    const auto empty = scratch_dir("sensor_empty");
    sn::Sensor s(sn::parse_source("seq:" + empty.string()));
    Arena a;
    CHECK_CODE(s.snapshot(a), ErrorCode::FileError);
}

TEST_CASE("attribute round trips") {
    sn::Sensor s;
    s.set("led.ir", "on");
    CHECK(s.get("led.ir") == "on");
    CHECK(s.led(sn::Led::Ir));
    CHECK(s.get("led.red") == "off");
    s.set_led(sn::Led::Red, true);
    CHECK(s.get("led.red") == "on");
    const std::vector<std::pair<std::string, std::string>> values = {
        {"framesize", "QQVGA"}, {"pixformat", "GRAYSCALE"}, {"window", "10,20,100,80"}, {"hmirror", "on"},
        {"vflip", "on"}, {"brightness", "-5"}, {"contrast", "300"}, {"source", "pattern:checker:1"},
    };
    for (const auto& [k, v] : values) {
        s.set(k, v);
        CHECK(s.get(k) == v);
    }
    for (const auto& name : sn::Sensor::attribute_names()) {
        CHECK(sn::Sensor::has_attribute(name));
        CHECK_NOTHROW(s.set(name, s.get(name)));
    }
    CHECK_CODE(s.get("exposure"), ErrorCode::InvalidArgument);
    CHECK_CODE(s.set("hmirror", "maybe"), ErrorCode::BadValue);
    CHECK_CODE(s.set("brightness", "1x"), ErrorCode::BadValue);
    s.reset();
    CHECK(s.get("framesize") == "QVGA");
    CHECK(s.get("led.red") == "off");
    CHECK(s.get("source") == "pattern:checker:1");
}

TEST_CASE("snapshot_into reuses the buffer") {
    Arena a;
    sn::Sensor s(sn::PatternSource{"counter", 0});
    s.set_pixformat(PixelFormat::Grayscale8);
    Image fb(a, 320, 240, PixelFormat::Grayscale8);
    const std::size_t used = a.used();
    s.snapshot_into(fb);
    s.snapshot_into(fb);
    CHECK(a.used() == used);
    CHECK(fb.gray(0, 0) == 37 + 28);
    Image wrong(a, 10, 10, PixelFormat::Grayscale8);
    CHECK_CODE(s.snapshot_into(wrong), ErrorCode::DimensionMismatch);
}

}
