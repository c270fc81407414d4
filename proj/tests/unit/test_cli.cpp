#include "checks.hpp"

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <boost/asio.hpp>
#include <fstream>
#include <sstream>

#include "virtcam/cli.hpp"
#include "virtcam/imgio.hpp"
#include "virtcam/imgproc.hpp"

using namespace vt;
namespace ip = virtcam::imgproc;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "virtcam");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = virtcam::cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string write_script(const std::filesystem::path& dir, const std::string& name, const std::string& src) {
    const auto p = dir / name;
    std::ofstream(p) << src;
    return p.string();
}

std::string write_pgm(const std::filesystem::path& dir, const std::string& name, const Image& img) {
    const auto p = dir / name;
    imgio::write_file(p.string(), imgio::encode_pgm(img));
    return p.string();
}

std::vector<std::uint8_t> pixels_of(const std::string& path) {
    Arena a(4 * kDefaultArenaBytes);
    const Image img = imgio::read_image(imgio::read_file(path), a);
    return {img.bytes().begin(), img.bytes().end()};
}

/// Child process running the real binary with stdout on a pipe.
struct Child {
    pid_t pid = -1;
    int out = -1;

    explicit Child(const std::vector<std::string>& args) {
        int fds[2];
        REQUIRE(::pipe(fds) == 0);
        pid = ::fork();
        if (pid == 0) {
            ::dup2(fds[1], 1);
            ::dup2(fds[1], 2);
            ::close(fds[0]);
            ::close(fds[1]);
            std::vector<char*> argv;
            std::string bin = VIRTCAM_BIN;
            argv.push_back(bin.data());
            for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
            argv.push_back(nullptr);
            ::execv(bin.c_str(), argv.data());
            ::_exit(127);
        }
        ::close(fds[1]);
        out = fds[0];
    }
    ~Child() {
        if (out >= 0) ::close(out);
        if (pid > 0) {
            ::kill(pid, SIGKILL);
            ::waitpid(pid, nullptr, 0);
        }
    }

    /// Reads output until `lines` newlines or EOF.
    std::string read_lines(int lines) {
        std::string text;
        char c;
        while (lines > 0 && ::read(out, &c, 1) == 1) {
            text += c;
            lines -= c == '\n';
        }
        return text;
    }

    int wait() {
        int status = 0;
        ::waitpid(pid, &status, 0);
        pid = -1;
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }
};

} // namespace

TEST_SUITE("cli") {

TEST_CASE("run prints and maps script outcomes to exit codes") {
    const auto dir = scratch_dir("cli_run");
    const auto ok = invoke({"run", write_script(dir, "p.cam", "print(1+1)\n")});
    CHECK(ok.code == 0);
    CHECK(ok.out == "2\n");
    const auto bad = invoke({"run", write_script(dir, "n.cam", "x = 1\nprint(y)\n")});
    CHECK(bad.code == 1);
    CHECK(bad.err.find("line") != std::string::npos);
    CHECK(bad.err.find("NameError") != std::string::npos);
    const auto syn = invoke({"run", write_script(dir, "s.cam", "print(1))\n")});
    CHECK(syn.code == 1);
    CHECK(syn.err.find("line 1") != std::string::npos);
    const auto json = invoke({"--json", "run", write_script(dir, "j.cam", "print('a')\nprint(3)\n")});
    CHECK(json.code == 0);
    CHECK(json.out.rfind("{\"print\":\"a\"}\n{\"print\":\"3\"}\n{\"status\":\"ok\"", 0) == 0);
}

TEST_CASE("usage errors exit 2") {
    CHECK(invoke({}).code == 2);
    CHECK(invoke({"bogus"}).code == 2);
    CHECK(invoke({"run"}).code == 2);
    CHECK(invoke({"run", "/no/such/script.cam"}).code == 2);
    const auto dir = scratch_dir("cli_usage");
    const auto script = write_script(dir, "p.cam", "print(1)\n");
    CHECK(invoke({"run", script, "--unknown-flag"}).code == 2);
    CHECK(invoke({"run", script, "--source", "pattern:nope"}).code == 2);
    CHECK(invoke({"run", script, "--frames", "-1"}).code == 2);
    CHECK(invoke({"--arena", "lots", "run", script}).code == 2);
    CHECK(invoke({"match", "a.pgm", "b.pgm", "--method", "sift"}).code == 2);
    CHECK(invoke({"--help"}).code == 0);
}

TEST_CASE("run with --frames and --out saves numbered frames") {
    const auto dir = scratch_dir("cli_frames");
    const auto script = write_script(dir, "loop.cam", "while True:\n    img = sensor.snapshot()\n");
    const auto out = dir / "frames";
    const auto r = invoke({"run", script, "--frames", "3", "--out", out.string(), "--source", "pattern:counter:0"});
    CHECK(r.code == 0);
    std::vector<std::string> names;
    for (const auto& e : std::filesystem::directory_iterator(out)) names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    CHECK(names == std::vector<std::string>{"frame_0000.ppm", "frame_0001.ppm", "frame_0002.ppm"});
    const auto gray = write_script(dir, "gray.cam", "sensor.set_pixformat(sensor.GRAYSCALE)\nfor i in range(2):\n    img = sensor.snapshot()\n");
    const auto out2 = dir / "gray";
    CHECK(invoke({"run", gray, "--out", out2.string()}).code == 0);
    CHECK(std::filesystem::exists(out2 / "frame_0001.pgm"));
    const auto px = pixels_of((out2 / "frame_0000.pgm").string());
    CHECK(px.size() == 320 * 240);
    CHECK(px[0] == 0);
    CHECK(px[319] == 255);
}

TEST_CASE("property: every subcommand is deterministic") {
    const auto dir = scratch_dir("cli_det");
    Arena a;
    std::mt19937_64 rng(60);
    Image img = random_gray(a, 64, 48, rng);
    ip::draw(img, {ip::Line{0, 20, 63, 20}, 255});
    const auto p = write_pgm(dir, "img.pgm", img);
    const Image t = ip::crop(img, 10, 10, 16, 16, a);
    const auto tp = write_pgm(dir, "t.pgm", t);
    const auto script = write_script(dir, "s.cam", "img = sensor.snapshot()\nprint(img.stats())\nprint(len(img.find_keypoints()))\n");
    const std::vector<std::vector<std::string>> commands = {
        {"run", script, "--source", "pattern:noise:4"},
        {"detect", p},
        {"detect", p, "--keypoints", "20"},
        {"detect", p, "--eye", "0,0,32,32"},
        {"match", p, tp},
        {"match", p, tp, "--method", "ds", "--start", "8,8"},
        {"match", p, p, "--method", "orb"},
        {"edges", p},
        {"lines", p, "--canny", "50,100"},
        {"flow", p, p},
        {"--json", "detect", p, "--keypoints", "20"},
    };
    for (const auto& c : commands) {
        CAPTURE(c[0]);
        const auto r1 = invoke(c);
        const auto r2 = invoke(c);
        CHECK(r1.code == 0);
        CHECK(r1.out == r2.out);
        CHECK(r1.err == r2.err);
    }
    const auto ncc = invoke({"match", p, tp});
    CHECK(ncc.out.rfind("x=10 y=10 score=1.000000", 0) == 0);
}

TEST_CASE("convert round trips and reference-decodable JPEG") {
    const auto dir = scratch_dir("cli_convert");
    Arena a;
    Image g(a, 64, 64, PixelFormat::Grayscale8);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) g.set_gray(x, y, static_cast<std::uint8_t>(x * 4));
    const auto src = write_pgm(dir, "gradient.pgm", g);
    CHECK(invoke({"convert", src, (dir / "b.pgm").string()}).code == 0);
    CHECK(pixels_of((dir / "b.pgm").string()) == pixels_of(src));
    CHECK(invoke({"convert", src, (dir / "b.bmp").string()}).code == 0);
    CHECK(invoke({"convert", (dir / "b.bmp").string(), (dir / "c.bmp").string()}).code == 0);
    CHECK(pixels_of((dir / "c.bmp").string()) == pixels_of((dir / "b.bmp").string()));
    // BMP decodes to RGB565, which PGM cannot hold.
    CHECK(invoke({"convert", (dir / "b.bmp").string(), (dir / "c.pgm").string()}).code == 1);
    CHECK(invoke({"convert", src, (dir / "g.jpg").string(), "--quality", "90"}).code == 0);
    const auto jpg = imgio::read_file((dir / "g.jpg").string());
    const Decoded d = decode_jpeg(jpg);
    CHECK(d.width == 64);
    CHECK(d.height == 64);
    CHECK(psnr(d.pixels, pixels_of(src)) >= 35.0);
    CHECK(run_refcheck("jpeg " + (dir / "g.jpg").string() + " 64 64") == 0);
    CHECK(invoke({"convert", src, (dir / "g.gif").string()}).code == 0);
    CHECK(run_refcheck("gif " + (dir / "g.gif").string() + " 1") == 0);

    CHECK(invoke({"convert", src, (dir / "x.tiff").string()}).code == 2);
    CHECK(invoke({"convert", (dir / "g.jpg").string(), (dir / "y.pgm").string()}).code == 2);
    CHECK(invoke({"convert", src, (dir / "q.jpg").string(), "--quality", "0"}).code == 2);
    std::ofstream(dir / "broken.pgm") << "P5\n64 64\n255\nshort";
    const auto broken = invoke({"convert", (dir / "broken.pgm").string(), (dir / "z.pgm").string()});
    CHECK(broken.code == 1);
    CHECK(broken.err.find("TruncatedData") != std::string::npos);
    CHECK(invoke({"convert", (dir / "missing.pgm").string(), (dir / "z.pgm").string()}).code == 1);
}

TEST_CASE("analysis subcommands") {
    const auto dir = scratch_dir("cli_analysis");
    Arena a;
    const auto flat = write_pgm(dir, "flat.pgm", constant_gray(a, 64, 64, 90));
    const auto e = invoke({"edges", flat});
    CHECK(e.code == 0);
    CHECK(e.out == "edges=0\n");
    CHECK(invoke({"lines", flat, "--canny", "50,100", "--threshold", "1"}).out.empty());

    Image h = constant_gray(a, 64, 64, 0);
    ip::draw(h, {ip::Line{5, 10, 55, 10}, 255});
    const auto hl = invoke({"lines", write_pgm(dir, "h.pgm", h)});
    CHECK(hl.code == 0);
    CHECK(hl.out.rfind("rho=10 theta=90 votes=51\n", 0) == 0);

    std::mt19937_64 rng(61);
    const Image base = random_gray(a, 64, 64, rng);
    Image shifted_img(a, 64, 64, PixelFormat::Grayscale8);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) shifted_img.set_gray(x, y, shifted(base, x - 3, y - 1));
    const auto f = invoke({"flow", write_pgm(dir, "f0.pgm", base), write_pgm(dir, "f1.pgm", shifted_img)});
    CHECK(f.code == 0);
    CHECK(f.out.rfind("dx=3 dy=1 ", 0) == 0);

    const auto det = invoke({"detect", (test_dir() / "fixtures" / "bright_over_dark.pgm").string(), "--cascade",
                          (test_dir() / "fixtures" / "bright_over_dark.cascade").string()});
    CHECK(det.code == 0);
    CHECK(std::count(det.out.begin(), det.out.end(), '\n') == 1);

    CHECK(invoke({"edges", flat, "--low", "100", "--high", "50"}).code == 1);
    CHECK(invoke({"flow", flat, write_pgm(dir, "small.pgm", constant_gray(a, 20, 20, 0))}).code == 1);
    CHECK(invoke({"detect", flat, "--cascade", "builtin:nonexistent"}).code == 1);
}

TEST_CASE("serve prints endpoints, exits 0 on interrupt and 2 on a busy port") {
    {
        Child c({"serve"});
        const std::string text = c.read_lines(2);
        CHECK(text == "listening tcp 127.0.0.1:3370\nlistening ws 127.0.0.1:3371\n");
        ::kill(c.pid, SIGINT);
        CHECK(c.wait() == 0);
    }
    boost::asio::io_context io;
    boost::asio::ip::tcp::acceptor busy(io, {boost::asio::ip::make_address("127.0.0.1"), 0});
    const auto port = busy.local_endpoint().port();
    Child c({"serve", "--listen", "127.0.0.1:" + std::to_string(port), "--ws", "127.0.0.1:0"});
    const std::string text = c.read_lines(1);
    CHECK(text.find("error") != std::string::npos);
    CHECK(c.wait() == 2);
    CHECK(invoke({"serve", "--listen", "127.0.0.1:99999"}).code == 2);
}

}
