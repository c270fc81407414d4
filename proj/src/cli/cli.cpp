#include "virtcam/cli.hpp"

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <pthread.h>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "virtcam/camscript/interpreter.hpp"
#include "virtcam/devserve/server.hpp"
#include "virtcam/features.hpp"
#include "virtcam/imgio.hpp"

namespace virtcam::cli {

namespace {

namespace fx = virtcam::features;
using nlohmann::ordered_json;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One result line: ordered key/value fields printed as "k=v k=v" or as a JSON object.
class Emitter {
public:
    Emitter(std::ostream& out, bool json) : out_(out), json_(json) {}

    void line(const ordered_json& fields) {
        if (json_) {
            out_ << fields.dump() << "\n";
            return;
        }
        bool first = true;
        for (const auto& [k, v] : fields.items()) {
            if (!first) out_ << ' ';
            first = false;
            out_ << k << '=';
            if (v.is_number_float()) {
                char buf[64];
                std::snprintf(buf, sizeof buf, "%.6f", v.get<double>());
                out_ << buf;
            } else if (v.is_string()) {
                out_ << v.get<std::string>();
            } else {
                out_ << v.dump();
            }
        }
        out_ << "\n";
    }

private:
    std::ostream& out_;
    bool json_;
};

std::vector<int> parse_ints(const std::string& text, std::size_t count, const std::string& what) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        try {
            std::size_t used = 0;
            const int v = std::stoi(part, &used);
            if (used != part.size()) throw std::invalid_argument(part);
            out.push_back(v);
        } catch (const std::exception&) {
            throw UsageError(what + " must be " + std::to_string(count) + " comma-separated integers");
        }
    }
    if (out.size() != count) throw UsageError(what + " must be " + std::to_string(count) + " comma-separated integers");
    return out;
}

std::size_t resolve_arena(const std::string& flag) {
    std::string text = flag;
    if (text.empty()) {
        if (const char* env = std::getenv("VIRTCAM_ARENA")) text = env;
    }
    if (text.empty()) return kDefaultArenaBytes;
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(text, &used);
        if (used != text.size() || v == 0 || v > (1ull << 32)) throw std::invalid_argument(text);
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw UsageError("arena size must be a positive byte count, got '" + text + "'");
    }
}

Image load_image(const std::string& path, Arena& arena) { return imgio::read_image(imgio::read_file(path), arena); }

/// Grayscale version of `img`, converting RGB565 into `holder`.
const Image& as_gray(const Image& img, Arena& arena, Image& holder) {
    if (img.is_gray()) return img;
    holder = fx::to_grayscale(img, arena);
    return holder;
}

std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& text, std::uint16_t default_port) {
    std::string host = "127.0.0.1";
    std::string port = text;
    if (const auto colon = text.rfind(':'); colon != std::string::npos) {
        host = text.substr(0, colon);
        port = text.substr(colon + 1);
    }
    if (port.empty()) return {host, default_port};
    const auto p = parse_ints(port, 1, "port")[0];
    if (p < 0 || p > 65535) throw UsageError("port out of range: " + port);
    return {host, static_cast<std::uint16_t>(p)};
}

bool supported_input(const std::string& path) {
    try {
        const auto f = imgio::format_for_extension(path);
        return f == imgio::FileFormat::Pgm || f == imgio::FileFormat::Ppm || f == imgio::FileFormat::Bmp;
    } catch (const Error&) {
        return false;
    }
}

struct Options {
    bool json = false;
    std::string arena;

    // run
    std::string script;
    std::string source = "pattern:gradient:0";
    std::int64_t frames = -1;
    std::string out_dir;
    std::uint64_t max_steps = camscript::Limits{}.max_steps;

    // serve
    std::string listen = "127.0.0.1:3370";
    std::string ws = "127.0.0.1:3371";
    std::string static_dir;

    // convert
    std::string input, output;
    int quality = 90;

    // detect / match / edges / lines / flow
    std::string image, second;
    std::string cascade;
    std::string eye_roi;
    int keypoints = -1;
    double scale_factor = 1.25;
    int step = 2;
    int min_neighbors = 3;
    std::string method = "ncc";
    std::string roi;
    std::string start = "0,0";
    int fast_threshold = 20;
    int max_distance = 64;
    int ratio = 75;
    int low = 50, high = 100;
    std::string edges_out;
    int threshold = 20;
    int theta_step = 1, rho_step = 1;
    std::string canny;
    int radius = 8;
};

int cmd_run(const Options& o, std::ostream& out, std::ostream& err) {
    std::ifstream in(o.script, std::ios::binary);
    if (!in) throw UsageError("cannot read script '" + o.script + "'");
    std::stringstream src;
    src << in.rdbuf();

    sensor::FrameSource source;
    try {
        source = sensor::parse_source(o.source);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    Arena arena(resolve_arena(o.arena));
    sensor::Sensor sensor(source);

    if (!o.out_dir.empty()) std::filesystem::create_directories(o.out_dir);
    Emitter emit(out, o.json);
    camscript::Environment env;
    env.arena = &arena;
    env.sensor = &sensor;
    if (o.frames >= 0) env.max_frames = static_cast<std::uint64_t>(o.frames);
    std::uint64_t saved = 0;
    std::string pending;  // json mode groups print output into lines
    env.on_print = [&](std::string_view text) {
        if (!o.json) {
            out << text << std::flush;
            return;
        }
        pending += text;
        for (std::size_t nl; (nl = pending.find('\n')) != std::string::npos;) {
            emit.line({{"print", pending.substr(0, nl)}});
            pending.erase(0, nl + 1);
        }
    };
    env.on_publish = [&](const Image& img) {
        if (o.out_dir.empty()) return;
        char name[32];
        std::snprintf(name, sizeof name, "frame_%04llu.%s", static_cast<unsigned long long>(saved++), img.is_gray() ? "pgm" : "ppm");
        const auto bytes = img.is_gray() ? imgio::encode_pgm(img) : imgio::encode_ppm(img);
        imgio::write_file((std::filesystem::path(o.out_dir) / name).string(), bytes);
    };
    camscript::Limits limits;
    limits.max_steps = o.max_steps;
    const camscript::Report r = camscript::run_source(src.str(), env, limits);
    if (o.json) {
        if (!pending.empty()) emit.line({{"print", pending}});
        ordered_json done = {{"status", std::string(camscript::to_string(r.status))}, {"steps", r.steps}, {"frames", r.frames}};
        if (!r.error.empty()) done["error"] = r.error;
        emit.line(done);
    }
    if (r.status == camscript::Status::Ok || r.status == camscript::Status::Stopped) return kExitOk;
    err << r.error << "\n";
    return kExitDomain;
}

int cmd_serve(const Options& o, std::ostream& out, std::ostream& err) {
    devserve::DeviceOptions dopt;
    dopt.arena_bytes = resolve_arena(o.arena);
    try {
        dopt.source = sensor::parse_source(o.source);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    devserve::ServerOptions sopt;
    std::tie(sopt.tcp_host, sopt.tcp_port) = parse_endpoint(o.listen, devserve::kDefaultTcpPort);
    std::tie(sopt.ws_host, sopt.ws_port) = parse_endpoint(o.ws, devserve::kDefaultWsPort);
    sopt.static_dir = o.static_dir;

    // Block the shutdown signals before any thread starts so only sigwait sees them.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    devserve::Device device(dopt);
    std::unique_ptr<devserve::Server> server;
    try {
        server = std::make_unique<devserve::Server>(device, sopt);
    } catch (const std::runtime_error& e) {
        err << "error: " << e.what() << "\n";
        pthread_sigmask(SIG_UNBLOCK, &signals, nullptr);
        return kExitUsage;
    }
    server->start();
    out << "listening tcp " << sopt.tcp_host << ":" << server->tcp_port() << "\n";
    out << "listening ws " << sopt.ws_host << ":" << server->ws_port() << "\n" << std::flush;
    int sig = 0;
    sigwait(&signals, &sig);
    server->stop();
    server->wait();
    device.shutdown();
    pthread_sigmask(SIG_UNBLOCK, &signals, nullptr);
    return kExitOk;
}

int cmd_convert(const Options& o, std::ostream&, std::ostream&) {
    if (!supported_input(o.input)) throw UsageError("unsupported input extension: " + o.input);
    imgio::FileFormat fmt;
    try {
        fmt = imgio::format_for_extension(o.output);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    if (o.quality < 1 || o.quality > 100) throw UsageError("--quality must be in 1..100");
    Arena arena(resolve_arena(o.arena));
    const Image img = load_image(o.input, arena);
    imgio::write_file(o.output, imgio::write_image(img, fmt, {o.quality}));
    return kExitOk;
}

int cmd_detect(const Options& o, std::ostream& out, std::ostream&) {
    Arena arena(resolve_arena(o.arena));
    const Image img = load_image(o.image, arena);
    Image holder;
    const Image& gray = as_gray(img, arena, holder);
    Emitter emit(out, o.json);
    if (!o.eye_roi.empty()) {
        const auto r = parse_ints(o.eye_roi, 4, "--eye");
        const fx::Point p = fx::find_eye_center(gray, {r[0], r[1], r[2], r[3]});
        emit.line({{"x", p.x}, {"y", p.y}});
        return kExitOk;
    }
    if (o.keypoints >= 0) {
        const auto kps = fx::orb_describe(gray, fx::fast_detect(gray, o.keypoints, true)).keypoints;
        for (const auto& k : kps) {
            std::string hex;
            char b[3];
            for (std::uint8_t v : k.descriptor) {
                std::snprintf(b, sizeof b, "%02x", v);
                hex += b;
            }
            emit.line({{"x", k.x}, {"y", k.y}, {"score", k.score}, {"angle", k.angle}, {"descriptor", hex}});
        }
        return kExitOk;
    }
    const fx::Cascade cascade = fx::load_cascade(o.cascade.empty() ? "builtin:face_tiny" : o.cascade);
    fx::HaarParams p;
    p.scale_factor = o.scale_factor;
    p.step = o.step;
    p.min_neighbors = o.min_neighbors;
    for (const auto& d : fx::haar_detect(gray, cascade, p, arena)) {
        emit.line({{"x", d.x}, {"y", d.y}, {"w", d.w}, {"h", d.h}, {"score", d.score}});
    }
    return kExitOk;
}

int cmd_match(const Options& o, std::ostream& out, std::ostream&) {
    if (o.method != "ncc" && o.method != "ds" && o.method != "orb") throw UsageError("--method must be ncc, ds or orb");
    Arena arena(resolve_arena(o.arena));
    const Image a = load_image(o.image, arena);
    const Image b = load_image(o.second, arena);
    Image ha, hb;
    const Image& ga = as_gray(a, arena, ha);
    const Image& gb = as_gray(b, arena, hb);
    Emitter emit(out, o.json);
    if (o.method == "orb") {
        const auto ka = fx::orb_describe(ga, fx::fast_detect(ga, o.fast_threshold, true)).keypoints;
        const auto kb = fx::orb_describe(gb, fx::fast_detect(gb, o.fast_threshold, true)).keypoints;
        for (const auto& m : fx::match_descriptors(ka, kb, o.max_distance, o.ratio)) {
            emit.line({{"a", m.index_a}, {"b", m.index_b}, {"distance", m.distance}});
        }
        return kExitOk;
    }
    fx::NccResult r;
    if (o.method == "ds") {
        const auto s = parse_ints(o.start, 2, "--start");
        r = fx::ncc_match_ds(ga, gb, {s[0], s[1]});
    } else if (!o.roi.empty()) {
        const auto q = parse_ints(o.roi, 4, "--roi");
        r = fx::ncc_match_exhaustive(ga, gb, {q[0], q[1], q[2], q[3]}, arena);
    } else {
        r = fx::ncc_match_exhaustive(ga, gb, arena);
    }
    emit.line({{"x", r.x}, {"y", r.y}, {"score", r.score}, {"evaluations", r.evaluations}});
    return kExitOk;
}

int cmd_edges(const Options& o, std::ostream& out, std::ostream&) {
    Arena arena(resolve_arena(o.arena));
    const Image img = load_image(o.image, arena);
    Image holder;
    const Image edges = fx::canny(as_gray(img, arena, holder), o.low, o.high, arena);
    std::size_t count = 0;
    for (std::uint8_t v : edges.bytes()) count += v != 0;
    if (!o.edges_out.empty()) imgio::write_file(o.edges_out, imgio::write_image(edges, imgio::format_for_extension(o.edges_out)));
    Emitter(out, o.json).line({{"edges", count}});
    return kExitOk;
}

int cmd_lines(const Options& o, std::ostream& out, std::ostream&) {
    Arena arena(resolve_arena(o.arena));
    const Image img = load_image(o.image, arena);
    Image holder;
    const Image* src = &as_gray(img, arena, holder);
    Image edges;
    if (!o.canny.empty()) {
        const auto t = parse_ints(o.canny, 2, "--canny");
        edges = fx::canny(*src, t[0], t[1], arena);
        src = &edges;
    }
    Emitter emit(out, o.json);
    for (const auto& h : fx::hough_lines(*src, o.threshold, o.theta_step, o.rho_step)) {
        emit.line({{"rho", h.rho}, {"theta", h.theta}, {"votes", h.votes}});
    }
    return kExitOk;
}

int cmd_flow(const Options& o, std::ostream& out, std::ostream&) {
    Arena arena(resolve_arena(o.arena));
    const Image prev = load_image(o.image, arena);
    const Image next = load_image(o.second, arena);
    Image hp, hn;
    const Image& gp = as_gray(prev, arena, hp);
    const Image& gn = as_gray(next, arena, hn);
    const fx::MotionVector mv = fx::optical_flow(gp, gn, o.radius);
    Emitter(out, o.json).line({{"dx", mv.dx}, {"dy", mv.dy}, {"response", mv.response}});
    return kExitOk;
}

} // namespace

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"virtual smart camera: scripting, device server and vision tools", "virtcam"};
    app.require_subcommand(1, 1);
    app.fallthrough();
    app.add_flag("--json", o.json, "Emit one JSON object per result line");
    app.add_option("--arena", o.arena, "Arena capacity in bytes (default 524288, or VIRTCAM_ARENA)");

    auto* run = app.add_subcommand("run", "Run a script against the virtual sensor");
    run->add_option("script", o.script, "Script file (.cam)")->required();
    run->add_option("--source", o.source, "pattern:NAME[:SEED] | still:PATH | seq:DIR[:loop]");
    run->add_option("--frames", o.frames, "Stop after this many snapshots")->check(CLI::NonNegativeNumber);
    run->add_option("--out", o.out_dir, "Save every published frame here as PGM/PPM");
    run->add_option("--max-steps", o.max_steps, "Interpreter step limit");

    auto* serve = app.add_subcommand("serve", "Serve the virtual device over TCP and websocket");
    serve->add_option("--listen", o.listen, "Raw stream endpoint HOST:PORT");
    serve->add_option("--ws", o.ws, "Websocket endpoint HOST:PORT");
    serve->add_option("--source", o.source, "Frame source");
    serve->add_option("--static", o.static_dir, "Directory served over HTTP on the websocket port");

    auto* convert = app.add_subcommand("convert", "Convert an image between formats");
    convert->add_option("input", o.input, "Input .pgm/.ppm/.bmp")->required();
    convert->add_option("output", o.output, "Output .pgm/.ppm/.bmp/.jpg/.gif")->required();
    convert->add_option("--quality", o.quality, "JPEG quality 1..100");

    auto* detect = app.add_subcommand("detect", "Haar detection, eye centre or keypoints");
    detect->add_option("image", o.image, "Input image")->required();
    auto* cascade = detect->add_option("--cascade", o.cascade, "builtin:NAME or cascade file (default builtin:face_tiny)");
    auto* eye = detect->add_option("--eye", o.eye_roi, "Eye centre within x,y,w,h");
    auto* kp = detect->add_option("--keypoints", o.keypoints, "FAST/ORB keypoints at this threshold");
    cascade->excludes(eye)->excludes(kp);
    eye->excludes(kp);
    detect->add_option("--scale-factor", o.scale_factor, "Pyramid scale factor");
    detect->add_option("--step", o.step, "Window step at scale 1");
    detect->add_option("--min-neighbors", o.min_neighbors, "Minimum group size");

    auto* match = app.add_subcommand("match", "Template matching (ncc, ds) or descriptor matching (orb)");
    match->add_option("image", o.image, "Search image")->required();
    match->add_option("template", o.second, "Template image, or second image for orb")->required();
    match->add_option("--method", o.method, "ncc | ds | orb");
    match->add_option("--roi", o.roi, "Search region x,y,w,h (ncc)");
    match->add_option("--start", o.start, "Start placement x,y (ds)");
    match->add_option("--threshold", o.fast_threshold, "FAST threshold (orb)");
    match->add_option("--max-distance", o.max_distance, "Maximum Hamming distance (orb)");
    match->add_option("--ratio", o.ratio, "Ratio test x100 (orb)");

    auto* edges = app.add_subcommand("edges", "Canny edge detection");
    edges->add_option("image", o.image, "Input image")->required();
    edges->add_option("--low", o.low, "Low threshold");
    edges->add_option("--high", o.high, "High threshold");
    edges->add_option("--out", o.edges_out, "Write the edge map");

    auto* lines = app.add_subcommand("lines", "Hough line detection on an edge map");
    lines->add_option("image", o.image, "Edge map (non-zero pixels vote)")->required();
    lines->add_option("--threshold", o.threshold, "Minimum votes");
    lines->add_option("--theta-step", o.theta_step, "Angle step in degrees");
    lines->add_option("--rho-step", o.rho_step, "Distance step in pixels");
    lines->add_option("--canny", o.canny, "Run Canny first with LOW,HIGH");

    auto* flow = app.add_subcommand("flow", "Global displacement between two frames");
    flow->add_option("prev", o.image, "Previous frame")->required();
    flow->add_option("next", o.second, "Next frame")->required();
    flow->add_option("--radius", o.radius, "Search radius");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*run) return cmd_run(o, out, err);
        if (*serve) return cmd_serve(o, out, err);
        if (*convert) return cmd_convert(o, out, err);
        if (*detect) return cmd_detect(o, out, err);
        if (*match) return cmd_match(o, out, err);
        if (*edges) return cmd_edges(o, out, err);
        if (*lines) return cmd_lines(o, out, err);
        if (*flow) return cmd_flow(o, out, err);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitDomain;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitDomain;
    }
    return kExitUsage;
}

} // namespace virtcam::cli
