#include <cstdio>
#include <set>

#include "runtime.hpp"
#include "virtcam/imgio.hpp"
#include "virtcam/imgproc.hpp"

namespace virtcam::camscript {

namespace fx = virtcam::features;
namespace ip = virtcam::imgproc;

namespace {

Value fn(const std::string& name, BuiltinFn f) { return Value(std::make_shared<Builtin>(Builtin{name, std::move(f)})); }

Value tuple_of(std::initializer_list<Value> v) { return Value::tuple(List(v)); }

std::uint8_t channel(const Value& v, const std::string& fn, int line) {
    if (!v.is_integral() || v.as_int() < 0 || v.as_int() > 255) raise("ValueError", fn + "() color channels must be ints in 0..255", line);
    return static_cast<std::uint8_t>(v.as_int());
}

/// Ints are gray levels, (r, g, b) tuples are 8-bit colors; each is converted to the image's format.
std::uint16_t color_arg(const Image& img, const Value& v, const std::string& fn, int line) {
    if (v.is_integral()) {
        const std::uint8_t g = channel(v, fn, line);
        return img.is_gray() ? g : rgb565::pack(g, g, g);
    }
    if ((v.is(Kind::Tuple) || v.is(Kind::List)) && v.items().size() == 3) {
        const auto& c = v.items();
        const std::uint8_t r = channel(c[0], fn, line), g = channel(c[1], fn, line), b = channel(c[2], fn, line);
        if (!img.is_gray()) return rgb565::pack(r, g, b);
        return static_cast<std::uint16_t>((77 * r + 150 * g + 29 * b) >> 8);
    }
    raise("TypeError", fn + "() color must be an int or an (r, g, b) tuple", line);
}

std::uint16_t white(const Image& img) { return img.is_gray() ? 255 : 0xFFFF; }

fx::Roi roi_value(const Value& v, const std::string& fn, int line) {
    if ((!v.is(Kind::Tuple) && !v.is(Kind::List)) || v.items().size() != 4) {
        raise("TypeError", fn + "() roi must be an (x, y, w, h) tuple", line);
    }
    const List& it = v.items();
    Args a(it.begin(), it.end());
    return {arg_i32(a, 0, fn, line), arg_i32(a, 1, fn, line), arg_i32(a, 2, fn, line), arg_i32(a, 3, fn, line)};
}

const Image& image_arg(const Args& a, std::size_t i, const std::string& fn, int line) {
    if (!a[i].is(Kind::Image)) raise("TypeError", fn + "() argument " + std::to_string(i + 1) + " must be an image, not " + type_name(a[i]), line);
    return a[i].image()->img;
}

/// Grayscale view of an image value; RGB565 inputs are converted into a
/// script-owned temporary held by `keep`.
const Image& gray_of(Interp& in, const Value& v, Value& keep) {
    const Image& img = v.image()->img;
    if (img.is_gray()) return img;
    keep = in.image_value(fx::to_grayscale(img, in.heap().arena()));
    return keep.image()->img;
}

std::string hex_descriptor(const fx::Descriptor& d) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (std::uint8_t b : d) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 15]);
    }
    return out;
}

std::vector<fx::Keypoint> keypoints_value(const Value& v, const std::string& fn, int line) {
    if (!v.is(Kind::Tuple) && !v.is(Kind::List)) raise("TypeError", fn + "() expects a list of keypoints", line);
    std::vector<fx::Keypoint> out;
    for (const Value& k : v.items()) {
        if (!k.is(Kind::Tuple) || k.items().size() != 5 || !k.items()[4].is(Kind::Str)) {
            raise("TypeError", fn + "() keypoints must be (x, y, score, angle, descriptor) tuples", line);
        }
        const List& f = k.items();
        Args a(f.begin(), f.end());
        fx::Keypoint kp;
        kp.x = arg_i32(a, 0, fn, line);
        kp.y = arg_i32(a, 1, fn, line);
        kp.score = arg_i32(a, 2, fn, line);
        kp.angle = arg_number(a, 3, fn, line);
        const std::string& hex = f[4].as_str();
        if (hex.size() != 64) raise("ValueError", fn + "() descriptor must be 64 hex digits", line);
        for (std::size_t i = 0; i < 32; ++i) {
            unsigned byte = 0;
            if (std::sscanf(hex.c_str() + 2 * i, "%2x", &byte) != 1) raise("ValueError", fn + "() descriptor must be 64 hex digits", line);
            kp.descriptor[i] = static_cast<std::uint8_t>(byte);
        }
        kp.has_descriptor = true;
        out.push_back(kp);
    }
    return out;
}

Value matches_value(const std::vector<fx::Match>& ms) {
    List out;
    for (const auto& m : ms) {
        out.push_back(tuple_of({Value(static_cast<std::int64_t>(m.index_a)), Value(static_cast<std::int64_t>(m.index_b)), Value(m.distance)}));
    }
    return Value::list(std::move(out));
}

Value match_lists(Args& a, std::size_t first, const std::string& fn, int line) {
    arity(a, first + 2, first + 4, fn, line);
    const auto ka = keypoints_value(a[first], fn, line);
    const auto kb = keypoints_value(a[first + 1], fn, line);
    const int maxd = a.size() > first + 2 ? arg_i32(a, first + 2, fn, line) : 64;
    const int ratio = a.size() > first + 3 ? arg_i32(a, first + 3, fn, line) : 75;
    return matches_value(fx::match_descriptors(ka, kb, maxd, ratio));
}

PixelFormat format_value(const std::string& s, int line) {
    if (s == "GRAYSCALE") return PixelFormat::Grayscale8;
    if (s == "RGB565") return PixelFormat::Rgb565;
    raise("ValueError", "unknown pixel format '" + s + "'", line);
}

const std::set<std::string>& method_names() {
    static const std::set<std::string> names = {
        "width", "height", "format", "get_pixel", "set_pixel", "stats", "histogram", "copy", "crop", "scale",
        "blend", "median", "midpoint", "gaussian", "histeq", "draw_line", "draw_rectangle", "draw_circle",
        "draw_string", "find_features", "find_eye_center", "find_keypoints", "match", "find_hog", "find_template",
        "find_template_ds", "find_displacement", "canny", "find_lines", "to_grayscale", "save",
    };
    return names;
}

} // namespace

bool image_has_method(const std::string& name) { return method_names().count(name) != 0; }

Value image_method(Interp& in, const Value& self, const std::string& name, Args& a, int line) {
    Image& img = self.image()->img;
    Arena& arena = in.heap().arena();
    const std::string& m = name;

    if (m == "width") { arity(a, 0, 0, m, line); return img.width(); }
    if (m == "height") { arity(a, 0, 0, m, line); return img.height(); }
    if (m == "format") { arity(a, 0, 0, m, line); return to_string(img.format()); }
    if (m == "get_pixel") {
        arity(a, 2, 2, m, line);
        const std::uint16_t v = ip::get_pixel(img, arg_i32(a, 0, m, line), arg_i32(a, 1, m, line));
        if (img.is_gray()) return static_cast<std::int64_t>(v);
        return tuple_of({Value(rgb565::r8(v)), Value(rgb565::g8(v)), Value(rgb565::b8(v))});
    }
    if (m == "set_pixel") {
        arity(a, 3, 3, m, line);
        ip::set_pixel(img, arg_i32(a, 0, m, line), arg_i32(a, 1, m, line), color_arg(img, a[2], m, line));
        return self;
    }
    if (m == "stats" || m == "histogram") {
        arity(a, 0, 0, m, line);
        const ip::Stats st = ip::stats(img);
        List per_channel;
        for (int c = 0; c < st.channels; ++c) {
            if (m == "stats") {
                per_channel.push_back(tuple_of({Value(st.mean[c]), Value(st.min[c]), Value(st.max[c])}));
            } else {
                List h;
                for (std::uint32_t n : st.histogram[c]) h.emplace_back(static_cast<std::int64_t>(n));
                per_channel.push_back(Value::list(std::move(h)));
            }
        }
        return st.channels == 1 ? per_channel[0] : Value::tuple(std::move(per_channel));
    }
    if (m == "copy") { arity(a, 0, 0, m, line); return in.image_value(clone(img, arena)); }
    if (m == "crop") {
        arity(a, 4, 4, m, line);
        return in.image_value(ip::crop(img, arg_i32(a, 0, m, line), arg_i32(a, 1, m, line), arg_i32(a, 2, m, line), arg_i32(a, 3, m, line), arena));
    }
    if (m == "scale") {
        arity(a, 2, 3, m, line);
        ip::ScaleMethod method = ip::ScaleMethod::Nearest;
        if (a.size() == 3) {
            const std::string& s = arg_str(a, 2, m, line);
            if (s == "bilinear") method = ip::ScaleMethod::Bilinear;
            else if (s != "nearest") raise("ValueError", "scale() method must be 'nearest' or 'bilinear'", line);
        }
        return in.image_value(ip::scale(img, arg_i32(a, 0, m, line), arg_i32(a, 1, m, line), method, arena));
    }
    if (m == "blend") {
        arity(a, 2, 2, m, line);
        ip::blend(img, image_arg(a, 0, m, line), arg_i32(a, 1, m, line));
        return self;
    }
    if (m == "median" || m == "midpoint" || m == "gaussian") {
        arity(a, 0, 1, m, line);
        const int k = a.empty() ? 3 : arg_i32(a, 0, m, line);
        if (m == "median") return in.image_value(ip::median_filter(img, k, arena));
        if (m == "midpoint") return in.image_value(ip::midpoint_filter(img, k, arena));
        return in.image_value(ip::gaussian_blur(img, k, arena));
    }
    if (m == "histeq") { arity(a, 0, 0, m, line); ip::hist_eq(img); return self; }
    if (m == "draw_line") {
        arity(a, 4, 5, m, line);
        const std::uint16_t c = a.size() == 5 ? color_arg(img, a[4], m, line) : white(img);
        ip::draw(img, {ip::Line{arg_i32(a, 0, m, line), arg_i32(a, 1, m, line), arg_i32(a, 2, m, line), arg_i32(a, 3, m, line)}, c});
        return self;
    }
    if (m == "draw_rectangle") {
        arity(a, 4, 6, m, line);
        const std::uint16_t c = a.size() >= 5 ? color_arg(img, a[4], m, line) : white(img);
        const bool fill = a.size() == 6 && arg_flag(a, 5, m, line);
        ip::draw(img, {ip::Rect{arg_i32(a, 0, m, line), arg_i32(a, 1, m, line), arg_i32(a, 2, m, line), arg_i32(a, 3, m, line), fill}, c});
        return self;
    }
    if (m == "draw_circle") {
        arity(a, 3, 5, m, line);
        const std::uint16_t c = a.size() >= 4 ? color_arg(img, a[3], m, line) : white(img);
        const bool fill = a.size() == 5 && arg_flag(a, 4, m, line);
        ip::draw(img, {ip::Circle{arg_i32(a, 0, m, line), arg_i32(a, 1, m, line), arg_i32(a, 2, m, line), fill}, c});
        return self;
    }
    if (m == "draw_string") {
        arity(a, 3, 4, m, line);
        const std::uint16_t c = a.size() == 4 ? color_arg(img, a[3], m, line) : white(img);
        ip::draw(img, {ip::Text{arg_i32(a, 0, m, line), arg_i32(a, 1, m, line), arg_str(a, 2, m, line)}, c});
        return self;
    }
    if (m == "find_features") {
        arity(a, 1, 4, m, line);
        const std::string& spec = arg_str(a, 0, m, line);
        auto& cached = in.cascades[spec];
        if (!cached) cached = std::make_shared<const fx::Cascade>(fx::load_cascade(spec));
        fx::HaarParams p;
        if (a.size() > 1) p.scale_factor = arg_number(a, 1, m, line);
        if (a.size() > 2) p.step = arg_i32(a, 2, m, line);
        if (a.size() > 3) p.min_neighbors = arg_i32(a, 3, m, line);
        Value keep;
        const Image& g = gray_of(in, self, keep);
        List out;
        for (const auto& d : fx::haar_detect(g, *cached, p, arena)) {
            out.push_back(tuple_of({Value(d.x), Value(d.y), Value(d.w), Value(d.h), Value(d.score)}));
        }
        return Value::list(std::move(out));
    }
    if (m == "find_eye_center") {
        arity(a, 0, 1, m, line);
        const fx::Roi roi = a.empty() ? fx::Roi{0, 0, img.width(), img.height()} : roi_value(a[0], m, line);
        Value keep;
        const fx::Point p = fx::find_eye_center(gray_of(in, self, keep), roi);
        return tuple_of({Value(p.x), Value(p.y)});
    }
    if (m == "find_keypoints") {
        arity(a, 0, 2, m, line);
        const int t = a.empty() ? 20 : arg_i32(a, 0, m, line);
        const bool nonmax = a.size() < 2 || arg_flag(a, 1, m, line);
        Value keep;
        const Image& g = gray_of(in, self, keep);
        const fx::OrbResult r = fx::orb_describe(g, fx::fast_detect(g, t, nonmax));
        List out;
        for (const auto& k : r.keypoints) {
            out.push_back(tuple_of({Value(k.x), Value(k.y), Value(k.score), Value(k.angle), Value(hex_descriptor(k.descriptor))}));
        }
        return Value::list(std::move(out));
    }
    if (m == "match") return match_lists(a, 0, m, line);
    if (m == "find_hog") {
        arity(a, 0, 1, m, line);
        const fx::Roi roi = a.empty() ? fx::Roi{0, 0, img.width() / fx::kHogCell * fx::kHogCell, img.height() / fx::kHogCell * fx::kHogCell}
                                      : roi_value(a[0], m, line);
        Value keep;
        List out;
        for (double d : fx::hog_descriptor(gray_of(in, self, keep), roi)) out.emplace_back(d);
        return Value::list(std::move(out));
    }
    if (m == "find_template" || m == "find_template_ds") {
        arity(a, m == "find_template" ? 1 : 2, 2, m, line);
        image_arg(a, 0, m, line);
        Value keep_img, keep_tmpl;
        const Image& g = gray_of(in, self, keep_img);
        const Image& t = gray_of(in, a[0], keep_tmpl);
        fx::NccResult r;
        if (m == "find_template") {
            r = a.size() == 2 ? fx::ncc_match_exhaustive(g, t, roi_value(a[1], m, line), arena) : fx::ncc_match_exhaustive(g, t, arena);
        } else {
            const List& start = arg_seq(a, 1, m, line);
            if (start.size() != 2) raise("TypeError", "find_template_ds() start must be an (x, y) tuple", line);
            Args s(start.begin(), start.end());
            r = fx::ncc_match_ds(g, t, fx::Point{arg_i32(s, 0, m, line), arg_i32(s, 1, m, line)});
        }
        return tuple_of({Value(r.x), Value(r.y), Value(r.score)});
    }
    if (m == "find_displacement") {
        arity(a, 1, 2, m, line);
        image_arg(a, 0, m, line);
        const int radius = a.size() == 2 ? arg_i32(a, 1, m, line) : 8;
        Value keep_prev, keep_next;
        const Image& prev = gray_of(in, self, keep_prev);
        const Image& next = gray_of(in, a[0], keep_next);
        const fx::MotionVector mv = fx::optical_flow(prev, next, radius);
        return tuple_of({Value(mv.dx), Value(mv.dy), Value(mv.response)});
    }
    if (m == "canny") {
        arity(a, 2, 2, m, line);
        return in.image_value(fx::canny(img, arg_i32(a, 0, m, line), arg_i32(a, 1, m, line), arena));
    }
    if (m == "find_lines") {
        arity(a, 1, 3, m, line);
        const int ts = a.size() > 1 ? arg_i32(a, 1, m, line) : 1;
        const int rs = a.size() > 2 ? arg_i32(a, 2, m, line) : 1;
        Value keep;
        List out;
        for (const auto& h : fx::hough_lines(gray_of(in, self, keep), arg_i32(a, 0, m, line), ts, rs)) {
            out.push_back(tuple_of({Value(h.rho), Value(h.theta), Value(h.votes)}));
        }
        return Value::list(std::move(out));
    }
    if (m == "to_grayscale") {
        arity(a, 0, 0, m, line);
        return in.image_value(img.is_gray() ? clone(img, arena) : fx::to_grayscale(img, arena));
    }
    if (m == "save") {
        arity(a, 1, 2, m, line);
        const std::string& path = arg_str(a, 0, m, line);
        imgio::JpegConfig cfg;
        if (a.size() == 2) cfg.quality = arg_i32(a, 1, m, line);
        imgio::write_file(path, imgio::write_image(img, imgio::format_for_extension(path), cfg));
        return Value();
    }
    raise("AttributeError", "'image' object has no attribute '" + m + "'", line);
}

std::shared_ptr<Module> make_image_module() {
    auto mod = std::make_shared<Module>();
    mod->name = "image";
    auto& m = mod->members;
    m["GRAYSCALE"] = "GRAYSCALE";
    m["RGB565"] = "RGB565";
    m["load"] = fn("load", [](Interp& in, Args& a, int line) {
        arity(a, 1, 1, "load", line);
        const auto bytes = imgio::read_file(arg_str(a, 0, "load", line));
        return in.image_value(imgio::read_image(bytes, in.heap().arena()));
    });
    m["new"] = fn("new", [](Interp& in, Args& a, int line) {
        arity(a, 2, 3, "new", line);
        const PixelFormat f = a.size() == 3 ? format_value(arg_str(a, 2, "new", line), line) : PixelFormat::Grayscale8;
        return in.image_value(image_new(in.heap().arena(), arg_i32(a, 0, "new", line), arg_i32(a, 1, "new", line), f));
    });
    m["match_descriptors"] = fn("match_descriptors", [](Interp&, Args& a, int line) { return match_lists(a, 0, "match_descriptors", line); });
    return mod;
}

std::shared_ptr<Module> make_sensor_module() {
    auto mod = std::make_shared<Module>();
    mod->name = "sensor";
    auto& m = mod->members;
    m["GRAYSCALE"] = "GRAYSCALE";
    m["RGB565"] = "RGB565";
    m["QQVGA"] = "QQVGA";
    m["QVGA"] = "QVGA";
    m["VGA"] = "VGA";

    // Wraps a sensor action, holding the sensor lock for its duration.
    auto op = [](const std::string& name, std::size_t lo, std::size_t hi,
                 std::function<Value(sensor::Sensor&, Args&, int)> body) {
        return fn(name, [name, lo, hi, body](Interp& in, Args& a, int line) {
            arity(a, lo, hi, name, line);
            sensor::Sensor& s = in.sensor(line);
            auto lock = in.lock_sensor();
            return body(s, a, line);
        });
    };

    m["reset"] = op("reset", 0, 0, [](sensor::Sensor& s, Args&, int) { s.reset(); return Value(); });
    m["set_pixformat"] = op("set_pixformat", 1, 1, [](sensor::Sensor& s, Args& a, int line) {
        s.set("pixformat", arg_str(a, 0, "set_pixformat", line));
        return Value();
    });
    m["set_framesize"] = op("set_framesize", 1, 2, [](sensor::Sensor& s, Args& a, int line) {
        if (a.size() == 2) s.set_framesize(sensor::FrameSize::Custom, arg_i32(a, 0, "set_framesize", line), arg_i32(a, 1, "set_framesize", line));
        else s.set("framesize", arg_str(a, 0, "set_framesize", line));
        return Value();
    });
    m["set_windowing"] = op("set_windowing", 1, 4, [](sensor::Sensor& s, Args& a, int line) {
        if (a.size() == 1 && a[0].is(Kind::None)) {
            s.set_window(std::nullopt);
        } else if (a.size() == 4) {
            s.set_window(sensor::Window{arg_i32(a, 0, "set_windowing", line), arg_i32(a, 1, "set_windowing", line),
                                        arg_i32(a, 2, "set_windowing", line), arg_i32(a, 3, "set_windowing", line)});
        } else if (a.size() == 1) {
            const fx::Roi r = roi_value(a[0], "set_windowing", line);
            s.set_window(sensor::Window{r.x, r.y, r.w, r.h});
        } else {
            raise("TypeError", "set_windowing() takes a (x, y, w, h) tuple, four ints or None", line);
        }
        return Value();
    });
    m["set_hmirror"] = op("set_hmirror", 1, 1, [](sensor::Sensor& s, Args& a, int line) { s.set_hmirror(arg_flag(a, 0, "set_hmirror", line)); return Value(); });
    m["set_vflip"] = op("set_vflip", 1, 1, [](sensor::Sensor& s, Args& a, int line) { s.set_vflip(arg_flag(a, 0, "set_vflip", line)); return Value(); });
    m["set_brightness"] = op("set_brightness", 1, 1, [](sensor::Sensor& s, Args& a, int line) { s.set_brightness(arg_i32(a, 0, "set_brightness", line)); return Value(); });
    m["set_contrast"] = op("set_contrast", 1, 1, [](sensor::Sensor& s, Args& a, int line) { s.set_contrast(arg_i32(a, 0, "set_contrast", line)); return Value(); });
    m["set_led"] = op("set_led", 2, 2, [](sensor::Sensor& s, Args& a, int line) {
        const auto led = sensor::led_from_name(arg_str(a, 0, "set_led", line));
        if (!led) raise("ValueError", "unknown LED '" + a[0].as_str() + "'", line);
        s.set_led(*led, arg_flag(a, 1, "set_led", line));
        return Value();
    });
    m["get_led"] = op("get_led", 1, 1, [](sensor::Sensor& s, Args& a, int line) {
        const auto led = sensor::led_from_name(arg_str(a, 0, "get_led", line));
        if (!led) raise("ValueError", "unknown LED '" + a[0].as_str() + "'", line);
        return Value(s.led(*led));
    });
    m["set_source"] = op("set_source", 1, 1, [](sensor::Sensor& s, Args& a, int line) {
        s.set_source(sensor::parse_source(arg_str(a, 0, "set_source", line)));
        return Value();
    });
    m["width"] = op("width", 0, 0, [](sensor::Sensor& s, Args&, int) { return Value(s.width()); });
    m["height"] = op("height", 0, 0, [](sensor::Sensor& s, Args&, int) { return Value(s.height()); });
    m["get_framesize"] = op("get_framesize", 0, 0, [](sensor::Sensor& s, Args&, int) { return Value(s.get("framesize")); });
    m["get_pixformat"] = op("get_pixformat", 0, 0, [](sensor::Sensor& s, Args&, int) { return Value(s.get("pixformat")); });
    m["snapshot"] = fn("snapshot", [](Interp& in, Args& a, int line) {
        arity(a, 0, 0, "snapshot", line);
        return in.snapshot(line);
    });
    m["skip_frames"] = fn("skip_frames", [](Interp& in, Args& a, int line) {
        arity(a, 0, 1, "skip_frames", line);
        const std::int64_t n = a.empty() ? 1 : arg_int(a, 0, "skip_frames", line);
        for (std::int64_t i = 0; i < n; ++i) in.snapshot(line);
        return Value();
    });
    return mod;
}

} // namespace virtcam::camscript
