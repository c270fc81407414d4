#include "virtcam/features.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace virtcam::features {

namespace {

constexpr int kMaxRectsPerStump = 16;

constexpr std::string_view kBrightOverDark = R"(# bright band above a dark band, 8x8 window
cascade 8 8 1
stage 1 0.5
stump 2 0.5 1 0
rect 0 0 8 4 1
rect 0 4 8 4 -1
)";

// Coarse frontal-face layout on a 16x16 window: dark eye band over
// brighter cheeks, then a bright nose bridge between the eyes.
constexpr std::string_view kFaceTiny = R"(cascade 16 16 2
stage 1 0.5
stump 2 0.25 1 0
rect 0 4 16 4 -1
rect 0 8 16 4 1
stage 2 0.5
stump 3 0.1 0.75 0
rect 6 4 4 4 1
rect 2 4 4 4 -0.5
rect 10 4 4 4 -0.5
stump 2 0.1 0.75 0
rect 4 12 8 3 -1
rect 4 9 8 3 1
)";

[[noreturn]] void syntax(int line, const std::string& msg) {
    fail(ErrorCode::CascadeSyntax, "line " + std::to_string(line) + ": " + msg);
}

struct Line {
    int number;
    std::vector<std::string> words;
};

std::vector<Line> split_lines(std::string_view text) {
    std::vector<Line> out;
    int number = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t end = std::min(text.find('\n', pos), text.size());
        std::string_view raw = text.substr(pos, end - pos);
        ++number;
        if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
        std::istringstream in{std::string(raw)};
        Line l{number, {}};
        for (std::string w; in >> w;) l.words.push_back(w);
        if (!l.words.empty()) out.push_back(std::move(l));
        if (end == text.size()) break;
        pos = end + 1;
    }
    return out;
}

int parse_int(const std::string& s, int line) {
    std::size_t used = 0;
    long v = 0;
    try {
        v = std::stol(s, &used);
    } catch (const std::exception&) {
        syntax(line, "expected integer, got '" + s + "'");
    }
    if (used != s.size() || v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
        syntax(line, "expected integer, got '" + s + "'");
    }
    return static_cast<int>(v);
}

std::int32_t parse_fixed_at(const std::string& s, int line) {
    try {
        return parse_fixed(s);
    } catch (const Error&) {
        syntax(line, "bad fixed-point value '" + s + "'");
    }
}

} // namespace

std::int32_t to_fixed(double v) {
    const double scaled = std::round(v * 65536.0);
    if (!(scaled >= std::numeric_limits<std::int32_t>::min() && scaled <= std::numeric_limits<std::int32_t>::max())) {
        fail(ErrorCode::InvalidArgument, "value outside 16.16 range");
    }
    return static_cast<std::int32_t>(scaled);
}

double from_fixed(std::int32_t v) noexcept { return v / 65536.0; }

std::string format_fixed(std::int32_t v) {
    std::int64_t a = v;
    std::string out;
    if (a < 0) {
        out.push_back('-');
        a = -a;
    }
    out += std::to_string(a >> 16);
    std::int64_t frac = a & 0xFFFF;
    if (frac != 0) {
        out.push_back('.');
        while (frac != 0) {
            frac *= 10;
            out.push_back(static_cast<char>('0' + (frac >> 16)));
            frac &= 0xFFFF;
        }
    }
    return out;
}

std::int32_t parse_fixed(std::string_view text) {
    std::size_t i = 0;
    bool neg = false;
    if (i < text.size() && (text[i] == '-' || text[i] == '+')) neg = text[i++] == '-';
    __int128 whole = 0;
    std::size_t int_digits = 0;
    while (i < text.size() && text[i] >= '0' && text[i] <= '9') {
        whole = whole * 10 + (text[i++] - '0');
        if (whole > (__int128{1} << 40)) fail(ErrorCode::InvalidArgument, "fixed-point overflow");
        ++int_digits;
    }
    __int128 frac = 0;
    __int128 denom = 1;
    std::size_t frac_digits = 0;
    if (i < text.size() && text[i] == '.') {
        ++i;
        while (i < text.size() && text[i] >= '0' && text[i] <= '9') {
            if (frac_digits < 30) {
                frac = frac * 10 + (text[i] - '0');
                denom *= 10;
            }
            ++frac_digits;
            ++i;
        }
    }
    if (i != text.size() || int_digits + frac_digits == 0) {
        fail(ErrorCode::InvalidArgument, "malformed number '" + std::string(text) + "'");
    }
    // Nearest 1/65536, half away from zero.
    const __int128 scaled = whole * 65536 + (frac * 65536 * 2 + denom) / (denom * 2);
    const __int128 value = neg ? -scaled : scaled;
    if (value < std::numeric_limits<std::int32_t>::min() || value > std::numeric_limits<std::int32_t>::max()) {
        fail(ErrorCode::InvalidArgument, "fixed-point overflow");
    }
    return static_cast<std::int32_t>(value);
}

Cascade parse_cascade(std::string_view text) {
    const std::vector<Line> lines = split_lines(text);
    std::size_t li = 0;
    auto next = [&](const char* keyword, std::size_t nargs) -> const Line& {
        if (li >= lines.size()) {
            syntax(lines.empty() ? 1 : lines.back().number, std::string("unexpected end of input, expected '") + keyword + "'");
        }
        const Line& l = lines[li++];
        if (l.words[0] != keyword) syntax(l.number, std::string("expected '") + keyword + "', got '" + l.words[0] + "'");
        if (l.words.size() != nargs + 1) {
            syntax(l.number, std::string("'") + keyword + "' takes " + std::to_string(nargs) + " values");
        }
        return l;
    };

    Cascade c;
    const Line& head = next("cascade", 3);
    c.window_w = parse_int(head.words[1], head.number);
    c.window_h = parse_int(head.words[2], head.number);
    const int nstages = parse_int(head.words[3], head.number);
    if (nstages < 1) syntax(head.number, "cascade needs at least one stage");
    for (int s = 0; s < nstages; ++s) {
        const Line& sl = next("stage", 2);
        const int nstumps = parse_int(sl.words[1], sl.number);
        if (nstumps < 1) syntax(sl.number, "stage needs at least one stump");
        Stage stage;
        stage.threshold = parse_fixed_at(sl.words[2], sl.number);
        for (int k = 0; k < nstumps; ++k) {
            const Line& tl = next("stump", 4);
            const int nrects = parse_int(tl.words[1], tl.number);
            if (nrects < 1 || nrects > kMaxRectsPerStump) {
                syntax(tl.number, "stump needs 1.." + std::to_string(kMaxRectsPerStump) + " rects");
            }
            Stump stump;
            stump.threshold = parse_fixed_at(tl.words[2], tl.number);
            stump.pass_value = parse_fixed_at(tl.words[3], tl.number);
            stump.fail_value = parse_fixed_at(tl.words[4], tl.number);
            for (int r = 0; r < nrects; ++r) {
                const Line& rl = next("rect", 5);
                HaarRect rect;
                rect.x = parse_int(rl.words[1], rl.number);
                rect.y = parse_int(rl.words[2], rl.number);
                rect.w = parse_int(rl.words[3], rl.number);
                rect.h = parse_int(rl.words[4], rl.number);
                rect.weight = parse_fixed_at(rl.words[5], rl.number);
                if (rect.w < 1 || rect.h < 1 || rect.x < 0 || rect.y < 0 || rect.x + rect.w > c.window_w ||
                    rect.y + rect.h > c.window_h) {
                    syntax(rl.number, "rect lies outside the window");
                }
                stump.rects.push_back(rect);
            }
            stage.stumps.push_back(std::move(stump));
        }
        c.stages.push_back(std::move(stage));
    }
    if (li != lines.size()) syntax(lines[li].number, "trailing content after last stage");
    validate_cascade(c);
    return c;
}

void validate_cascade(const Cascade& c) {
    if (c.window_w < 1 || c.window_h < 1) fail(ErrorCode::CascadeSyntax, "window must be at least 1x1");
    if (c.stages.empty()) fail(ErrorCode::CascadeSyntax, "cascade needs at least one stage");
    for (const Stage& s : c.stages) {
        if (s.stumps.empty()) fail(ErrorCode::CascadeSyntax, "stage needs at least one stump");
        for (const Stump& st : s.stumps) {
            if (st.rects.empty() || st.rects.size() > kMaxRectsPerStump) {
                fail(ErrorCode::CascadeSyntax, "stump needs 1.." + std::to_string(kMaxRectsPerStump) + " rects");
            }
            for (const HaarRect& r : st.rects) {
                if (r.w < 1 || r.h < 1 || r.x < 0 || r.y < 0 || r.x + r.w > c.window_w || r.y + r.h > c.window_h) {
                    fail(ErrorCode::CascadeSyntax, "rect lies outside the window");
                }
            }
        }
    }
}

std::string serialize_cascade(const Cascade& c) {
    std::ostringstream out;
    out << "cascade " << c.window_w << ' ' << c.window_h << ' ' << c.stages.size() << '\n';
    for (const Stage& s : c.stages) {
        out << "stage " << s.stumps.size() << ' ' << format_fixed(s.threshold) << '\n';
        for (const Stump& st : s.stumps) {
            out << "stump " << st.rects.size() << ' ' << format_fixed(st.threshold) << ' ' << format_fixed(st.pass_value)
                << ' ' << format_fixed(st.fail_value) << '\n';
            for (const HaarRect& r : st.rects) {
                out << "rect " << r.x << ' ' << r.y << ' ' << r.w << ' ' << r.h << ' ' << format_fixed(r.weight) << '\n';
            }
        }
    }
    return out.str();
}

std::string_view builtin_cascade_text(std::string_view name) {
    if (name == "bright_over_dark") return kBrightOverDark;
    if (name == "face_tiny") return kFaceTiny;
    fail(ErrorCode::FileError, "unknown builtin cascade '" + std::string(name) + "'");
}

Cascade load_cascade(const std::string& spec) {
    constexpr std::string_view prefix = "builtin:";
    if (spec.rfind(prefix, 0) == 0) return parse_cascade(builtin_cascade_text(std::string_view(spec).substr(prefix.size())));
    std::ifstream in(spec, std::ios::binary);
    if (!in) fail(ErrorCode::FileError, "cannot open cascade '" + spec + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_cascade(buf.str());
}

} // namespace virtcam::features
