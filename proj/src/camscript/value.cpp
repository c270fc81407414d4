#include <cstdio>

#include "runtime.hpp"

namespace virtcam::camscript {

std::int64_t RangeVal::size() const noexcept {
    const __int128 span = static_cast<__int128>(stop) - start;
    if (step > 0) return span <= 0 ? 0 : static_cast<std::int64_t>((span + step - 1) / step);
    return span >= 0 ? 0 : static_cast<std::int64_t>((-span + (-static_cast<__int128>(step)) - 1) / -static_cast<__int128>(step));
}

void raise(const std::string& kind, const std::string& message, int line) { throw ScriptError(kind, message, line); }

std::string type_name(const Value& v) {
    switch (v.kind()) {
    case Kind::None: return "NoneType";
    case Kind::Bool: return "bool";
    case Kind::Int: return "int";
    case Kind::Float: return "float";
    case Kind::Str: return "str";
    case Kind::Tuple: return "tuple";
    case Kind::List: return "list";
    case Kind::Image: return "image";
    case Kind::Range: return "range";
    case Kind::Module: return "module";
    case Kind::Builtin: return "builtin";
    case Kind::Method: return "method";
    }
    return "?";
}

namespace {

std::string quote_str(const std::string& s) {
    const bool has_single = s.find('\'') != std::string::npos;
    const bool has_double = s.find('"') != std::string::npos;
    const char q = has_single && !has_double ? '"' : '\'';
    std::string out(1, q);
    for (unsigned char c : s) {
        if (c == '\\') out += "\\\\";
        else if (c == static_cast<unsigned char>(q)) { out.push_back('\\'); out.push_back(q); }
        else if (c == '\n') out += "\\n";
        else if (c == '\r') out += "\\r";
        else if (c == '\t') out += "\\t";
        else if (c < 0x20 || c == 0x7F) {
            char buf[8];
            std::snprintf(buf, sizeof buf, "\\x%02x", c);
            out += buf;
        } else {
            out.push_back(static_cast<char>(c));
        }
    }
    out.push_back(q);
    return out;
}

std::string join_items(const List& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) out += ", ";
        out += repr(items[i]);
    }
    return out;
}

} // namespace

std::string repr(const Value& v) {
    switch (v.kind()) {
    case Kind::None: return "None";
    case Kind::Bool: return v.as_bool() ? "True" : "False";
    case Kind::Int: return std::to_string(v.as_int());
    case Kind::Float: return format_float(v.as_float());
    case Kind::Str: return quote_str(v.as_str());
    case Kind::Tuple: {
        const List& items = v.items();
        return "(" + join_items(items) + (items.size() == 1 ? ",)" : ")");
    }
    case Kind::List: return "[" + join_items(v.items()) + "]";
    case Kind::Image: {
        const Image& img = v.image()->img;
        return "<image " + std::to_string(img.width()) + "x" + std::to_string(img.height()) + " " +
               to_string(img.format()) + ">";
    }
    case Kind::Range: {
        const RangeVal& r = v.range();
        std::string out = "range(" + std::to_string(r.start) + ", " + std::to_string(r.stop);
        if (r.step != 1) out += ", " + std::to_string(r.step);
        return out + ")";
    }
    case Kind::Module: return "<module '" + v.module()->name + "'>";
    case Kind::Builtin: return "<builtin " + v.builtin()->name + ">";
    case Kind::Method: return "<method " + v.method()->name + " of " + type_name(v.method()->self) + ">";
    }
    return "?";
}

std::string str(const Value& v) { return v.is(Kind::Str) ? v.as_str() : repr(v); }

bool truthy(const Value& v) {
    switch (v.kind()) {
    case Kind::None: return false;
    case Kind::Bool: return v.as_bool();
    case Kind::Int: return v.as_int() != 0;
    case Kind::Float: return v.as_float() != 0.0;
    case Kind::Str: return !v.as_str().empty();
    case Kind::Tuple:
    case Kind::List: return !v.items().empty();
    case Kind::Range: return v.range().size() > 0;
    default: return true;
    }
}

bool values_equal(const Value& a, const Value& b) {
    if (a.is_number() && b.is_number()) {
        if (a.is_integral() && b.is_integral()) return a.as_int() == b.as_int();
        return a.as_float() == b.as_float();
    }
    if (a.kind() != b.kind()) return false;
    switch (a.kind()) {
    case Kind::None: return true;
    case Kind::Str: return a.as_str() == b.as_str();
    case Kind::Tuple:
    case Kind::List: {
        const List& x = a.items();
        const List& y = b.items();
        if (x.size() != y.size()) return false;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (!values_equal(x[i], y[i])) return false;
        }
        return true;
    }
    case Kind::Image: return a.image() == b.image();
    case Kind::Range: {
        const RangeVal& x = a.range();
        const RangeVal& y = b.range();
        if (x.size() != y.size()) return false;
        return x.size() == 0 || (x.start == y.start && (x.size() == 1 || x.step == y.step));
    }
    case Kind::Module: return a.module() == b.module();
    case Kind::Builtin: return a.builtin() == b.builtin();
    case Kind::Method: return a.method() == b.method();
    default: return false;
    }
}

List iterate(const Value& v, int line) {
    switch (v.kind()) {
    case Kind::Tuple:
    case Kind::List: return v.items();
    case Kind::Str: {
        List out;
        for (char c : v.as_str()) out.emplace_back(std::string(1, c));
        return out;
    }
    case Kind::Range: {
        const RangeVal& r = v.range();
        const std::int64_t n = r.size();
        if (n > 10'000'000) raise("ValueError", "range too large to materialize", line);
        List out;
        out.reserve(static_cast<std::size_t>(n));
        for (std::int64_t i = 0; i < n; ++i) out.emplace_back(r.at(i));
        return out;
    }
    default: raise("TypeError", "'" + type_name(v) + "' object is not iterable", line);
    }
}

// ---- argument helpers -------------------------------------------------------

void arity(const Args& a, std::size_t lo, std::size_t hi, const std::string& fn, int line) {
    if (a.size() >= lo && a.size() <= hi) return;
    std::string expected = lo == hi ? std::to_string(lo) : std::to_string(lo) + " to " + std::to_string(hi);
    raise("TypeError", fn + "() takes " + expected + " arguments (" + std::to_string(a.size()) + " given)", line);
}

std::int64_t arg_int(const Args& a, std::size_t i, const std::string& fn, int line) {
    if (!a[i].is_integral()) raise("TypeError", fn + "() argument " + std::to_string(i + 1) + " must be int, not " + type_name(a[i]), line);
    return a[i].as_int();
}

int arg_i32(const Args& a, std::size_t i, const std::string& fn, int line) {
    const std::int64_t v = arg_int(a, i, fn, line);
    if (v < INT32_MIN || v > INT32_MAX) raise("ValueError", fn + "() argument " + std::to_string(i + 1) + " out of range", line);
    return static_cast<int>(v);
}

double arg_number(const Args& a, std::size_t i, const std::string& fn, int line) {
    if (!a[i].is_number()) raise("TypeError", fn + "() argument " + std::to_string(i + 1) + " must be a number, not " + type_name(a[i]), line);
    return a[i].as_float();
}

const std::string& arg_str(const Args& a, std::size_t i, const std::string& fn, int line) {
    if (!a[i].is(Kind::Str)) raise("TypeError", fn + "() argument " + std::to_string(i + 1) + " must be str, not " + type_name(a[i]), line);
    return a[i].as_str();
}

bool arg_flag(const Args& a, std::size_t i, const std::string& fn, int line) {
    if (!a[i].is_integral()) raise("TypeError", fn + "() argument " + std::to_string(i + 1) + " must be bool, not " + type_name(a[i]), line);
    return a[i].as_int() != 0;
}

const List& arg_seq(const Args& a, std::size_t i, const std::string& fn, int line) {
    if (!a[i].is(Kind::Tuple) && !a[i].is(Kind::List)) {
        raise("TypeError", fn + "() argument " + std::to_string(i + 1) + " must be a tuple or list, not " + type_name(a[i]), line);
    }
    return a[i].items();
}

// ---- image heap -------------------------------------------------------------

std::shared_ptr<ImageObj> ImageHeap::adopt(Image img) {
    auto obj = std::make_shared<ImageObj>();
    obj->img = std::move(img);
    objs_.push_back(obj);
    return obj;
}

bool ImageHeap::dead(const std::shared_ptr<ImageObj>& o) const noexcept {
    return o != frame_buffer && o.use_count() <= 1;
}

void ImageHeap::collect() {
    while (!objs_.empty() && dead(objs_.back())) {
        objs_.back()->img = Image();
        objs_.pop_back();
    }
    std::size_t first_dead = objs_.size();
    for (std::size_t i = 0; i < objs_.size(); ++i) {
        if (dead(objs_[i])) {
            first_dead = i;
            break;
        }
    }
    if (first_dead == objs_.size()) return;

    // Move the live images above the hole out to host memory, release
    // everything from the top down, then reallocate the survivors in order.
    struct Saved {
        std::shared_ptr<ImageObj> obj;
        int w, h;
        PixelFormat fmt;
        std::vector<std::uint8_t> pixels;
    };
    std::vector<Saved> saved;
    for (std::size_t j = objs_.size(); j-- > first_dead;) {
        auto& o = objs_[j];
        if (!dead(o)) {
            const auto px = o->img.bytes();
            saved.push_back({o, o->img.width(), o->img.height(), o->img.format(), {px.begin(), px.end()}});
        }
        o->img = Image();
    }
    objs_.resize(first_dead);
    for (auto it = saved.rbegin(); it != saved.rend(); ++it) {
        it->obj->img = Image(arena_, it->w, it->h, it->fmt);
        std::copy(it->pixels.begin(), it->pixels.end(), it->obj->img.bytes().begin());
        objs_.push_back(it->obj);
    }
}

void ImageHeap::release_all() noexcept {
    frame_buffer.reset();
    while (!objs_.empty()) {
        objs_.back()->img = Image();
        objs_.pop_back();
    }
}

} // namespace virtcam::camscript
