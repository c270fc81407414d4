#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>

#include "runtime.hpp"

namespace virtcam::camscript {

namespace {

Value fn(const std::string& name, BuiltinFn f) { return Value(std::make_shared<Builtin>(Builtin{name, std::move(f)})); }

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\n\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\n\r");
    return s.substr(b, e - b + 1);
}

std::int64_t float_to_int(double d, int line) {
    if (std::isnan(d)) raise("ValueError", "cannot convert float NaN to integer", line);
    if (std::isinf(d)) raise("Overflow", "cannot convert float infinity to integer", line);
    const double t = std::trunc(d);
    if (t < -9.2233720368547758e18 || t >= 9.2233720368547758e18) raise("Overflow", "float too large to convert to int", line);
    return static_cast<std::int64_t>(t);
}

Value to_int(Interp&, Args& a, int line) {
    arity(a, 0, 2, "int", line);
    if (a.empty()) return std::int64_t{0};
    const Value& v = a[0];
    if (a.size() == 2 && !v.is(Kind::Str)) raise("TypeError", "int() can't convert non-string with explicit base", line);
    if (v.is_integral()) return v.as_int();
    if (v.is(Kind::Float)) return float_to_int(v.as_float(), line);
    if (v.is(Kind::Str)) {
        const int base = a.size() == 2 ? arg_i32(a, 1, "int", line) : 10;
        if (base < 2 || base > 36) raise("ValueError", "int() base must be >= 2 and <= 36", line);
        const std::string s = trim(v.as_str());
        std::string_view digits = s;
        bool neg = false;
        if (!digits.empty() && (digits[0] == '+' || digits[0] == '-')) {
            neg = digits[0] == '-';
            digits.remove_prefix(1);
        }
        std::uint64_t mag = 0;
        const auto r = std::from_chars(digits.data(), digits.data() + digits.size(), mag, base);
        if (digits.empty() || r.ec == std::errc::invalid_argument || r.ptr != digits.data() + digits.size()) {
            raise("ValueError", "invalid literal for int() with base " + std::to_string(base) + ": " + repr(v), line);
        }
        if (r.ec == std::errc::result_out_of_range || mag > (neg ? 9223372036854775808ULL : 9223372036854775807ULL)) {
            raise("Overflow", "int too large", line);
        }
        return neg ? static_cast<std::int64_t>(0 - mag) : static_cast<std::int64_t>(mag);
    }
    raise("TypeError", "int() argument must be a string or a number, not '" + type_name(v) + "'", line);
}

Value to_float(Interp&, Args& a, int line) {
    arity(a, 0, 1, "float", line);
    if (a.empty()) return 0.0;
    const Value& v = a[0];
    if (v.is_number()) return v.as_float();
    if (v.is(Kind::Str)) {
        std::string s = trim(v.as_str());
        std::string lower = s;
        std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        std::string_view body = lower;
        double sign = 1.0;
        if (!body.empty() && (body[0] == '+' || body[0] == '-')) {
            sign = body[0] == '-' ? -1.0 : 1.0;
            body.remove_prefix(1);
        }
        if (body == "inf" || body == "infinity") return sign * INFINITY;
        if (body == "nan") return NAN;
        const bool plain = !s.empty() && s.find_first_not_of("0123456789+-.eE") == std::string::npos;
        if (plain) {
            char* end = nullptr;
            const double d = std::strtod(s.c_str(), &end);
            if (end == s.c_str() + s.size()) return d;
        }
        raise("ValueError", "could not convert string to float: " + repr(v), line);
    }
    raise("TypeError", "float() argument must be a string or a number, not '" + type_name(v) + "'", line);
}

Value make_range(Interp&, Args& a, int line) {
    arity(a, 1, 3, "range", line);
    RangeVal r;
    if (a.size() == 1) {
        r.stop = arg_int(a, 0, "range", line);
    } else {
        r.start = arg_int(a, 0, "range", line);
        r.stop = arg_int(a, 1, "range", line);
        if (a.size() == 3) r.step = arg_int(a, 2, "range", line);
    }
    if (r.step == 0) raise("ValueError", "range() arg 3 must not be zero", line);
    return r;
}

Value length(Interp&, Args& a, int line) {
    arity(a, 1, 1, "len", line);
    const Value& v = a[0];
    if (v.is(Kind::Str)) return static_cast<std::int64_t>(v.as_str().size());
    if (v.is(Kind::Tuple) || v.is(Kind::List)) return static_cast<std::int64_t>(v.items().size());
    if (v.is(Kind::Range)) return v.range().size();
    raise("TypeError", "object of type '" + type_name(v) + "' has no len()", line);
}

Value extreme(Args& a, int line, bool want_max) {
    const std::string name = want_max ? "max" : "min";
    if (a.empty()) raise("TypeError", name + " expected at least 1 argument, got 0", line);
    const List items = a.size() == 1 ? iterate(a[0], line) : List(a.begin(), a.end());
    if (items.empty()) raise("ValueError", name + "() arg is an empty sequence", line);
    Value best = items[0];
    for (std::size_t i = 1; i < items.size(); ++i) {
        if (want_max ? less_than(best, items[i], line) : less_than(items[i], best, line)) best = items[i];
    }
    return best;
}

Value round_value(Interp&, Args& a, int line) {
    arity(a, 1, 2, "round", line);
    const Value& v = a[0];
    if (!v.is_number()) raise("TypeError", "type " + type_name(v) + " doesn't define __round__", line);
    if (a.size() == 1 || a[1].is(Kind::None)) {
        if (v.is_integral()) return v.as_int();
        return float_to_int(std::nearbyint(v.as_float()), line);
    }
    const std::int64_t nd = arg_int(a, 1, "round", line);
    if (v.is_integral()) {
        if (nd >= 0) return v.as_int();
        if (nd < -18) return std::int64_t{0};
        std::int64_t p = 1;
        for (std::int64_t i = 0; i < -nd; ++i) p *= 10;
        const std::int64_t x = v.as_int();
        std::int64_t q = x / p, rem = x % p;
        if (rem < 0) { rem += p; --q; }
        if (2 * rem > p || (2 * rem == p && (q % 2 != 0))) ++q;
        return q * p;
    }
    const double x = v.as_float();
    if (!std::isfinite(x) || nd > 300) return x;
    const double p = std::pow(10.0, static_cast<double>(nd));
    return std::nearbyint(x * p) / p;
}

Value sorted(Interp&, Args& a, int line) {
    arity(a, 1, 1, "sorted", line);
    List items = iterate(a[0], line);
    std::stable_sort(items.begin(), items.end(), [line](const Value& x, const Value& y) { return less_than(x, y, line); });
    return Value::list(std::move(items));
}

} // namespace

void install_builtins(std::unordered_map<std::string, Value>& into) {
    into["print"] = fn("print", [](Interp& in, Args& a, int) {
        std::string out;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (i > 0) out.push_back(' ');
            out += str(a[i]);
        }
        out.push_back('\n');
        in.print(out);
        return Value();
    });
    into["range"] = fn("range", make_range);
    into["len"] = fn("len", length);
    into["int"] = fn("int", to_int);
    into["float"] = fn("float", to_float);
    into["str"] = fn("str", [](Interp&, Args& a, int line) {
        arity(a, 0, 1, "str", line);
        return a.empty() ? Value("") : Value(str(a[0]));
    });
    into["repr"] = fn("repr", [](Interp&, Args& a, int line) {
        arity(a, 1, 1, "repr", line);
        return Value(repr(a[0]));
    });
    into["bool"] = fn("bool", [](Interp&, Args& a, int line) {
        arity(a, 0, 1, "bool", line);
        return Value(!a.empty() && truthy(a[0]));
    });
    into["abs"] = fn("abs", [](Interp&, Args& a, int line) {
        arity(a, 1, 1, "abs", line);
        const Value& v = a[0];
        if (v.is_integral()) {
            if (v.as_int() == INT64_MIN) raise("Overflow", "integer overflow", line);
            return Value(v.as_int() < 0 ? -v.as_int() : v.as_int());
        }
        if (v.is(Kind::Float)) return Value(std::fabs(v.as_float()));
        raise("TypeError", "bad operand type for abs(): '" + type_name(v) + "'", line);
    });
    into["min"] = fn("min", [](Interp&, Args& a, int line) { return extreme(a, line, false); });
    into["max"] = fn("max", [](Interp&, Args& a, int line) { return extreme(a, line, true); });
    into["sum"] = fn("sum", [](Interp&, Args& a, int line) {
        arity(a, 1, 2, "sum", line);
        Value acc = a.size() == 2 ? a[1] : Value(std::int64_t{0});
        for (const Value& v : iterate(a[0], line)) acc = binary_op("+", acc, v, line);
        return acc;
    });
    into["round"] = fn("round", round_value);
    into["list"] = fn("list", [](Interp&, Args& a, int line) {
        arity(a, 0, 1, "list", line);
        return Value::list(a.empty() ? List{} : iterate(a[0], line));
    });
    into["tuple"] = fn("tuple", [](Interp&, Args& a, int line) {
        arity(a, 0, 1, "tuple", line);
        return Value::tuple(a.empty() ? List{} : iterate(a[0], line));
    });
    into["sorted"] = fn("sorted", sorted);
    into["enumerate"] = fn("enumerate", [](Interp&, Args& a, int line) {
        arity(a, 1, 1, "enumerate", line);
        List out;
        std::int64_t i = 0;
        for (Value& v : iterate(a[0], line)) out.push_back(Value::tuple({Value(i++), std::move(v)}));
        return Value::list(std::move(out));
    });
    into["zip"] = fn("zip", [](Interp&, Args& a, int line) {
        std::vector<List> seqs;
        for (const Value& v : a) seqs.push_back(iterate(v, line));
        std::size_t n = seqs.empty() ? 0 : SIZE_MAX;
        for (const auto& s : seqs) n = std::min(n, s.size());
        List out;
        for (std::size_t i = 0; i < n; ++i) {
            List row;
            for (const auto& s : seqs) row.push_back(s[i]);
            out.push_back(Value::tuple(std::move(row)));
        }
        return Value::list(std::move(out));
    });
}

Value list_method(Interp&, const Value& self, const std::string& name, Args& a, int line) {
    List& items = self.list_items();
    const auto n = static_cast<std::int64_t>(items.size());
    if (name == "append") {
        arity(a, 1, 1, "append", line);
        items.push_back(a[0]);
        return Value();
    }
    if (name == "extend") {
        arity(a, 1, 1, "extend", line);
        const List more = iterate(a[0], line);
        items.insert(items.end(), more.begin(), more.end());
        return Value();
    }
    if (name == "pop") {
        arity(a, 0, 1, "pop", line);
        if (items.empty()) raise("IndexError", "pop from empty list", line);
        std::int64_t i = a.empty() ? n - 1 : arg_int(a, 0, "pop", line);
        if (i < 0) i += n;
        if (i < 0 || i >= n) raise("IndexError", "pop index out of range", line);
        Value v = items[static_cast<std::size_t>(i)];
        items.erase(items.begin() + i);
        return v;
    }
    if (name == "insert") {
        arity(a, 2, 2, "insert", line);
        std::int64_t i = arg_int(a, 0, "insert", line);
        if (i < 0) i = std::max<std::int64_t>(0, i + n);
        i = std::min(i, n);
        items.insert(items.begin() + i, a[1]);
        return Value();
    }
    if (name == "index") {
        arity(a, 1, 1, "index", line);
        for (std::int64_t i = 0; i < n; ++i) {
            if (values_equal(items[static_cast<std::size_t>(i)], a[0])) return i;
        }
        raise("ValueError", repr(a[0]) + " is not in list", line);
    }
    raise("AttributeError", "'list' object has no attribute '" + name + "'", line);
}

std::shared_ptr<Module> make_time_module() {
    auto m = std::make_shared<Module>();
    m->name = "time";
    m->members["ticks_ms"] = fn("ticks_ms", [](Interp& in, Args& a, int line) {
        arity(a, 0, 0, "ticks_ms", line);
        return Value(in.clock_ms);
    });
    m->members["sleep_ms"] = fn("sleep_ms", [](Interp& in, Args& a, int line) {
        arity(a, 1, 1, "sleep_ms", line);
        const std::int64_t ms = arg_int(a, 0, "sleep_ms", line);
        if (ms < 0) raise("ValueError", "sleep length must be non-negative", line);
        in.clock_ms += ms;
        return Value();
    });
    return m;
}

} // namespace virtcam::camscript
