#include <cmath>

#include "runtime.hpp"

namespace virtcam::camscript {

namespace {

struct StopSignal {};

std::string strip_code(const Error& e) {
    const std::string what = e.what();
    const std::string prefix = std::string(to_string(e.code())) + ": ";
    return what.rfind(prefix, 0) == 0 ? what.substr(prefix.size()) : what;
}

[[noreturn]] void unsupported(const std::string& op, const Value& a, const Value& b, int line) {
    raise("TypeError", "unsupported operand type(s) for " + op + ": '" + type_name(a) + "' and '" + type_name(b) + "'", line);
}

std::int64_t checked(bool overflow, const std::int64_t& v, int line) {
    if (overflow) raise("Overflow", "integer overflow", line);
    return v;
}

Value repeat(const Value& seq, std::int64_t n, int line) {
    if (n < 0) n = 0;
    if (seq.is(Kind::Str)) {
        const std::string& s = seq.as_str();
        if (!s.empty() && static_cast<std::uint64_t>(n) > 10'000'000 / s.size()) raise("ValueError", "repeated string is too long", line);
        std::string out;
        for (std::int64_t i = 0; i < n; ++i) out += s;
        return out;
    }
    const List& items = seq.items();
    if (!items.empty() && static_cast<std::uint64_t>(n) > 10'000'000 / items.size()) raise("ValueError", "repeated sequence is too long", line);
    List out;
    for (std::int64_t i = 0; i < n; ++i) out.insert(out.end(), items.begin(), items.end());
    return seq.is(Kind::Tuple) ? Value::tuple(std::move(out)) : Value::list(std::move(out));
}

bool is_seq(const Value& v) { return v.is(Kind::Str) || v.is(Kind::Tuple) || v.is(Kind::List); }

bool compare(const std::string& op, const Value& a, const Value& b, int line) {
    if (op == "==") return values_equal(a, b);
    if (op == "!=") return !values_equal(a, b);
    if (a.is_number() && b.is_number()) {
        if (a.is_integral() && b.is_integral()) {
            const std::int64_t x = a.as_int(), y = b.as_int();
            return op == "<" ? x < y : op == "<=" ? x <= y : op == ">" ? x > y : x >= y;
        }
        const double x = a.as_float(), y = b.as_float();
        return op == "<" ? x < y : op == "<=" ? x <= y : op == ">" ? x > y : x >= y;
    }
    if (a.is(Kind::Str) && b.is(Kind::Str)) {
        const int c = a.as_str().compare(b.as_str());
        return op == "<" ? c < 0 : op == "<=" ? c <= 0 : op == ">" ? c > 0 : c >= 0;
    }
    if ((a.is(Kind::Tuple) || a.is(Kind::List)) && a.kind() == b.kind()) {
        const List& x = a.items();
        const List& y = b.items();
        const std::size_t n = std::min(x.size(), y.size());
        for (std::size_t i = 0; i < n; ++i) {
            if (!values_equal(x[i], y[i])) return compare(op, x[i], y[i], line);
        }
        return compare(op, Value(static_cast<std::int64_t>(x.size())), Value(static_cast<std::int64_t>(y.size())), line);
    }
    raise("TypeError", "'" + op + "' not supported between instances of '" + type_name(a) + "' and '" + type_name(b) + "'", line);
}

} // namespace

std::string_view to_string(Status s) noexcept {
    switch (s) {
    case Status::Ok: return "ok";
    case Status::Error: return "error";
    case Status::Stopped: return "stopped";
    case Status::StepLimit: return "step-limit";
    }
    return "?";
}

bool less_than(const Value& a, const Value& b, int line) { return compare("<", a, b, line); }

Value binary_op(const std::string& op, const Value& a, const Value& b, int line) {
    if (op == "==" || op == "!=" || op == "<" || op == "<=" || op == ">" || op == ">=") return compare(op, a, b, line);
    const bool ints = a.is_integral() && b.is_integral();
    const bool nums = a.is_number() && b.is_number();
    std::int64_t r = 0;
    if (op == "+") {
        if (ints) return checked(__builtin_add_overflow(a.as_int(), b.as_int(), &r), r, line);
        if (nums) return a.as_float() + b.as_float();
        if (a.is(Kind::Str) && b.is(Kind::Str)) return a.as_str() + b.as_str();
        if ((a.is(Kind::Tuple) || a.is(Kind::List)) && a.kind() == b.kind()) {
            List out = a.items();
            out.insert(out.end(), b.items().begin(), b.items().end());
            return a.is(Kind::Tuple) ? Value::tuple(std::move(out)) : Value::list(std::move(out));
        }
        unsupported(op, a, b, line);
    }
    if (op == "-") {
        if (ints) return checked(__builtin_sub_overflow(a.as_int(), b.as_int(), &r), r, line);
        if (nums) return a.as_float() - b.as_float();
        unsupported(op, a, b, line);
    }
    if (op == "*") {
        if (ints) return checked(__builtin_mul_overflow(a.as_int(), b.as_int(), &r), r, line);
        if (nums) return a.as_float() * b.as_float();
        if (is_seq(a) && b.is_integral()) return repeat(a, b.as_int(), line);
        if (a.is_integral() && is_seq(b)) return repeat(b, a.as_int(), line);
        unsupported(op, a, b, line);
    }
    if (!nums) unsupported(op, a, b, line);
    if (op == "/") {
        if (b.as_float() == 0.0) raise("ZeroDivision", "division by zero", line);
        return a.as_float() / b.as_float();
    }
    if (op == "//") {
        if (ints) {
            const std::int64_t x = a.as_int(), y = b.as_int();
            if (y == 0) raise("ZeroDivision", "integer division or modulo by zero", line);
            if (x == INT64_MIN && y == -1) raise("Overflow", "integer overflow", line);
            std::int64_t q = x / y;
            if (x % y != 0 && ((x < 0) != (y < 0))) --q;
            return q;
        }
        if (b.as_float() == 0.0) raise("ZeroDivision", "float floor division by zero", line);
        return std::floor(a.as_float() / b.as_float());
    }
    if (op == "%") {
        if (ints) {
            const std::int64_t x = a.as_int(), y = b.as_int();
            if (y == 0) raise("ZeroDivision", "integer division or modulo by zero", line);
            if (y == -1) return std::int64_t{0};
            std::int64_t m = x % y;
            if (m != 0 && ((m < 0) != (y < 0))) m += y;
            return m;
        }
        const double x = a.as_float(), y = b.as_float();
        if (y == 0.0) raise("ZeroDivision", "float modulo", line);
        double m = std::fmod(x, y);
        if (m != 0.0 && ((m < 0) != (y < 0))) m += y;
        return m;
    }
    raise("SyntaxError", "unknown operator '" + op + "'", line);
}

Interp::Interp(Environment& env, const Limits& limits)
    : env_(env),
      limits_(limits),
      own_arena_(env.arena ? nullptr : std::make_unique<Arena>()),
      heap_(env.arena ? *env.arena : *own_arena_) {
    install_builtins(builtins_);
    modules_["sensor"] = make_sensor_module();
    modules_["image"] = make_image_module();
    modules_["time"] = make_time_module();
    // Modules are preloaded like on the camera; import just rebinds the name.
    for (const auto& [name, mod] : modules_) builtins_[name] = Value(mod);
}

Interp::~Interp() {
    globals_.clear();
    heap_.release_all();
}

void Interp::print(std::string_view text) {
    output_ += text;
    if (env_.on_print) env_.on_print(text);
}

sensor::Sensor& Interp::sensor(int line) {
    if (!env_.sensor) raise("RuntimeError", "no sensor attached", line);
    return *env_.sensor;
}

std::unique_lock<std::mutex> Interp::lock_sensor() {
    return env_.sensor_mutex ? std::unique_lock<std::mutex>(*env_.sensor_mutex) : std::unique_lock<std::mutex>();
}

Value Interp::snapshot(int line) {
    if (env_.max_frames && frames >= *env_.max_frames) throw StopSignal{};
    sensor::Sensor& s = sensor(line);
    auto lock = lock_sensor();
    auto& fb = heap_.frame_buffer;
    if (fb && fb->img.width() == s.width() && fb->img.height() == s.height() && fb->img.format() == s.config().pixformat) {
        s.snapshot_into(fb->img);
    } else {
        // The old frame buffer, if still referenced, becomes an ordinary image.
        fb.reset();
        heap_.collect();
        fb = heap_.adopt(s.snapshot(heap_.arena()));
    }
    if (lock.owns_lock()) lock.unlock();
    ++frames;
    if (env_.on_publish) env_.on_publish(fb->img);
    return Value(fb);
}

Report Interp::run(const Program& program) {
    Report r;
    try {
        exec_block(program.statements);
    } catch (const StopSignal&) {
        r.status = Status::Stopped;
    } catch (const ScriptError& e) {
        r.status = e.kind() == "StepLimit" ? Status::StepLimit : Status::Error;
        r.error = e.what();
        r.error_kind = e.kind();
        r.error_line = e.line();
    } catch (const Error& e) {
        r.status = Status::Error;
        r.error_kind = std::string(to_string(e.code()));
        r.error = e.what();
    } catch (const std::bad_alloc&) {
        r.status = Status::Error;
        r.error_kind = "MemoryError";
        r.error = "MemoryError: host memory exhausted";
    }
    globals_.clear();
    heap_.release_all();
    r.steps = steps_;
    r.output = output_;
    r.frames = frames;
    return r;
}

void Interp::step(int line) {
    if (++steps_ > limits_.max_steps) {
        raise("StepLimit", "step limit of " + std::to_string(limits_.max_steps) + " exceeded", line);
    }
}

Interp::Flow Interp::exec_block(const Block& b) {
    for (const auto& s : b) {
        heap_.collect();
        if (env_.stop && env_.stop->load(std::memory_order_relaxed)) throw StopSignal{};
        const Flow f = exec(*s);
        if (f != Flow::Normal) return f;
    }
    return Flow::Normal;
}

Interp::Flow Interp::exec(const Stmt& s) {
    step(s.line);
    switch (s.kind) {
    case StmtKind::Assign: assign(*s.target, eval(*s.value), s.line); return Flow::Normal;
    case StmtKind::AugAssign: {
        const Expr& t = *s.target;
        if (t.kind == ExprKind::Name) {
            Value cur = eval(t);
            Value rhs = eval(*s.value);
            if (cur.is(Kind::List) && s.op == "+") {
                const List add = iterate(rhs, s.line);
                cur.list_items().insert(cur.list_items().end(), add.begin(), add.end());
                return Flow::Normal;
            }
            globals_[t.text] = binary_op(s.op, cur, rhs, s.line);
            return Flow::Normal;
        }
        Value obj = eval(*t.kids[0]);
        Value idx = eval(*t.kids[1]);
        Value cur = index(obj, idx, t.line);
        Value rhs = eval(*s.value);
        Value result = binary_op(s.op, cur, rhs, s.line);
        if (!obj.is(Kind::List)) raise("TypeError", "'" + type_name(obj) + "' object does not support item assignment", s.line);
        List& items = obj.list_items();
        std::int64_t i = idx.as_int();
        if (i < 0) i += static_cast<std::int64_t>(items.size());
        items[static_cast<std::size_t>(i)] = std::move(result);
        return Flow::Normal;
    }
    case StmtKind::ExprStmt: eval(*s.value); return Flow::Normal;
    case StmtKind::If:
        for (const auto& br : s.branches) {
            if (truthy(eval(*br.cond))) return exec_block(br.body);
        }
        return exec_block(s.body);
    case StmtKind::While:
        while (truthy(eval(*s.value))) {
            if (exec_block(s.body) == Flow::Break) break;
        }
        return Flow::Normal;
    case StmtKind::For: {
        Value it = eval(*s.value);
        if (it.is(Kind::Range)) {
            const RangeVal r = it.range();
            const std::int64_t n = r.size();
            for (std::int64_t i = 0; i < n; ++i) {
                assign(*s.target, Value(r.at(i)), s.line);
                if (exec_block(s.body) == Flow::Break) break;
            }
            return Flow::Normal;
        }
        const List items = iterate(it, s.line);
        for (const Value& v : items) {
            assign(*s.target, v, s.line);
            if (exec_block(s.body) == Flow::Break) break;
        }
        return Flow::Normal;
    }
    case StmtKind::Break: return Flow::Break;
    case StmtKind::Continue: return Flow::Continue;
    case StmtKind::Pass: return Flow::Normal;
    case StmtKind::Import:
        for (const auto& m : s.modules) {
            const auto it = modules_.find(m);
            if (it == modules_.end()) raise("ImportError", "no module named '" + m + "'", s.line);
            globals_[m] = Value(it->second);
        }
        return Flow::Normal;
    }
    return Flow::Normal;
}

void Interp::assign(const Expr& target, Value v, int line) {
    switch (target.kind) {
    case ExprKind::Name: globals_[target.text] = std::move(v); return;
    case ExprKind::Index: {
        Value obj = eval(*target.kids[0]);
        Value idx = eval(*target.kids[1]);
        if (!obj.is(Kind::List)) raise("TypeError", "'" + type_name(obj) + "' object does not support item assignment", line);
        if (!idx.is_integral()) raise("TypeError", "list indices must be integers, not " + type_name(idx), line);
        List& items = obj.list_items();
        std::int64_t i = idx.as_int();
        const auto n = static_cast<std::int64_t>(items.size());
        if (i < 0) i += n;
        if (i < 0 || i >= n) raise("IndexError", "list assignment index out of range", line);
        items[static_cast<std::size_t>(i)] = std::move(v);
        return;
    }
    case ExprKind::Tuple: {
        if (!v.is(Kind::Tuple) && !v.is(Kind::List)) raise("TypeError", "cannot unpack non-sequence " + type_name(v), line);
        const List items = v.items();
        const std::size_t n = target.kids.size();
        if (items.size() < n) {
            raise("ValueError", "not enough values to unpack (expected " + std::to_string(n) + ", got " + std::to_string(items.size()) + ")", line);
        }
        if (items.size() > n) raise("ValueError", "too many values to unpack (expected " + std::to_string(n) + ")", line);
        for (std::size_t i = 0; i < n; ++i) assign(*target.kids[i], items[i], line);
        return;
    }
    default: raise("SyntaxError", "cannot assign to expression", line);
    }
}

Value Interp::index(const Value& obj, const Value& idx, int line) {
    if (!obj.is(Kind::Tuple) && !obj.is(Kind::List) && !obj.is(Kind::Str) && !obj.is(Kind::Range)) {
        raise("TypeError", "'" + type_name(obj) + "' object is not subscriptable", line);
    }
    if (!idx.is_integral()) raise("TypeError", type_name(obj) + " indices must be integers, not " + type_name(idx), line);
    std::int64_t n = 0;
    if (obj.is(Kind::Str)) n = static_cast<std::int64_t>(obj.as_str().size());
    else if (obj.is(Kind::Range)) n = obj.range().size();
    else n = static_cast<std::int64_t>(obj.items().size());
    std::int64_t i = idx.as_int();
    if (i < 0) i += n;
    if (i < 0 || i >= n) raise("IndexError", type_name(obj) + " index out of range", line);
    if (obj.is(Kind::Str)) return std::string(1, obj.as_str()[static_cast<std::size_t>(i)]);
    if (obj.is(Kind::Range)) return obj.range().at(i);
    return obj.items()[static_cast<std::size_t>(i)];
}

Value Interp::eval(const Expr& e) {
    step(e.line);
    switch (e.kind) {
    case ExprKind::Int: return e.ival;
    case ExprKind::Float: return e.fval;
    case ExprKind::Str: return e.text;
    case ExprKind::Bool: return e.ival != 0;
    case ExprKind::None: return Value();
    case ExprKind::Name: {
        if (const auto it = globals_.find(e.text); it != globals_.end()) return it->second;
        if (const auto it = builtins_.find(e.text); it != builtins_.end()) return it->second;
        raise("NameError", "name '" + e.text + "' is not defined", e.line);
    }
    case ExprKind::Attr: return get_attr(eval(*e.kids[0]), e.text, e.line);
    case ExprKind::Call: {
        Value callee = eval(*e.kids[0]);
        Args args;
        args.reserve(e.kids.size() - 1);
        for (std::size_t i = 1; i < e.kids.size(); ++i) args.push_back(eval(*e.kids[i]));
        return call(callee, args, e.line);
    }
    case ExprKind::Index: {
        Value obj = eval(*e.kids[0]);
        Value idx = eval(*e.kids[1]);
        return index(obj, idx, e.line);
    }
    case ExprKind::Unary: {
        Value v = eval(*e.kids[0]);
        if (e.text == "not") return !truthy(v);
        if (v.is_integral()) {
            if (v.as_int() == INT64_MIN) raise("Overflow", "integer overflow", e.line);
            return -v.as_int();
        }
        if (v.is(Kind::Float)) return -v.as_float();
        raise("TypeError", "bad operand type for unary -: '" + type_name(v) + "'", e.line);
    }
    case ExprKind::Binary: {
        if (e.text == "and" || e.text == "or") {
            Value l = eval(*e.kids[0]);
            if (truthy(l) == (e.text == "or")) return l;
            return eval(*e.kids[1]);
        }
        Value l = eval(*e.kids[0]);
        Value r = eval(*e.kids[1]);
        return binary_op(e.text, l, r, e.line);
    }
    case ExprKind::Tuple:
    case ExprKind::List: {
        List items;
        items.reserve(e.kids.size());
        for (const auto& k : e.kids) items.push_back(eval(*k));
        return e.kind == ExprKind::Tuple ? Value::tuple(std::move(items)) : Value::list(std::move(items));
    }
    }
    return Value();
}

Value Interp::call(const Value& callee, Args& args, int line) {
    try {
        if (callee.is(Kind::Builtin)) return callee.builtin()->fn(*this, args, line);
        if (callee.is(Kind::Method)) {
            const Method& m = *callee.method();
            if (m.self.is(Kind::Image)) return image_method(*this, m.self, m.name, args, line);
            if (m.self.is(Kind::List)) return list_method(*this, m.self, m.name, args, line);
        }
    } catch (const Error& err) {
        raise(std::string(to_string(err.code())), strip_code(err), line);
    }
    raise("TypeError", "'" + type_name(callee) + "' object is not callable", line);
}

Value Interp::get_attr(const Value& obj, const std::string& name, int line) {
    if (obj.is(Kind::Module)) {
        const auto& members = obj.module()->members;
        const auto it = members.find(name);
        if (it == members.end()) raise("AttributeError", "module '" + obj.module()->name + "' has no attribute '" + name + "'", line);
        return it->second;
    }
    const bool list_method_name = name == "append" || name == "pop" || name == "insert" || name == "extend" || name == "index";
    if ((obj.is(Kind::Image) && image_has_method(name)) || (obj.is(Kind::List) && list_method_name)) {
        return Value(std::make_shared<Method>(Method{obj, name}));
    }
    raise("AttributeError", "'" + type_name(obj) + "' object has no attribute '" + name + "'", line);
}

Report execute(const Program& program, Environment& env, const Limits& limits) {
    Interp in(env, limits);
    return in.run(program);
}

Report run_source(std::string_view source, Environment& env, const Limits& limits) {
    Program p;
    try {
        p = parse_source(source);
    } catch (const ScriptError& e) {
        Report r;
        r.status = Status::Error;
        r.error = e.what();
        r.error_kind = e.kind();
        r.error_line = e.line();
        return r;
    }
    return execute(p, env, limits);
}

} // namespace virtcam::camscript
