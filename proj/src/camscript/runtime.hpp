#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "virtcam/camscript/interpreter.hpp"
#include "virtcam/features.hpp"

namespace virtcam::camscript {

class Interp;
class Value;

using Args = std::vector<Value>;
using List = std::vector<Value>;

struct ImageObj {
    Image img;
};

struct RangeVal {
    std::int64_t start = 0, stop = 0, step = 1;
    std::int64_t size() const noexcept;
    std::int64_t at(std::int64_t i) const noexcept { return start + i * step; }
};

struct Module;
struct Builtin;
struct Method;

enum class Kind { None, Bool, Int, Float, Str, Tuple, List, Image, Range, Module, Builtin, Method };

class Value {
public:
    using Storage = std::variant<std::monostate, bool, std::int64_t, double, std::string, std::shared_ptr<const List>,
                                 std::shared_ptr<List>, std::shared_ptr<ImageObj>, RangeVal, std::shared_ptr<Module>,
                                 std::shared_ptr<Builtin>, std::shared_ptr<Method>>;

    Value() = default;
    Value(bool b) : v_(b) {}
    Value(std::int64_t i) : v_(i) {}
    Value(int i) : v_(static_cast<std::int64_t>(i)) {}
    Value(double d) : v_(d) {}
    Value(std::string s) : v_(std::move(s)) {}
    Value(const char* s) : v_(std::string(s)) {}
    Value(std::shared_ptr<ImageObj> img) : v_(std::move(img)) {}
    Value(RangeVal r) : v_(r) {}
    Value(std::shared_ptr<Module> m) : v_(std::move(m)) {}
    Value(std::shared_ptr<Builtin> b) : v_(std::move(b)) {}
    Value(std::shared_ptr<Method> m) : v_(std::move(m)) {}

    static Value tuple(List items) { Value v; v.v_ = std::make_shared<const List>(std::move(items)); return v; }
    static Value list(List items) { Value v; v.v_ = std::make_shared<List>(std::move(items)); return v; }

    Kind kind() const noexcept { return static_cast<Kind>(v_.index()); }
    bool is(Kind k) const noexcept { return kind() == k; }
    /// Int or Bool.
    bool is_integral() const noexcept { return is(Kind::Int) || is(Kind::Bool); }
    bool is_number() const noexcept { return is_integral() || is(Kind::Float); }

    bool as_bool() const { return std::get<bool>(v_); }
    std::int64_t as_int() const { return is(Kind::Bool) ? (std::get<bool>(v_) ? 1 : 0) : std::get<std::int64_t>(v_); }
    double as_float() const { return is(Kind::Float) ? std::get<double>(v_) : static_cast<double>(as_int()); }
    const std::string& as_str() const { return std::get<std::string>(v_); }
    const List& items() const {
        return is(Kind::Tuple) ? *std::get<std::shared_ptr<const List>>(v_) : *std::get<std::shared_ptr<List>>(v_);
    }
    List& list_items() const { return *std::get<std::shared_ptr<List>>(v_); }
    const std::shared_ptr<List>& list_ptr() const { return std::get<std::shared_ptr<List>>(v_); }
    const std::shared_ptr<ImageObj>& image() const { return std::get<std::shared_ptr<ImageObj>>(v_); }
    const RangeVal& range() const { return std::get<RangeVal>(v_); }
    const std::shared_ptr<Module>& module() const { return std::get<std::shared_ptr<Module>>(v_); }
    const std::shared_ptr<Builtin>& builtin() const { return std::get<std::shared_ptr<Builtin>>(v_); }
    const std::shared_ptr<Method>& method() const { return std::get<std::shared_ptr<Method>>(v_); }

private:
    Storage v_;
};

using BuiltinFn = std::function<Value(Interp&, Args&, int line)>;

struct Builtin {
    std::string name;
    BuiltinFn fn;
};

struct Module {
    std::string name;
    std::map<std::string, Value> members;
};

struct Method {
    Value self;
    std::string name;
};

std::string type_name(const Value& v);
std::string repr(const Value& v);
std::string str(const Value& v);
bool truthy(const Value& v);
bool values_equal(const Value& a, const Value& b);

/// Binary operator semantics shared by the evaluator and builtins such as sum().
Value binary_op(const std::string& op, const Value& a, const Value& b, int line);
bool less_than(const Value& a, const Value& b, int line);

[[noreturn]] void raise(const std::string& kind, const std::string& message, int line);

/// Arena images owned by the script. Images are created in allocation order,
/// so the stack mirrors the arena; unreachable images are reclaimed at
/// statement boundaries, compacting when a dead image sits below live ones.
class ImageHeap {
public:
    explicit ImageHeap(Arena& arena) : arena_(arena) {}
    ~ImageHeap() { release_all(); }

    Arena& arena() noexcept { return arena_; }
    std::shared_ptr<ImageObj> adopt(Image img);
    void collect();
    void release_all() noexcept;
    std::size_t size() const noexcept { return objs_.size(); }

    std::shared_ptr<ImageObj> frame_buffer;

private:
    bool dead(const std::shared_ptr<ImageObj>& o) const noexcept;

    Arena& arena_;
    std::vector<std::shared_ptr<ImageObj>> objs_;
};

class Interp {
public:
    Interp(Environment& env, const Limits& limits);
    ~Interp();

    Report run(const Program& program);

    // Used by the builtin API.
    Environment& env() noexcept { return env_; }
    ImageHeap& heap() noexcept { return heap_; }
    void print(std::string_view text);
    Value image_value(Image img) { return Value(heap_.adopt(std::move(img))); }
    sensor::Sensor& sensor(int line);
    std::unique_lock<std::mutex> lock_sensor();
    Value snapshot(int line);
    std::int64_t clock_ms = 0;
    std::uint64_t frames = 0;
    std::map<std::string, std::shared_ptr<const features::Cascade>> cascades;

    Value call(const Value& callee, Args& args, int line);
    Value get_attr(const Value& obj, const std::string& name, int line);

private:
    enum class Flow { Normal, Break, Continue };

    Flow exec_block(const Block& b);
    Flow exec(const Stmt& s);
    Value eval(const Expr& e);
    void assign(const Expr& target, Value v, int line);
    void step(int line);
    Value index(const Value& obj, const Value& idx, int line);

    Environment& env_;
    Limits limits_;
    std::unique_ptr<Arena> own_arena_;
    ImageHeap heap_;
    std::uint64_t steps_ = 0;
    std::string output_;
    std::unordered_map<std::string, Value> globals_;
    std::unordered_map<std::string, Value> builtins_;
    std::map<std::string, std::shared_ptr<Module>> modules_;
};

/// Builtin functions and modules.
void install_builtins(std::unordered_map<std::string, Value>& into);
std::shared_ptr<Module> make_sensor_module();
std::shared_ptr<Module> make_image_module();
std::shared_ptr<Module> make_time_module();

Value image_method(Interp& in, const Value& self, const std::string& name, Args& args, int line);
bool image_has_method(const std::string& name);
Value list_method(Interp& in, const Value& self, const std::string& name, Args& args, int line);

// Argument helpers for builtins.
void arity(const Args& a, std::size_t lo, std::size_t hi, const std::string& fn, int line);
std::int64_t arg_int(const Args& a, std::size_t i, const std::string& fn, int line);
int arg_i32(const Args& a, std::size_t i, const std::string& fn, int line);
double arg_number(const Args& a, std::size_t i, const std::string& fn, int line);
const std::string& arg_str(const Args& a, std::size_t i, const std::string& fn, int line);
bool arg_flag(const Args& a, std::size_t i, const std::string& fn, int line);
const List& arg_seq(const Args& a, std::size_t i, const std::string& fn, int line);

/// Items of any iterable value (range, list, tuple, str).
List iterate(const Value& v, int line);

} // namespace virtcam::camscript
