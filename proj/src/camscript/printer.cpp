#include <charconv>
#include <cmath>
#include <cstdio>

#include "virtcam/camscript/ast.hpp"

namespace virtcam::camscript {

namespace {

int precedence(const Expr& e) {
    switch (e.kind) {
    case ExprKind::Binary:
        if (e.text == "or") return 1;
        if (e.text == "and") return 2;
        if (e.text == "+" || e.text == "-") return 5;
        if (e.text == "*" || e.text == "/" || e.text == "//" || e.text == "%") return 6;
        return 4;  // comparisons
    case ExprKind::Unary: return e.text == "not" ? 3 : 7;
    case ExprKind::Attr:
    case ExprKind::Call:
    case ExprKind::Index: return 8;
    default: return 9;
    }
}

std::string quote(const std::string& s) {
    std::string out = "'";
    for (unsigned char c : s) {
        switch (c) {
        case '\\': out += "\\\\"; break;
        case '\'': out += "\\'"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        case '\r': out += "\\r"; break;
        default:
            if (c < 0x20 || c == 0x7F) {
                char buf[8];
                std::snprintf(buf, sizeof buf, "\\x%02x", c);
                out += buf;
            } else {
                out.push_back(static_cast<char>(c));
            }
        }
    }
    return out + "'";
}

void print(const Expr& e, std::string& out);

void print_wrapped(const Expr& e, bool parens, std::string& out) {
    if (parens) out.push_back('(');
    print(e, out);
    if (parens) out.push_back(')');
}

void print(const Expr& e, std::string& out) {
    switch (e.kind) {
    case ExprKind::Int: out += std::to_string(e.ival); return;
    case ExprKind::Float: out += format_float(e.fval); return;
    case ExprKind::Str: out += quote(e.text); return;
    case ExprKind::Bool: out += e.ival ? "True" : "False"; return;
    case ExprKind::None: out += "None"; return;
    case ExprKind::Name: out += e.text; return;
    case ExprKind::Attr: {
        const Expr& recv = *e.kids[0];
        const bool numeric = recv.kind == ExprKind::Int || recv.kind == ExprKind::Float;
        print_wrapped(recv, numeric || precedence(recv) < 8, out);
        out += "." + e.text;
        return;
    }
    case ExprKind::Call:
        print_wrapped(*e.kids[0], precedence(*e.kids[0]) < 8, out);
        out.push_back('(');
        for (std::size_t i = 1; i < e.kids.size(); ++i) {
            if (i > 1) out += ", ";
            print(*e.kids[i], out);
        }
        out.push_back(')');
        return;
    case ExprKind::Index:
        print_wrapped(*e.kids[0], precedence(*e.kids[0]) < 8, out);
        out.push_back('[');
        print(*e.kids[1], out);
        out.push_back(']');
        return;
    case ExprKind::Unary: {
        const Expr& operand = *e.kids[0];
        if (e.text == "not") {
            out += "not ";
            print_wrapped(operand, precedence(operand) < 3, out);
        } else {
            out += "-";
            print_wrapped(operand, precedence(operand) < 7, out);
        }
        return;
    }
    case ExprKind::Binary: {
        const int p = precedence(e);
        const Expr& l = *e.kids[0];
        const Expr& r = *e.kids[1];
        print_wrapped(l, p == 4 ? precedence(l) <= p : precedence(l) < p, out);
        out += " " + e.text + " ";
        print_wrapped(r, precedence(r) <= p, out);
        return;
    }
    case ExprKind::Tuple:
        out.push_back('(');
        for (std::size_t i = 0; i < e.kids.size(); ++i) {
            if (i > 0) out += ", ";
            print(*e.kids[i], out);
        }
        if (e.kids.size() == 1) out.push_back(',');
        out.push_back(')');
        return;
    case ExprKind::List:
        out.push_back('[');
        for (std::size_t i = 0; i < e.kids.size(); ++i) {
            if (i > 0) out += ", ";
            print(*e.kids[i], out);
        }
        out.push_back(']');
        return;
    }
}

void print_block(const Block& b, int indent, std::string& out);

void print_stmt(const Stmt& s, int indent, std::string& out) {
    const std::string pad(static_cast<std::size_t>(indent) * 4, ' ');
    switch (s.kind) {
    case StmtKind::Assign:
        out += pad;
        print(*s.target, out);
        out += " = ";
        print(*s.value, out);
        out += "\n";
        return;
    case StmtKind::AugAssign:
        out += pad;
        print(*s.target, out);
        out += " " + s.op + "= ";
        print(*s.value, out);
        out += "\n";
        return;
    case StmtKind::ExprStmt:
        out += pad;
        print(*s.value, out);
        out += "\n";
        return;
    case StmtKind::If:
        for (std::size_t i = 0; i < s.branches.size(); ++i) {
            out += pad + (i == 0 ? "if " : "elif ");
            print(*s.branches[i].cond, out);
            out += ":\n";
            print_block(s.branches[i].body, indent + 1, out);
        }
        if (!s.body.empty()) {
            out += pad + "else:\n";
            print_block(s.body, indent + 1, out);
        }
        return;
    case StmtKind::While:
        out += pad + "while ";
        print(*s.value, out);
        out += ":\n";
        print_block(s.body, indent + 1, out);
        return;
    case StmtKind::For:
        out += pad + "for ";
        print(*s.target, out);
        out += " in ";
        print(*s.value, out);
        out += ":\n";
        print_block(s.body, indent + 1, out);
        return;
    case StmtKind::Break: out += pad + "break\n"; return;
    case StmtKind::Continue: out += pad + "continue\n"; return;
    case StmtKind::Pass: out += pad + "pass\n"; return;
    case StmtKind::Import:
        out += pad + "import ";
        for (std::size_t i = 0; i < s.modules.size(); ++i) {
            if (i > 0) out += ", ";
            out += s.modules[i];
        }
        out += "\n";
        return;
    }
}

void print_block(const Block& b, int indent, std::string& out) {
    for (const auto& s : b) print_stmt(*s, indent, out);
}

bool equal_ptr(const ExprPtr& a, const ExprPtr& b) {
    if (!a || !b) return !a && !b;
    return equal(*a, *b);
}

bool equal_block(const Block& a, const Block& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!equal(*a[i], *b[i])) return false;
    }
    return true;
}

} // namespace

std::string format_float(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific);
    const std::string sci(buf, r.ptr);
    std::string sign;
    std::size_t i = 0;
    if (sci[0] == '-') {
        sign = "-";
        i = 1;
    }
    const std::size_t epos = sci.find('e');
    std::string digits;
    for (std::size_t k = i; k < epos; ++k) {
        if (sci[k] != '.') digits.push_back(sci[k]);
    }
    const int exp = std::stoi(sci.substr(epos + 1));
    if (exp >= -4 && exp < 16) {
        std::string out = sign;
        if (exp >= 0) {
            const std::size_t int_len = static_cast<std::size_t>(exp) + 1;
            if (digits.size() <= int_len) {
                out += digits + std::string(int_len - digits.size(), '0') + ".0";
            } else {
                out += digits.substr(0, int_len) + "." + digits.substr(int_len);
            }
        } else {
            out += "0." + std::string(static_cast<std::size_t>(-exp - 1), '0') + digits;
        }
        return out;
    }
    std::string out = sign + digits.substr(0, 1);
    if (digits.size() > 1) out += "." + digits.substr(1);
    char ebuf[16];
    std::snprintf(ebuf, sizeof ebuf, "e%c%02d", exp < 0 ? '-' : '+', std::abs(exp));
    return out + ebuf;
}

std::string print_expr(const Expr& e) {
    std::string out;
    print(e, out);
    return out;
}

std::string print_program(const Program& p) {
    std::string out;
    print_block(p.statements, 0, out);
    return out;
}

bool equal(const Expr& a, const Expr& b) {
    if (a.kind != b.kind || a.text != b.text || a.kids.size() != b.kids.size()) return false;
    if (a.kind == ExprKind::Int || a.kind == ExprKind::Bool) {
        if (a.ival != b.ival) return false;
    }
    if (a.kind == ExprKind::Float) {
        if (!(a.fval == b.fval || (std::isnan(a.fval) && std::isnan(b.fval)))) return false;
    }
    for (std::size_t i = 0; i < a.kids.size(); ++i) {
        if (!equal(*a.kids[i], *b.kids[i])) return false;
    }
    return true;
}

bool equal(const Stmt& a, const Stmt& b) {
    if (a.kind != b.kind || a.op != b.op || a.modules != b.modules) return false;
    if (!equal_ptr(a.target, b.target) || !equal_ptr(a.value, b.value)) return false;
    if (a.branches.size() != b.branches.size()) return false;
    for (std::size_t i = 0; i < a.branches.size(); ++i) {
        if (!equal_ptr(a.branches[i].cond, b.branches[i].cond) || !equal_block(a.branches[i].body, b.branches[i].body)) {
            return false;
        }
    }
    return equal_block(a.body, b.body);
}

bool equal(const Program& a, const Program& b) { return equal_block(a.statements, b.statements); }

} // namespace virtcam::camscript
