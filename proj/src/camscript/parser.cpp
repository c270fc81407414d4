#include <charconv>
#include <cstdlib>
#include <limits>

#include "virtcam/camscript/ast.hpp"

namespace virtcam::camscript {

namespace {

bool is_compare(const Token& t) {
    if (t.kind != TokenKind::Op) return false;
    const std::string& s = t.lexeme;
    return s == "==" || s == "!=" || s == "<" || s == "<=" || s == ">" || s == ">=";
}

std::string describe(const Token& t) {
    switch (t.kind) {
    case TokenKind::Newline: return "end of line";
    case TokenKind::Indent: return "indent";
    case TokenKind::Dedent: return "dedent";
    case TokenKind::Eof: return "end of input";
    case TokenKind::String: return "string";
    default: return "'" + t.lexeme + "'";
    }
}

class Parser {
public:
    explicit Parser(const std::vector<Token>& tokens) : toks_(tokens) {
        if (toks_.empty() || toks_.back().kind != TokenKind::Eof) {
            throw ScriptError("SyntaxError", "token stream must end with EOF", toks_.empty() ? 1 : toks_.back().line);
        }
    }

    Program program() {
        Program p;
        while (peek().kind != TokenKind::Eof) statement(p.statements);
        return p;
    }

private:
    const Token& peek(std::size_t ahead = 0) const {
        const std::size_t i = std::min(pos_ + ahead, toks_.size() - 1);
        return toks_[i];
    }
    const Token& take() {
        const Token& t = peek();
        if (pos_ < toks_.size() - 1) ++pos_;
        return t;
    }
    [[noreturn]] void error(const std::string& expected) const {
        const Token& t = peek();
        throw ScriptError("SyntaxError", "expected " + expected + ", got " + describe(t), t.line, t.column);
    }
    void expect_op(std::string_view op) {
        if (!peek().is_op(op)) error("'" + std::string(op) + "'");
        take();
    }
    void expect(TokenKind k, const char* what) {
        if (peek().kind != k) error(what);
        take();
    }
    bool accept_op(std::string_view op) {
        if (!peek().is_op(op)) return false;
        take();
        return true;
    }

    struct DepthGuard {
        Parser& p;
        explicit DepthGuard(Parser& parser) : p(parser) {
            if (++p.depth_ > kMaxDepth) {
                const Token& t = p.peek();
                throw ScriptError("SyntaxError", "nesting too deep", t.line, t.column);
            }
        }
        ~DepthGuard() { --p.depth_; }
    };
    static constexpr int kMaxDepth = 200;
    int loops_ = 0;

    ExprPtr node(ExprKind k, const Token& at) {
        auto e = std::make_unique<Expr>();
        e->kind = k;
        e->line = at.line;
        e->column = at.column;
        return e;
    }

    void statement(Block& out) {
        DepthGuard guard(*this);
        const Token& t = peek();
        if (t.is_keyword("if")) return if_stmt(out);
        if (t.is_keyword("while")) return while_stmt(out);
        if (t.is_keyword("for")) return for_stmt(out);
        simple_line(out);
    }

    void simple_line(Block& out) {
        out.push_back(simple());
        expect(TokenKind::Newline, "end of line");
    }

    StmtPtr simple() {
        const Token& t = peek();
        auto s = std::make_unique<Stmt>();
        s->line = t.line;
        if (t.is_keyword("pass") || t.is_keyword("break") || t.is_keyword("continue")) {
            s->kind = t.lexeme == "pass" ? StmtKind::Pass : (t.lexeme == "break" ? StmtKind::Break : StmtKind::Continue);
            if (s->kind != StmtKind::Pass && loops_ == 0) {
                throw ScriptError("SyntaxError", "'" + t.lexeme + "' outside loop", t.line, t.column);
            }
            take();
            return s;
        }
        if (t.is_keyword("import")) {
            take();
            s->kind = StmtKind::Import;
            do {
                if (peek().kind != TokenKind::Ident) error("module name");
                s->modules.push_back(take().lexeme);
            } while (accept_op(","));
            return s;
        }
        ExprPtr first = exprlist();
        if (peek().is_op("=")) {
            take();
            check_target(*first, false);
            s->kind = StmtKind::Assign;
            s->target = std::move(first);
            s->value = exprlist();
            if (peek().is_op("=")) error("end of line (chained assignment is not supported)");
            return s;
        }
        static const char* kAug[] = {"+=", "-=", "*=", "/=", "//=", "%="};
        for (const char* op : kAug) {
            if (peek().is_op(op)) {
                take();
                check_target(*first, true);
                s->kind = StmtKind::AugAssign;
                s->op = std::string(op, std::char_traits<char>::length(op) - 1);
                s->target = std::move(first);
                s->value = expr();
                return s;
            }
        }
        s->kind = StmtKind::ExprStmt;
        s->value = std::move(first);
        return s;
    }

    void check_target(const Expr& e, bool augmented) {
        if (e.kind == ExprKind::Name || e.kind == ExprKind::Index) return;
        if (!augmented && e.kind == ExprKind::Tuple && !e.kids.empty()) {
            for (const auto& k : e.kids) {
                if (k->kind != ExprKind::Name) {
                    throw ScriptError("SyntaxError", "tuple assignment targets must be names", k->line, k->column);
                }
            }
            return;
        }
        throw ScriptError("SyntaxError", "cannot assign to expression", e.line, e.column);
    }

    Block suite() {
        expect_op(":");
        Block body;
        if (peek().kind != TokenKind::Newline) {
            simple_line(body);
            return body;
        }
        take();
        expect(TokenKind::Indent, "an indented block");
        while (peek().kind != TokenKind::Dedent && peek().kind != TokenKind::Eof) statement(body);
        expect(TokenKind::Dedent, "dedent");
        return body;
    }

    void if_stmt(Block& out) {
        auto s = std::make_unique<Stmt>();
        s->kind = StmtKind::If;
        s->line = take().line;
        Branch first;
        first.cond = expr();
        first.body = suite();
        s->branches.push_back(std::move(first));
        while (peek().is_keyword("elif")) {
            take();
            Branch b;
            b.cond = expr();
            b.body = suite();
            s->branches.push_back(std::move(b));
        }
        if (peek().is_keyword("else")) {
            take();
            s->body = suite();
        }
        out.push_back(std::move(s));
    }

    void while_stmt(Block& out) {
        auto s = std::make_unique<Stmt>();
        s->kind = StmtKind::While;
        s->line = take().line;
        s->value = expr();
        ++loops_;
        s->body = suite();
        --loops_;
        out.push_back(std::move(s));
    }

    // NAME, or a comma list of names, optionally parenthesized.
    ExprPtr loop_target() {
        const bool paren = peek().is_op("(");
        const Token& first = paren ? take() : peek();
        auto tuple = node(ExprKind::Tuple, first);
        bool comma = false;
        for (;;) {
            const Token& name = peek();
            if (name.kind != TokenKind::Ident) error("loop variable name");
            auto n = node(ExprKind::Name, name);
            n->text = take().lexeme;
            tuple->kids.push_back(std::move(n));
            if (!peek().is_op(",")) break;
            take();
            comma = true;
            if (paren ? peek().is_op(")") : peek().is_keyword("in")) break;
        }
        if (paren) {
            if (!peek().is_op(")")) error("')'");
            take();
        }
        if (!comma) return std::move(tuple->kids[0]);
        return tuple;
    }

    void for_stmt(Block& out) {
        auto s = std::make_unique<Stmt>();
        s->kind = StmtKind::For;
        s->line = take().line;
        s->target = loop_target();
        if (!peek().is_keyword("in")) error("'in'");
        take();
        s->value = exprlist();
        ++loops_;
        s->body = suite();
        --loops_;
        out.push_back(std::move(s));
    }

    bool starts_expr(const Token& t) const {
        switch (t.kind) {
        case TokenKind::Ident:
        case TokenKind::Int:
        case TokenKind::Float:
        case TokenKind::String: return true;
        case TokenKind::Keyword: return t.lexeme == "not" || t.lexeme == "True" || t.lexeme == "False" || t.lexeme == "None";
        case TokenKind::Op: return t.lexeme == "(" || t.lexeme == "[" || t.lexeme == "-";
        default: return false;
        }
    }

    /// expr (',' expr)* [','] -- a bare tuple when any comma appears.
    ExprPtr exprlist() {
        const Token& start = peek();
        ExprPtr first = expr();
        if (!peek().is_op(",")) return first;
        auto t = node(ExprKind::Tuple, start);
        t->kids.push_back(std::move(first));
        while (accept_op(",")) {
            if (!starts_expr(peek())) break;
            t->kids.push_back(expr());
        }
        return t;
    }

    ExprPtr expr() {
        DepthGuard guard(*this);
        return or_expr();
    }

    ExprPtr binary(const Token& at, std::string op, ExprPtr l, ExprPtr r) {
        auto e = node(ExprKind::Binary, at);
        e->text = std::move(op);
        e->kids.push_back(std::move(l));
        e->kids.push_back(std::move(r));
        return e;
    }

    ExprPtr or_expr() {
        ExprPtr l = and_expr();
        while (peek().is_keyword("or")) {
            const Token& t = take();
            l = binary(t, "or", std::move(l), and_expr());
        }
        return l;
    }

    ExprPtr and_expr() {
        ExprPtr l = not_expr();
        while (peek().is_keyword("and")) {
            const Token& t = take();
            l = binary(t, "and", std::move(l), not_expr());
        }
        return l;
    }

    ExprPtr not_expr() {
        DepthGuard guard(*this);
        if (peek().is_keyword("not")) {
            const Token& t = take();
            auto e = node(ExprKind::Unary, t);
            e->text = "not";
            e->kids.push_back(not_expr());
            return e;
        }
        return comparison();
    }

    ExprPtr comparison() {
        ExprPtr l = arith();
        if (is_compare(peek())) {
            const Token& t = take();
            std::string op = t.lexeme;
            l = binary(t, std::move(op), std::move(l), arith());
            if (is_compare(peek())) {
                const Token& c = peek();
                throw ScriptError("SyntaxError", "chained comparisons are not supported", c.line, c.column);
            }
        }
        return l;
    }

    ExprPtr arith() {
        ExprPtr l = term();
        while (peek().is_op("+") || peek().is_op("-")) {
            const Token& t = take();
            std::string op = t.lexeme;
            l = binary(t, std::move(op), std::move(l), term());
        }
        return l;
    }

    ExprPtr term() {
        ExprPtr l = unary();
        while (peek().is_op("*") || peek().is_op("/") || peek().is_op("//") || peek().is_op("%")) {
            const Token& t = take();
            std::string op = t.lexeme;
            l = binary(t, std::move(op), std::move(l), unary());
        }
        return l;
    }

    ExprPtr unary() {
        DepthGuard guard(*this);
        if (peek().is_op("-")) {
            const Token& t = take();
            auto e = node(ExprKind::Unary, t);
            e->text = "-";
            e->kids.push_back(unary());
            return e;
        }
        return postfix();
    }

    ExprPtr postfix() {
        ExprPtr e = atom();
        for (;;) {
            if (peek().is_op(".")) {
                const Token& dot = take();
                if (peek().kind != TokenKind::Ident) error("attribute name");
                auto a = node(ExprKind::Attr, dot);
                a->text = take().lexeme;
                a->kids.push_back(std::move(e));
                e = std::move(a);
            } else if (peek().is_op("(")) {
                const Token& open = take();
                auto c = node(ExprKind::Call, open);
                c->kids.push_back(std::move(e));
                if (!peek().is_op(")")) {
                    do {
                        if (peek().is_op(")")) break;
                        c->kids.push_back(expr());
                    } while (accept_op(","));
                }
                expect_op(")");
                e = std::move(c);
            } else if (peek().is_op("[")) {
                const Token& open = take();
                auto ix = node(ExprKind::Index, open);
                ix->kids.push_back(std::move(e));
                ix->kids.push_back(expr());
                expect_op("]");
                e = std::move(ix);
            } else {
                return e;
            }
        }
    }

    ExprPtr atom() {
        const Token& t = peek();
        switch (t.kind) {
        case TokenKind::Int: {
            take();
            auto e = node(ExprKind::Int, t);
            const bool hex = t.lexeme.size() > 2 && (t.lexeme[1] == 'x' || t.lexeme[1] == 'X');
            const char* b = t.lexeme.data() + (hex ? 2 : 0);
            const char* end = t.lexeme.data() + t.lexeme.size();
            const auto r = std::from_chars(b, end, e->ival, hex ? 16 : 10);
            if (r.ec != std::errc{} || r.ptr != end) {
                throw ScriptError("SyntaxError", "integer literal out of range", t.line, t.column);
            }
            return e;
        }
        case TokenKind::Float: {
            take();
            auto e = node(ExprKind::Float, t);
            e->fval = std::strtod(t.lexeme.c_str(), nullptr);
            return e;
        }
        case TokenKind::String: {
            take();
            auto e = node(ExprKind::Str, t);
            e->text = t.lexeme;
            return e;
        }
        case TokenKind::Ident: {
            take();
            auto e = node(ExprKind::Name, t);
            e->text = t.lexeme;
            return e;
        }
        case TokenKind::Keyword:
            if (t.lexeme == "True" || t.lexeme == "False") {
                take();
                auto e = node(ExprKind::Bool, t);
                e->ival = t.lexeme == "True";
                return e;
            }
            if (t.lexeme == "None") {
                take();
                return node(ExprKind::None, t);
            }
            break;
        case TokenKind::Op:
            if (t.lexeme == "(") {
                take();
                if (accept_op(")")) return node(ExprKind::Tuple, t);
                ExprPtr first = expr();
                if (accept_op(")")) return first;
                auto tup = node(ExprKind::Tuple, t);
                tup->kids.push_back(std::move(first));
                while (accept_op(",")) {
                    if (peek().is_op(")")) break;
                    tup->kids.push_back(expr());
                }
                expect_op(")");
                return tup;
            }
            if (t.lexeme == "[") {
                take();
                auto list = node(ExprKind::List, t);
                while (!peek().is_op("]")) {
                    list->kids.push_back(expr());
                    if (!accept_op(",")) break;
                }
                expect_op("]");
                return list;
            }
            break;
        default: break;
        }
        error("expression");
    }

    const std::vector<Token>& toks_;
    std::size_t pos_ = 0;
    int depth_ = 0;
};

} // namespace

Program parse(const std::vector<Token>& tokens) { return Parser(tokens).program(); }

Program parse_source(std::string_view source) { return parse(tokenize(source)); }

} // namespace virtcam::camscript
