#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "virtcam/camscript/lexer.hpp"

namespace virtcam::camscript {

enum class ExprKind { Int, Float, Str, Bool, None, Name, Attr, Call, Index, Unary, Binary, Tuple, List };

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

/// Tagged expression node. `text` holds the name, attribute, operator or string
/// value depending on the kind; `kids` holds operands in source order
/// (for Call: callee then arguments).
struct Expr {
    ExprKind kind = ExprKind::None;
    int line = 0;
    int column = 0;
    std::int64_t ival = 0;  // Int value, or Bool (0/1)
    double fval = 0.0;
    std::string text;
    std::vector<ExprPtr> kids;
};

enum class StmtKind { Assign, AugAssign, ExprStmt, If, While, For, Break, Continue, Pass, Import };

struct Stmt;
using StmtPtr = std::unique_ptr<Stmt>;
using Block = std::vector<StmtPtr>;

struct Branch {
    ExprPtr cond;
    Block body;
};

struct Stmt {
    StmtKind kind = StmtKind::Pass;
    int line = 0;
    ExprPtr target;              // Assign / AugAssign / For
    ExprPtr value;               // Assign / AugAssign / ExprStmt / While cond / For iterable
    std::string op;              // AugAssign operator without '=' ("+", "//", ...)
    std::vector<Branch> branches;  // If: if + elifs
    Block body;                  // While / For body, If else-branch
    std::vector<std::string> modules;  // Import
};

struct Program {
    Block statements;
};

Program parse(const std::vector<Token>& tokens);
Program parse_source(std::string_view source);

/// Canonical source rendering; parse(print(p)) is structurally equal to p.
std::string print_program(const Program& p);
std::string print_expr(const Expr& e);

/// Structural equality, ignoring positions.
bool equal(const Expr& a, const Expr& b);
bool equal(const Stmt& a, const Stmt& b);
bool equal(const Program& a, const Program& b);

/// Python-style shortest round-trip rendering of a float ("0.1", "1e+20", "inf").
std::string format_float(double v);

} // namespace virtcam::camscript
