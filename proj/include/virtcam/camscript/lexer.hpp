#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace virtcam::camscript {

/// Any failure raised while lexing, parsing or running a script. `kind` is the
/// script-visible error class, e.g. "SyntaxError", "NameError", "StepLimit".
class ScriptError : public std::runtime_error {
public:
    ScriptError(std::string kind, std::string message, int line, int column = 0);

    const std::string& kind() const noexcept { return kind_; }
    const std::string& message() const noexcept { return message_; }
    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    std::string kind_;
    std::string message_;
    int line_;
    int column_;
};

enum class TokenKind { Ident, Int, Float, String, Op, Newline, Indent, Dedent, Keyword, Eof };

std::string_view to_string(TokenKind k) noexcept;

struct Token {
    TokenKind kind = TokenKind::Eof;
    std::string lexeme;  // decoded text for strings
    int line = 0;
    int column = 0;

    bool is(TokenKind k, std::string_view text) const noexcept { return kind == k && lexeme == text; }
    bool is_op(std::string_view text) const noexcept { return is(TokenKind::Op, text); }
    bool is_keyword(std::string_view text) const noexcept { return is(TokenKind::Keyword, text); }
};

bool is_keyword(std::string_view word) noexcept;

std::vector<Token> tokenize(std::string_view source);

} // namespace virtcam::camscript
