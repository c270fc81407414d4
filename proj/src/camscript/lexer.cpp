#include "virtcam/camscript/lexer.hpp"

#include <array>
#include <cctype>

namespace virtcam::camscript {

namespace {

constexpr std::array<std::string_view, 16> kKeywords = {
    "if", "elif", "else", "while", "for", "in", "break", "continue",
    "pass", "import", "and", "or", "not", "True", "False", "None",
};

constexpr std::array<std::string_view, 1> kOps3 = {"//="};
constexpr std::array<std::string_view, 10> kOps2 = {"==", "!=", "<=", ">=", "//", "+=", "-=", "*=", "/=", "%="};
constexpr std::string_view kOps1 = "()[],:.=<>+-*/%";

std::string format_message(const std::string& kind, const std::string& message, int line, int column) {
    std::string out = "line " + std::to_string(line);
    if (column > 0) out += ", column " + std::to_string(column);
    return out + ": " + kind + ": " + message;
}

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool digit(char c) { return c >= '0' && c <= '9'; }

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run() {
        while (pos_ < src_.size()) {
            if (at_line_start_ && depth_ == 0) {
                if (!indentation()) continue;
            }
            const char c = src_[pos_];
            if (c == ' ' || c == '\t' || c == '\r' || c == '\f') {
                advance();
            } else if (c == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n') advance();
            } else if (c == '\n') {
                if (depth_ == 0) newline_token();
                advance_line();
            } else if (c == '\\' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '\n') {
                advance();
                advance_line();
            } else if (digit(c) || (c == '.' && pos_ + 1 < src_.size() && digit(src_[pos_ + 1]))) {
                number();
            } else if (ident_start(c)) {
                identifier();
            } else if (c == '\'' || c == '"') {
                string_literal(c);
            } else {
                op();
            }
        }
        if (!tokens_.empty() && tokens_.back().kind != TokenKind::Newline && tokens_.back().kind != TokenKind::Dedent) {
            newline_token();
        }
        while (indents_.size() > 1) {
            indents_.pop_back();
            push(TokenKind::Dedent, "", line_, 1);
        }
        push(TokenKind::Eof, "", line_, col_);
        return std::move(tokens_);
    }

private:
    void advance() {
        ++pos_;
        ++col_;
    }
    void advance_line() {
        ++pos_;
        ++line_;
        col_ = 1;
        at_line_start_ = true;
    }

    void push(TokenKind k, std::string lexeme, int line, int col) { tokens_.push_back({k, std::move(lexeme), line, col}); }

    void newline_token() {
        if (tokens_.empty() || tokens_.back().kind == TokenKind::Newline) return;
        last_line_opened_block_ = tokens_.back().is_op(":");
        push(TokenKind::Newline, "", line_, col_);
    }

    /// Handles leading whitespace. Returns false when the line was skipped.
    bool indentation() {
        std::size_t p = pos_;
        int width = 0;
        bool tab = false;
        while (p < src_.size() && (src_[p] == ' ' || src_[p] == '\t' || src_[p] == '\r' || src_[p] == '\f')) {
            if (src_[p] == '\t') tab = true;
            if (src_[p] == ' ') ++width;
            ++p;
        }
        if (p >= src_.size() || src_[p] == '\n' || src_[p] == '#') {
            // Blank or comment-only line.
            while (pos_ < src_.size() && src_[pos_] != '\n') advance();
            if (pos_ < src_.size()) advance_line();
            return false;
        }
        if (tab) throw ScriptError("TabInIndent", "tab character in indentation", line_, 1);
        col_ += static_cast<int>(p - pos_);
        pos_ = p;
        at_line_start_ = false;
        if (last_line_opened_block_ && width <= indents_.back()) {
            throw ScriptError("SyntaxError", "expected an indented block", line_, width + 1);
        }
        if (width > indents_.back()) {
            if (!last_line_opened_block_) {
                throw ScriptError("InconsistentDedent", "unexpected indent", line_, width + 1);
            }
            indents_.push_back(width);
            push(TokenKind::Indent, "", line_, 1);
        } else if (width < indents_.back()) {
            while (indents_.back() > width) {
                indents_.pop_back();
                push(TokenKind::Dedent, "", line_, 1);
            }
            if (indents_.back() != width) {
                throw ScriptError("InconsistentDedent", "unindent does not match any outer indentation level", line_,
                                  width + 1);
            }
        }
        last_line_opened_block_ = false;
        return true;
    }

    void number() {
        const int line = line_, col = col_;
        const std::size_t start = pos_;
        bool is_float = false;
        if (src_[pos_] == '0' && pos_ + 1 < src_.size() && (src_[pos_ + 1] == 'x' || src_[pos_ + 1] == 'X')) {
            advance();
            advance();
            const std::size_t digits = pos_;
            while (pos_ < src_.size() && std::isxdigit(static_cast<unsigned char>(src_[pos_]))) advance();
            if (pos_ == digits) throw ScriptError("SyntaxError", "invalid hexadecimal literal", line, col);
        } else {
            while (pos_ < src_.size() && digit(src_[pos_])) advance();
            if (pos_ < src_.size() && src_[pos_] == '.' && !(pos_ + 1 < src_.size() && ident_start(src_[pos_ + 1]))) {
                is_float = true;
                advance();
                while (pos_ < src_.size() && digit(src_[pos_])) advance();
            }
            if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
                std::size_t p = pos_ + 1;
                if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
                if (p < src_.size() && digit(src_[p])) {
                    is_float = true;
                    while (pos_ < p) advance();
                    while (pos_ < src_.size() && digit(src_[pos_])) advance();
                }
            }
        }
        if (pos_ < src_.size() && ident_char(src_[pos_])) throw ScriptError("SyntaxError", "invalid numeric literal", line, col);
        push(is_float ? TokenKind::Float : TokenKind::Int, std::string(src_.substr(start, pos_ - start)), line, col);
    }

    void identifier() {
        const int line = line_, col = col_;
        const std::size_t start = pos_;
        while (pos_ < src_.size() && ident_char(src_[pos_])) advance();
        std::string word(src_.substr(start, pos_ - start));
        const TokenKind kind = is_keyword(word) ? TokenKind::Keyword : TokenKind::Ident;
        push(kind, std::move(word), line, col);
    }

    void string_literal(char quote) {
        const int line = line_, col = col_;
        advance();
        std::string out;
        for (;;) {
            if (pos_ >= src_.size() || src_[pos_] == '\n') {
                throw ScriptError("UnterminatedString", "unterminated string literal", line, col);
            }
            const char c = src_[pos_];
            if (c == quote) {
                advance();
                break;
            }
            if (c == '\\') {
                advance();
                if (pos_ >= src_.size()) throw ScriptError("UnterminatedString", "unterminated string literal", line, col);
                const char e = src_[pos_];
                switch (e) {
                case 'n': out.push_back('\n'); break;
                case 't': out.push_back('\t'); break;
                case 'r': out.push_back('\r'); break;
                case '0': out.push_back('\0'); break;
                case '\\': out.push_back('\\'); break;
                case '\'': out.push_back('\''); break;
                case '"': out.push_back('"'); break;
                case '\n': ++line_; col_ = 0; break;
                case 'x': {
                    if (pos_ + 2 >= src_.size() || !std::isxdigit(static_cast<unsigned char>(src_[pos_ + 1])) ||
                        !std::isxdigit(static_cast<unsigned char>(src_[pos_ + 2]))) {
                        throw ScriptError("SyntaxError", "invalid \\x escape", line_, col_);
                    }
                    out.push_back(static_cast<char>(std::stoi(std::string(src_.substr(pos_ + 1, 2)), nullptr, 16)));
                    advance();
                    advance();
                    break;
                }
                default:
                    out.push_back('\\');
                    out.push_back(e);
                }
                advance();
                continue;
            }
            out.push_back(c);
            advance();
        }
        push(TokenKind::String, std::move(out), line, col);
    }

    void op() {
        const int line = line_, col = col_;
        const std::string_view rest = src_.substr(pos_);
        for (std::string_view o : kOps3) {
            if (rest.substr(0, o.size()) == o) return emit_op(o, line, col);
        }
        for (std::string_view o : kOps2) {
            if (rest.substr(0, o.size()) == o) return emit_op(o, line, col);
        }
        if (kOps1.find(rest[0]) != std::string_view::npos) return emit_op(rest.substr(0, 1), line, col);
        std::string shown = std::isprint(static_cast<unsigned char>(rest[0])) ? std::string(1, rest[0]) : "\\x" + std::to_string(static_cast<unsigned char>(rest[0]));
        throw ScriptError("SyntaxError", "unexpected character '" + shown + "'", line, col);
    }

    void emit_op(std::string_view o, int line, int col) {
        for (std::size_t i = 0; i < o.size(); ++i) advance();
        if (o == "(" || o == "[") ++depth_;
        if ((o == ")" || o == "]") && depth_ > 0) --depth_;
        push(TokenKind::Op, std::string(o), line, col);
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
    int depth_ = 0;
    bool at_line_start_ = true;
    bool last_line_opened_block_ = false;
    std::vector<int> indents_{0};
    std::vector<Token> tokens_;
};

} // namespace

ScriptError::ScriptError(std::string kind, std::string message, int line, int column)
    : std::runtime_error(format_message(kind, message, line, column)),
      kind_(std::move(kind)),
      message_(std::move(message)),
      line_(line),
      column_(column) {}

std::string_view to_string(TokenKind k) noexcept {
    switch (k) {
    case TokenKind::Ident: return "IDENT";
    case TokenKind::Int: return "INT";
    case TokenKind::Float: return "FLOAT";
    case TokenKind::String: return "STRING";
    case TokenKind::Op: return "OP";
    case TokenKind::Newline: return "NEWLINE";
    case TokenKind::Indent: return "INDENT";
    case TokenKind::Dedent: return "DEDENT";
    case TokenKind::Keyword: return "KEYWORD";
    case TokenKind::Eof: return "EOF";
    }
    return "?";
}

bool is_keyword(std::string_view word) noexcept {
    for (std::string_view k : kKeywords) {
        if (k == word) return true;
    }
    return false;
}

std::vector<Token> tokenize(std::string_view source) { return Lexer(source).run(); }

} // namespace virtcam::camscript
