#include "repogen/minilang.hpp"

#include <algorithm>
#include <array>

namespace repogen::minilang {

namespace {

constexpr std::array<std::string_view, 15> kKeywords = {
    "def", "class", "if", "else", "while", "return", "import", "from",
    "pass", "and", "or", "not", "True", "False", "None",
};

bool is_ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}

bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }

bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::size_t utf8_length(unsigned char lead) {
    if (lead < 0x80) return 1;
    if ((lead >> 5) == 0x6) return 2;
    if ((lead >> 4) == 0xE) return 3;
    if ((lead >> 3) == 0x1E) return 4;
    return 1;
}

class Lexer {
public:
    Lexer(std::string_view source, bool strict) : source_(source), strict_(strict) {}

    LexResult run() {
        std::size_t offset = 0;
        int line_no = 0;
        while (offset < source_.size()) {
            ++line_no;
            std::size_t eol = source_.find('\n', offset);
            bool has_newline = eol != std::string_view::npos;
            std::size_t raw_end = has_newline ? eol : source_.size();
            std::string_view line = source_.substr(offset, raw_end - offset);
            std::size_t raw_length = line.size();
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            if (lex_line(line, line_no) && has_newline) {
                emit(TokenKind::Newline, "\n", line_no, static_cast<int>(raw_length));
            }
            offset = has_newline ? eol + 1 : source_.size();
        }
        int eof_line = line_no + 1;
        while (indents_.size() > 1) {
            indents_.pop_back();
            emit(TokenKind::Dedent, "", eof_line, 0);
        }
        return std::move(result_);
    }

private:
    void emit(TokenKind kind, std::string text, int line, int column) {
        result_.tokens.push_back(LexToken{kind, std::move(text), line, column});
    }

    void illegal(std::string_view text, int line, int column) {
        SourcePos pos{line, column};
        std::string message = "illegal character '" + std::string(text) + "'";
        if (strict_) throw LexError(pos, message);
        result_.diagnostics.push_back({pos, message});
        emit(TokenKind::Error, std::string(text), line, column);
    }

    // Returns false for blank and comment-only lines.
    bool lex_line(std::string_view line, int line_no) {
        std::size_t col = 0;
        int width = 0;
        while (col < line.size() && (line[col] == ' ' || line[col] == '\t')) {
            if (line[col] == '\t') {
                if (strict_) throw LexError({line_no, static_cast<int>(col)}, "tab in indentation");
                result_.diagnostics.push_back({{line_no, static_cast<int>(col)}, "tab in indentation"});
                width += 4;
            } else {
                ++width;
            }
            ++col;
        }
        if (col == line.size() || line[col] == '#') return false;

        if (width > indents_.back()) {
            indents_.push_back(width);
            emit(TokenKind::Indent, std::string(line.substr(0, col)), line_no, 0);
        } else if (width < indents_.back()) {
            while (indents_.size() > 1 && width < indents_.back()) {
                indents_.pop_back();
                emit(TokenKind::Dedent, "", line_no, static_cast<int>(col));
            }
            if (width != indents_.back()) {
                result_.diagnostics.push_back(
                    {{line_no, static_cast<int>(col)}, "unindent does not match any outer indentation level"});
                indents_.push_back(width);
            }
        }

        while (col < line.size()) {
            char c = line[col];
            int column = static_cast<int>(col);
            if (c == ' ' || c == '\t') {
                ++col;
                continue;
            }
            if (c == '#') break;
            std::string_view rest = line.substr(col);
            if (rest.starts_with(kCompMarker)) {
                emit(TokenKind::Marker, std::string(kCompMarker), line_no, column);
                col += kCompMarker.size();
                continue;
            }
            if (is_ident_start(c)) {
                std::size_t end = col;
                while (end < line.size() && is_ident_char(line[end])) ++end;
                std::string word(line.substr(col, end - col));
                TokenKind kind = is_keyword(word) ? TokenKind::Keyword : TokenKind::Identifier;
                emit(kind, std::move(word), line_no, column);
                col = end;
                continue;
            }
            if (is_digit(c)) {
                std::size_t end = col;
                while (end < line.size() && is_digit(line[end])) ++end;
                if (end + 1 < line.size() && line[end] == '.' && is_digit(line[end + 1])) {
                    ++end;
                    while (end < line.size() && is_digit(line[end])) ++end;
                }
                emit(TokenKind::Number, std::string(line.substr(col, end - col)), line_no, column);
                col = end;
                continue;
            }
            if (c == '"' || c == '\'') {
                std::size_t end = col + 1;
                bool closed = false;
                while (end < line.size()) {
                    if (line[end] == '\\' && end + 1 < line.size()) {
                        end += 2;
                        continue;
                    }
                    if (line[end] == c) {
                        closed = true;
                        ++end;
                        break;
                    }
                    ++end;
                }
                if (closed) {
                    emit(TokenKind::String, std::string(line.substr(col, end - col)), line_no, column);
                } else {
                    result_.diagnostics.push_back({{line_no, column}, "unterminated string literal"});
                    emit(TokenKind::Error, std::string(line.substr(col)), line_no, column);
                }
                col = end;
                continue;
            }
            if (rest.size() >= 2) {
                std::string_view two = rest.substr(0, 2);
                if (two == "==" || two == "!=" || two == "<=" || two == ">=") {
                    emit(TokenKind::Operator, std::string(two), line_no, column);
                    col += 2;
                    continue;
                }
            }
            if (std::string_view("=+-*/<>").find(c) != std::string_view::npos) {
                emit(TokenKind::Operator, std::string(1, c), line_no, column);
                ++col;
                continue;
            }
            if (std::string_view("(),.:[]").find(c) != std::string_view::npos) {
                emit(TokenKind::Punctuator, std::string(1, c), line_no, column);
                ++col;
                continue;
            }
            std::size_t len = std::min(utf8_length(static_cast<unsigned char>(c)), line.size() - col);
            illegal(line.substr(col, len), line_no, column);
            col += len;
        }
        return true;
    }

    std::string_view source_;
    bool strict_;
    std::vector<int> indents_{0};
    LexResult result_;
};

}  // namespace

std::string_view to_string(TokenKind kind) {
    switch (kind) {
        case TokenKind::Keyword: return "keyword";
        case TokenKind::Identifier: return "identifier";
        case TokenKind::Number: return "number-literal";
        case TokenKind::String: return "string-literal";
        case TokenKind::Operator: return "operator";
        case TokenKind::Punctuator: return "punctuator";
        case TokenKind::Newline: return "newline";
        case TokenKind::Indent: return "indent";
        case TokenKind::Dedent: return "dedent";
        case TokenKind::Marker: return "marker";
        case TokenKind::Error: return "error";
    }
    return "error";
}

LexError::LexError(SourcePos pos, const std::string& what)
    : std::runtime_error(std::to_string(pos.line) + ":" + std::to_string(pos.column) + ": " + what), pos_(pos) {}

bool is_keyword(std::string_view word) {
    return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

LexResult lex(std::string_view source) { return Lexer(source, true).run(); }

LexResult lex_recovering(std::string_view source) { return Lexer(source, false).run(); }

}  // namespace repogen::minilang
