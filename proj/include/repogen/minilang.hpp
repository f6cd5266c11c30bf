#pragma once

// MiniPy: a small indentation-sensitive, Python-like language. This header
// exposes the lexer, the error-recovering parser and the canonical renderer.

#include <compare>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace repogen::minilang {

inline constexpr std::string_view kCompMarker = "<COMP>";

enum class TokenKind {
    Keyword,
    Identifier,
    Number,
    String,
    Operator,
    Punctuator,
    Newline,
    Indent,
    Dedent,
    Marker,  // the <COMP> trigger marker inside augmented bodies
    Error,
};

std::string_view to_string(TokenKind kind);

/// 1-based line, 0-based column.
struct SourcePos {
    int line = 1;
    int column = 0;

    auto operator<=>(const SourcePos&) const = default;
    bool operator==(const SourcePos&) const = default;

    static constexpr SourcePos max() { return {std::numeric_limits<int>::max(), 0}; }
};

struct LexToken {
    TokenKind kind = TokenKind::Error;
    std::string text;
    int line = 1;
    int column = 0;

    SourcePos pos() const { return {line, column}; }
    bool is(TokenKind k, std::string_view t) const { return kind == k && text == t; }
    bool operator==(const LexToken&) const = default;
};

struct Diagnostic {
    SourcePos pos;
    std::string message;
    bool operator==(const Diagnostic&) const = default;
};

class LexError : public std::runtime_error {
public:
    LexError(SourcePos pos, const std::string& what);
    SourcePos pos() const { return pos_; }

private:
    SourcePos pos_;
};

struct LexResult {
    std::vector<LexToken> tokens;
    std::vector<Diagnostic> diagnostics;
};

bool is_keyword(std::string_view word);

/// Strict lexer: throws LexError at the first illegal character. Unterminated
/// strings produce an Error token plus a diagnostic.
LexResult lex(std::string_view source);

/// Same token stream, but illegal characters become Error tokens.
LexResult lex_recovering(std::string_view source);

// ---------------------------------------------------------------------------
// AST

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    enum class Kind { Name, Attribute, Call, Binary, Unary, Literal, List };

    Kind kind = Kind::Name;
    SourcePos pos;
    // Name: identifier. Attribute: member name. Binary/Unary: operator.
    // Literal: verbatim lexeme.
    std::string text;
    SourcePos name_pos;  // Attribute: position of the member name
    // Attribute: {value}. Call: {callee, args...}. Binary: {lhs, rhs}.
    // Unary: {operand}. List: items.
    std::vector<ExprPtr> children;
};

/// "a.b.c" for Name/Attribute chains, nullopt for anything else.
std::optional<std::string> dotted_name(const Expr& expr);

struct Stmt {
    enum class Kind { Assign, Expr, Return, If, While, Pass, Error };

    Kind kind = Kind::Error;
    SourcePos pos;
    ExprPtr target;  // Assign
    ExprPtr value;   // Assign rhs (null when the rhs failed to parse), Expr, Return, If/While condition
    std::vector<Stmt> body;
    std::vector<Stmt> orelse;
};

struct ImportDecl {
    std::string module;              // dotted module path
    std::vector<std::string> names;  // empty for `import module`
    SourcePos pos;
};

struct FunctionDef {
    std::string name;
    std::vector<std::string> params;
    std::optional<std::string> docstring;      // literal contents without quotes
    std::optional<std::string> docstring_literal;
    std::vector<LexToken> body_tokens;         // body block, docstring statement excluded
    std::vector<Stmt> body;                    // parsed statements, docstring excluded
    std::string signature_text;
    SourcePos pos;       // `def` keyword
    SourcePos name_pos;
    SourcePos end = SourcePos::max();  // first token after the body
    int body_indent = 0;
    bool is_method = false;

    bool has_docstring() const { return docstring.has_value(); }
};

struct ClassDef {
    std::string name;
    std::vector<FunctionDef> methods;
    std::vector<std::string> attributes;  // sorted, unique
    SourcePos pos;
    SourcePos end = SourcePos::max();
};

struct VariableDef {
    std::string name;
    SourcePos pos;
};

struct Module {
    enum class ItemKind { Import, Class, Function, Statement };
    struct Item {
        ItemKind kind;
        std::size_t index;
    };

    std::string path;
    std::vector<ImportDecl> imports;
    std::vector<ClassDef> classes;
    std::vector<FunctionDef> functions;
    std::vector<VariableDef> variables;
    std::vector<std::vector<LexToken>> statements;  // top-level statements, tokens incl. NEWLINE
    std::vector<Stmt> statement_asts;               // parallel to `statements`
    std::vector<Item> items;                        // source order
    std::vector<Diagnostic> errors;    // lexical and syntax errors
    std::vector<Diagnostic> warnings;  // redefinitions

    const FunctionDef* find_function(std::string_view name) const;
    const ClassDef* find_class(std::string_view name) const;
};

Module parse(std::string_view source, std::string path = {});

/// Parses `body` (indentation relative to the body) as the body of a method
/// `def __body__(self):`. Lexing is line-local, so statements come out the
/// same as when the body sits inside a real file.
FunctionDef parse_body(std::string_view body);

/// Assignment statements of a body, nested blocks included, in source order.
std::vector<const Stmt*> assignments(std::span<const Stmt> body);

/// Names assigned through `self.<name> = ...` in a method body.
std::vector<std::string> self_attributes(const FunctionDef& method);

/// All functions and methods in source order.
std::vector<const FunctionDef*> extract_functions(const Module& module);

// ---------------------------------------------------------------------------
// Canonical rendering

bool needs_space(const LexToken& prev, const LexToken& next);

/// Canonical text of a token sequence: single spaces where the spacing rules
/// ask for one, four-space indentation, no trailing newline. Markers are
/// rendered verbatim and glued to the preceding lexeme.
std::string render_tokens(std::span<const LexToken> tokens);

std::string render_body(const FunctionDef& func);
std::string render_module(const Module& module);

/// Re-lex and render; unparsable fragments keep their lexemes.
std::string canonicalize(std::string_view text);

/// Compares everything but positions.
bool structurally_equal(const Module& a, const Module& b);

}  // namespace repogen::minilang
