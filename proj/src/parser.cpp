#include "repogen/minilang.hpp"

#include <algorithm>
#include <functional>
#include <set>

namespace repogen::minilang {

namespace {

struct ParseFailure {
    SourcePos pos;
    std::string message;
};

std::shared_ptr<Expr> make_expr(Expr::Kind kind, SourcePos pos, std::string text = {}) {
    auto expr = std::make_shared<Expr>();
    expr->kind = kind;
    expr->pos = pos;
    expr->text = std::move(text);
    return expr;
}

std::string unquote(std::string_view literal) {
    if (literal.size() >= 2) return std::string(literal.substr(1, literal.size() - 2));
    return std::string(literal);
}

class Parser {
public:
    Parser(const std::vector<LexToken>& tokens, std::size_t begin, std::size_t end,
           std::vector<Diagnostic>& errors)
        : toks_(tokens), pos_(begin), end_(end), errors_(errors) {}

    Module parse_module(std::string path) {
        Module module;
        module.path = std::move(path);
        while (!at_end()) {
            const LexToken& tok = peek();
            if (tok.kind == TokenKind::Newline || tok.kind == TokenKind::Dedent) {
                ++pos_;
            } else if (tok.kind == TokenKind::Indent) {
                error(tok.pos(), "unexpected indent");
                skip_block();
            } else if (tok.is(TokenKind::Keyword, "def")) {
                if (auto func = parse_function(false)) {
                    module.items.push_back({Module::ItemKind::Function, module.functions.size()});
                    module.functions.push_back(std::move(*func));
                }
            } else if (tok.is(TokenKind::Keyword, "class")) {
                if (auto cls = parse_class()) {
                    module.items.push_back({Module::ItemKind::Class, module.classes.size()});
                    module.classes.push_back(std::move(*cls));
                }
            } else if (tok.is(TokenKind::Keyword, "import") || tok.is(TokenKind::Keyword, "from")) {
                if (auto decl = parse_import()) {
                    module.items.push_back({Module::ItemKind::Import, module.imports.size()});
                    module.imports.push_back(std::move(*decl));
                }
            } else {
                std::size_t start = pos_;
                Stmt stmt = parse_statement();
                if (stmt.kind == Stmt::Kind::Assign && stmt.target && stmt.target->kind == Expr::Kind::Name) {
                    module.variables.push_back({stmt.target->text, stmt.target->pos});
                }
                module.items.push_back({Module::ItemKind::Statement, module.statements.size()});
                module.statements.emplace_back(toks_.begin() + static_cast<std::ptrdiff_t>(start),
                                               toks_.begin() + static_cast<std::ptrdiff_t>(pos_));
                module.statement_asts.push_back(std::move(stmt));
            }
        }
        check_redefinitions(module);
        return module;
    }

    std::vector<Stmt> parse_statements() {
        std::vector<Stmt> out;
        while (!at_end()) {
            if (peek().kind == TokenKind::Newline || peek().kind == TokenKind::Dedent) {
                ++pos_;
                continue;
            }
            out.push_back(parse_statement());
        }
        return out;
    }

private:
    // -- token access -------------------------------------------------------

    bool at_end() const { return pos_ >= end_; }

    const LexToken& peek() const { return toks_[pos_]; }

    SourcePos here() const {
        if (!at_end()) return peek().pos();
        if (end_ > 0 && end_ <= toks_.size()) {
            const LexToken& last = toks_[end_ - 1];
            return {last.line, last.column + static_cast<int>(last.text.size())};
        }
        return {};
    }

    // Where a construct without a block ends: the next token, or the token
    // closing the enclosing range.
    SourcePos boundary() const {
        if (!at_end()) return peek().pos();
        return end_ < toks_.size() ? toks_[end_].pos() : SourcePos::max();
    }

    bool check(TokenKind kind, std::string_view text) const { return !at_end() && peek().is(kind, text); }
    bool check(TokenKind kind) const { return !at_end() && peek().kind == kind; }
    bool check_punct(std::string_view text) const { return check(TokenKind::Punctuator, text); }
    bool check_keyword(std::string_view text) const { return check(TokenKind::Keyword, text); }

    const LexToken& advance() { return toks_[pos_++]; }

    [[noreturn]] void fail(const std::string& message) const { throw ParseFailure{here(), message}; }

    const LexToken& expect(TokenKind kind, std::string_view text, const char* what) {
        if (!check(kind, text)) fail(std::string("expected ") + what);
        return advance();
    }

    const LexToken& expect_identifier(const char* what) {
        if (!check(TokenKind::Identifier)) fail(std::string("expected ") + what);
        return advance();
    }

    bool at_line_end() const { return at_end() || peek().kind == TokenKind::Newline; }

    void end_line() {
        if (at_end()) return;
        if (peek().kind != TokenKind::Newline) fail("expected end of line");
        ++pos_;
    }

    void error(SourcePos pos, std::string message) { errors_.push_back({pos, std::move(message)}); }

    void skip_line() {
        while (!at_end()) {
            if (advance().kind == TokenKind::Newline) return;
        }
    }

    // Index of the Dedent closing the block opened by the Indent at `open`.
    std::size_t matching_dedent(std::size_t open) const {
        int depth = 0;
        for (std::size_t i = open; i < end_; ++i) {
            if (toks_[i].kind == TokenKind::Indent) ++depth;
            if (toks_[i].kind == TokenKind::Dedent && --depth == 0) return i;
        }
        return end_;
    }

    void skip_block() {
        if (!check(TokenKind::Indent)) return;
        std::size_t close = matching_dedent(pos_);
        pos_ = std::min(close + 1, end_);
    }

    // -- definitions --------------------------------------------------------

    std::optional<FunctionDef> parse_function(bool in_class) {
        const LexToken& def_tok = advance();
        FunctionDef func;
        func.pos = def_tok.pos();
        func.is_method = in_class;
        try {
            const LexToken& name = expect_identifier("function name");
            func.name = name.text;
            func.name_pos = name.pos();
            expect(TokenKind::Punctuator, "(", "'('");
            while (!check_punct(")")) {
                func.params.push_back(expect_identifier("parameter name").text);
                if (!check_punct(",")) break;
                advance();
            }
            expect(TokenKind::Punctuator, ")", "')'");
            expect(TokenKind::Punctuator, ":", "':'");
            end_line();
        } catch (const ParseFailure& failure) {
            error(failure.pos, failure.message);
            skip_line();
            if (func.name.empty()) {
                skip_block();
                return std::nullopt;
            }
        }
        func.signature_text = "def " + func.name + "(";
        for (std::size_t i = 0; i < func.params.size(); ++i) {
            if (i > 0) func.signature_text += ", ";
            func.signature_text += func.params[i];
        }
        func.signature_text += "):";

        if (!check(TokenKind::Indent)) {
            error(here(), "expected an indented block");
            func.end = boundary();
            return func;
        }
        std::size_t open = pos_;
        std::size_t close = matching_dedent(open);
        std::size_t body_begin = open + 1;
        func.body_indent = static_cast<int>(toks_[open].text.size());

        // A string alone on the first line is the docstring.
        if (body_begin < close && toks_[body_begin].kind == TokenKind::String &&
            (body_begin + 1 == close || toks_[body_begin + 1].kind == TokenKind::Newline)) {
            func.docstring_literal = toks_[body_begin].text;
            func.docstring = unquote(toks_[body_begin].text);
            body_begin = std::min(body_begin + 2, close);
        }
        func.body_tokens.assign(toks_.begin() + static_cast<std::ptrdiff_t>(body_begin),
                                toks_.begin() + static_cast<std::ptrdiff_t>(close));
        Parser body(toks_, body_begin, close, errors_);
        func.body = body.parse_statements();

        pos_ = std::min(close + 1, end_);
        func.end = close < toks_.size() ? toks_[close].pos() : SourcePos::max();
        return func;
    }

    std::optional<ClassDef> parse_class() {
        const LexToken& class_tok = advance();
        ClassDef cls;
        cls.pos = class_tok.pos();
        try {
            cls.name = expect_identifier("class name").text;
            if (check_punct("(")) {
                advance();
                expect(TokenKind::Punctuator, ")", "')' (base classes are not supported)");
            }
            expect(TokenKind::Punctuator, ":", "':'");
            end_line();
        } catch (const ParseFailure& failure) {
            error(failure.pos, failure.message);
            skip_line();
            if (cls.name.empty()) {
                skip_block();
                return std::nullopt;
            }
        }
        if (!check(TokenKind::Indent)) {
            error(here(), "expected an indented block");
            cls.end = boundary();
            return cls;
        }
        std::size_t close = matching_dedent(pos_);
        ++pos_;
        std::size_t saved_end = end_;
        end_ = close;
        bool first = true;
        while (!at_end()) {
            const LexToken& tok = peek();
            if (tok.kind == TokenKind::Newline || tok.kind == TokenKind::Dedent) {
                ++pos_;
                continue;
            }
            if (tok.is(TokenKind::Keyword, "def")) {
                if (auto method = parse_function(true)) cls.methods.push_back(std::move(*method));
            } else if ((first && tok.kind == TokenKind::String) || tok.is(TokenKind::Keyword, "pass")) {
                advance();
                try {
                    end_line();
                } catch (const ParseFailure& failure) {
                    error(failure.pos, failure.message);
                    skip_line();
                }
            } else {
                error(tok.pos(), "unsupported statement in class body");
                skip_line();
                skip_block();
            }
            first = false;
        }
        end_ = saved_end;
        pos_ = std::min(close + 1, end_);
        cls.end = close < toks_.size() ? toks_[close].pos() : SourcePos::max();

        std::set<std::string> attributes;
        for (const FunctionDef& method : cls.methods) {
            for (std::string& name : self_attributes(method)) attributes.insert(std::move(name));
        }
        cls.attributes.assign(attributes.begin(), attributes.end());
        return cls;
    }

    std::string dotted_module() {
        std::string name = expect_identifier("module name").text;
        while (check_punct(".")) {
            advance();
            name += "." + expect_identifier("module name").text;
        }
        return name;
    }

    std::optional<ImportDecl> parse_import() {
        ImportDecl decl;
        decl.pos = peek().pos();
        try {
            if (advance().text == "import") {
                decl.module = dotted_module();
            } else {
                decl.module = dotted_module();
                expect(TokenKind::Keyword, "import", "'import'");
                decl.names.push_back(expect_identifier("imported name").text);
                while (check_punct(",")) {
                    advance();
                    decl.names.push_back(expect_identifier("imported name").text);
                }
            }
            end_line();
        } catch (const ParseFailure& failure) {
            error(failure.pos, failure.message);
            skip_line();
            skip_block();
            return std::nullopt;
        }
        return decl;
    }

    void check_redefinitions(Module& module) {
        std::set<std::string> seen;
        auto note = [&](const std::string& name, SourcePos pos) {
            if (!seen.insert(name).second) module.warnings.push_back({pos, "redefinition of '" + name + "'"});
        };
        for (const Module::Item& item : module.items) {
            if (item.kind == Module::ItemKind::Function) {
                note(module.functions[item.index].name, module.functions[item.index].pos);
            } else if (item.kind == Module::ItemKind::Class) {
                note(module.classes[item.index].name, module.classes[item.index].pos);
            }
        }
    }

    // -- statements ---------------------------------------------------------

    // After a failed statement: drop the rest of the line and keep whatever
    // parses in a block that belonged to it.
    Stmt recover(SourcePos pos, const ParseFailure& failure) {
        error(failure.pos, failure.message);
        skip_line();
        Stmt stmt;
        stmt.kind = Stmt::Kind::Error;
        stmt.pos = pos;
        if (check(TokenKind::Indent)) stmt.body = parse_indented_block();
        return stmt;
    }

    std::vector<Stmt> parse_indented_block() {
        std::size_t close = matching_dedent(pos_);
        Parser inner(toks_, pos_ + 1, close, errors_);
        std::vector<Stmt> body = inner.parse_statements();
        pos_ = std::min(close + 1, end_);
        return body;
    }

    std::vector<Stmt> parse_suite() {
        expect(TokenKind::Punctuator, ":", "':'");
        end_line();
        if (!check(TokenKind::Indent)) {
            error(here(), "expected an indented block");
            return {};
        }
        return parse_indented_block();
    }

    Stmt parse_statement() {
        SourcePos start = peek().pos();
        if (check(TokenKind::Indent)) {
            error(start, "unexpected indent");
            Stmt stmt;
            stmt.kind = Stmt::Kind::Error;
            stmt.pos = start;
            stmt.body = parse_indented_block();
            return stmt;
        }
        Stmt stmt;
        stmt.pos = start;
        try {
            if (check_keyword("if")) {
                advance();
                stmt.kind = Stmt::Kind::If;
                stmt.value = parse_expr();
                stmt.body = parse_suite();
                if (check_keyword("else")) {
                    advance();
                    stmt.orelse = parse_suite();
                }
                return stmt;
            }
            if (check_keyword("while")) {
                advance();
                stmt.kind = Stmt::Kind::While;
                stmt.value = parse_expr();
                stmt.body = parse_suite();
                return stmt;
            }
            if (check_keyword("return")) {
                advance();
                stmt.kind = Stmt::Kind::Return;
                if (!at_line_end()) stmt.value = parse_expr();
                end_line();
                return stmt;
            }
            if (check_keyword("pass")) {
                advance();
                stmt.kind = Stmt::Kind::Pass;
                end_line();
                return stmt;
            }
            if (check_keyword("def") || check_keyword("class") || check_keyword("import") ||
                check_keyword("from")) {
                fail("nested definitions and imports are not supported");
            }
            ExprPtr expr = parse_expr();
            if (check(TokenKind::Operator, "=")) {
                if (expr->kind != Expr::Kind::Name && expr->kind != Expr::Kind::Attribute) {
                    fail("cannot assign to expression");
                }
                advance();
                stmt.kind = Stmt::Kind::Assign;
                stmt.target = expr;
                try {
                    stmt.value = parse_expr();
                    end_line();
                } catch (const ParseFailure& failure) {
                    // Keep the assignment target: it still defines a name.
                    error(failure.pos, failure.message);
                    stmt.value = nullptr;
                    skip_line();
                    if (check(TokenKind::Indent)) skip_block();
                }
                return stmt;
            }
            stmt.kind = Stmt::Kind::Expr;
            stmt.value = expr;
            end_line();
            return stmt;
        } catch (const ParseFailure& failure) {
            return recover(start, failure);
        }
    }

    // -- expressions --------------------------------------------------------

    ExprPtr parse_expr() { return parse_or(); }

    ExprPtr binary(std::string op, SourcePos pos, ExprPtr lhs, ExprPtr rhs) {
        auto expr = make_expr(Expr::Kind::Binary, pos, std::move(op));
        expr->children = {std::move(lhs), std::move(rhs)};
        return expr;
    }

    ExprPtr parse_or() {
        ExprPtr lhs = parse_and();
        while (check_keyword("or")) {
            advance();
            lhs = binary("or", lhs->pos, lhs, parse_and());
        }
        return lhs;
    }

    ExprPtr parse_and() {
        ExprPtr lhs = parse_not();
        while (check_keyword("and")) {
            advance();
            lhs = binary("and", lhs->pos, lhs, parse_not());
        }
        return lhs;
    }

    ExprPtr parse_not() {
        if (check_keyword("not")) {
            SourcePos pos = advance().pos();
            auto expr = make_expr(Expr::Kind::Unary, pos, "not");
            expr->children = {parse_not()};
            return expr;
        }
        return parse_comparison();
    }

    bool check_operator(std::initializer_list<std::string_view> ops) const {
        if (!check(TokenKind::Operator)) return false;
        return std::find(ops.begin(), ops.end(), peek().text) != ops.end();
    }

    ExprPtr parse_comparison() {
        ExprPtr lhs = parse_additive();
        while (check_operator({"==", "!=", "<", ">", "<=", ">="})) {
            std::string op = advance().text;
            lhs = binary(std::move(op), lhs->pos, lhs, parse_additive());
        }
        return lhs;
    }

    ExprPtr parse_additive() {
        ExprPtr lhs = parse_term();
        while (check_operator({"+", "-"})) {
            std::string op = advance().text;
            lhs = binary(std::move(op), lhs->pos, lhs, parse_term());
        }
        return lhs;
    }

    ExprPtr parse_term() {
        ExprPtr lhs = parse_unary();
        while (check_operator({"*", "/"})) {
            std::string op = advance().text;
            lhs = binary(std::move(op), lhs->pos, lhs, parse_unary());
        }
        return lhs;
    }

    ExprPtr parse_unary() {
        if (check(TokenKind::Operator, "-")) {
            SourcePos pos = advance().pos();
            auto expr = make_expr(Expr::Kind::Unary, pos, "-");
            expr->children = {parse_unary()};
            return expr;
        }
        return parse_postfix();
    }

    ExprPtr parse_postfix() {
        ExprPtr expr = parse_atom();
        while (true) {
            if (check_punct(".")) {
                advance();
                const LexToken& name = expect_identifier("attribute name");
                auto attr = make_expr(Expr::Kind::Attribute, expr->pos, name.text);
                attr->name_pos = name.pos();
                attr->children = {expr};
                expr = attr;
            } else if (check_punct("(")) {
                advance();
                auto call = make_expr(Expr::Kind::Call, expr->pos);
                call->children.push_back(expr);
                while (!check_punct(")")) {
                    call->children.push_back(parse_expr());
                    if (!check_punct(",")) break;
                    advance();
                }
                expect(TokenKind::Punctuator, ")", "')'");
                expr = call;
            } else {
                return expr;
            }
        }
    }

    ExprPtr parse_atom() {
        if (at_end()) fail("expected expression");
        const LexToken& tok = peek();
        switch (tok.kind) {
            case TokenKind::Identifier:
                advance();
                return make_expr(Expr::Kind::Name, tok.pos(), tok.text);
            case TokenKind::Number:
            case TokenKind::String:
                advance();
                return make_expr(Expr::Kind::Literal, tok.pos(), tok.text);
            case TokenKind::Keyword:
                if (tok.text == "True" || tok.text == "False" || tok.text == "None") {
                    advance();
                    return make_expr(Expr::Kind::Literal, tok.pos(), tok.text);
                }
                break;
            case TokenKind::Punctuator:
                if (tok.text == "(") {
                    advance();
                    ExprPtr inner = parse_expr();
                    expect(TokenKind::Punctuator, ")", "')'");
                    return inner;
                }
                if (tok.text == "[") {
                    advance();
                    auto list = make_expr(Expr::Kind::List, tok.pos());
                    while (!check_punct("]")) {
                        list->children.push_back(parse_expr());
                        if (!check_punct(",")) break;
                        advance();
                    }
                    expect(TokenKind::Punctuator, "]", "']'");
                    return list;
                }
                break;
            default:
                break;
        }
        if (tok.kind == TokenKind::Newline) fail("unexpected end of line");
        fail("unexpected '" + tok.text + "'");
    }

    const std::vector<LexToken>& toks_;
    std::size_t pos_;
    std::size_t end_;
    std::vector<Diagnostic>& errors_;
};

void collect_assignments(std::span<const Stmt> body, std::vector<const Stmt*>& out) {
    for (const Stmt& stmt : body) {
        if (stmt.kind == Stmt::Kind::Assign) out.push_back(&stmt);
        collect_assignments(stmt.body, out);
        collect_assignments(stmt.orelse, out);
    }
}

}  // namespace

std::optional<std::string> dotted_name(const Expr& expr) {
    if (expr.kind == Expr::Kind::Name) return expr.text;
    if (expr.kind == Expr::Kind::Attribute && !expr.children.empty()) {
        if (auto base = dotted_name(*expr.children.front())) return *base + "." + expr.text;
    }
    return std::nullopt;
}

Module parse(std::string_view source, std::string path) {
    LexResult lexed = lex_recovering(source);
    std::vector<Diagnostic> errors = std::move(lexed.diagnostics);
    Parser parser(lexed.tokens, 0, lexed.tokens.size(), errors);
    Module module = parser.parse_module(std::move(path));
    module.errors = std::move(errors);
    std::stable_sort(module.errors.begin(), module.errors.end(),
                     [](const Diagnostic& a, const Diagnostic& b) { return a.pos < b.pos; });
    return module;
}

FunctionDef parse_body(std::string_view body) {
    std::string source = "def __body__(self):\n    ";
    for (char c : body) {
        source += c;
        if (c == '\n') source += "    ";
    }
    Module module = parse(source, "__body__.mp");
    if (module.functions.empty()) return FunctionDef{};
    return std::move(module.functions.front());
}

std::vector<const Stmt*> assignments(std::span<const Stmt> body) {
    std::vector<const Stmt*> out;
    collect_assignments(body, out);
    std::stable_sort(out.begin(), out.end(), [](const Stmt* a, const Stmt* b) { return a->pos < b->pos; });
    return out;
}

std::vector<std::string> self_attributes(const FunctionDef& method) {
    std::vector<std::string> names;
    if (method.params.empty() || method.params.front() != "self") return names;
    for (const Stmt* stmt : assignments(method.body)) {
        const Expr& target = *stmt->target;
        if (target.kind == Expr::Kind::Attribute && target.children.front()->kind == Expr::Kind::Name &&
            target.children.front()->text == "self") {
            names.push_back(target.text);
        }
    }
    return names;
}

std::vector<const FunctionDef*> extract_functions(const Module& module) {
    std::vector<const FunctionDef*> out;
    for (const Module::Item& item : module.items) {
        if (item.kind == Module::ItemKind::Function) {
            out.push_back(&module.functions[item.index]);
        } else if (item.kind == Module::ItemKind::Class) {
            for (const FunctionDef& method : module.classes[item.index].methods) out.push_back(&method);
        }
    }
    return out;
}

const FunctionDef* Module::find_function(std::string_view name) const {
    for (const FunctionDef& func : functions) {
        if (func.name == name) return &func;
    }
    return nullptr;
}

const ClassDef* Module::find_class(std::string_view name) const {
    for (const ClassDef& cls : classes) {
        if (cls.name == name) return &cls;
    }
    return nullptr;
}

}  // namespace repogen::minilang
