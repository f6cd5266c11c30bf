#include "repogen/minilang.hpp"

#include <sstream>

namespace repogen::minilang {

namespace {

std::string indent_lines(const std::string& text, int depth) {
    if (text.empty()) return text;
    std::string prefix(static_cast<std::size_t>(4 * depth), ' ');
    std::string out = prefix;
    for (char c : text) {
        out += c;
        if (c == '\n') out += prefix;
    }
    return out;
}

std::string render_function(const FunctionDef& func, int depth) {
    std::string out = indent_lines(func.signature_text, depth) + "\n";
    std::string body;
    if (func.docstring_literal) body = *func.docstring_literal;
    std::string rendered = render_body(func);
    if (!rendered.empty()) body += (body.empty() ? "" : "\n") + rendered;
    if (body.empty()) body = "pass";
    return out + indent_lines(body, depth + 1);
}

std::string render_import(const ImportDecl& decl) {
    if (decl.names.empty()) return "import " + decl.module;
    std::string out = "from " + decl.module + " import ";
    for (std::size_t i = 0; i < decl.names.size(); ++i) {
        if (i > 0) out += ", ";
        out += decl.names[i];
    }
    return out;
}

bool functions_equal(const FunctionDef& a, const FunctionDef& b) {
    return a.name == b.name && a.params == b.params && a.docstring == b.docstring &&
           a.is_method == b.is_method && render_body(a) == render_body(b);
}

}  // namespace

bool needs_space(const LexToken& prev, const LexToken& next) {
    const std::string& n = next.text;
    const std::string& p = prev.text;
    if (next.kind == TokenKind::Punctuator && (n == "." || n == "," || n == ")" || n == ":" || n == "]")) {
        return false;
    }
    if (prev.kind == TokenKind::Punctuator && (p == "." || p == "(" || p == "[")) return false;
    if (next.kind == TokenKind::Punctuator && (n == "(" || n == "[")) {
        bool callable = prev.kind == TokenKind::Identifier || prev.kind == TokenKind::String ||
                        (prev.kind == TokenKind::Punctuator && (p == ")" || p == "]"));
        return !callable;
    }
    return true;
}

std::string render_tokens(std::span<const LexToken> tokens) {
    std::string out;
    int depth = 0;
    bool line_start = true;
    bool any_line = false;
    const LexToken* prev = nullptr;
    for (const LexToken& tok : tokens) {
        switch (tok.kind) {
            case TokenKind::Newline:
                line_start = true;
                prev = nullptr;
                continue;
            case TokenKind::Indent:
                ++depth;
                continue;
            case TokenKind::Dedent:
                --depth;
                continue;
            default:
                break;
        }
        if (line_start) {
            if (any_line) out += '\n';
            out.append(static_cast<std::size_t>(4 * std::max(depth, 0)), ' ');
            line_start = false;
            any_line = true;
        } else if (tok.kind != TokenKind::Marker && prev != nullptr && needs_space(*prev, tok)) {
            out += ' ';
        }
        out += tok.text;
        if (tok.kind != TokenKind::Marker) prev = &tok;
    }
    return out;
}

std::string render_body(const FunctionDef& func) { return render_tokens(func.body_tokens); }

std::string render_module(const Module& module) {
    std::ostringstream out;
    for (const Module::Item& item : module.items) {
        switch (item.kind) {
            case Module::ItemKind::Import:
                out << render_import(module.imports[item.index]) << "\n";
                break;
            case Module::ItemKind::Function:
                out << render_function(module.functions[item.index], 0) << "\n";
                break;
            case Module::ItemKind::Class: {
                const ClassDef& cls = module.classes[item.index];
                out << "class " << cls.name << ":\n";
                if (cls.methods.empty()) out << "    pass\n";
                for (const FunctionDef& method : cls.methods) out << render_function(method, 1) << "\n";
                break;
            }
            case Module::ItemKind::Statement: {
                std::string text = render_tokens(module.statements[item.index]);
                if (!text.empty()) out << text << "\n";
                break;
            }
        }
    }
    return out.str();
}

std::string canonicalize(std::string_view text) {
    LexResult lexed = lex_recovering(text);
    return render_tokens(lexed.tokens);
}

bool structurally_equal(const Module& a, const Module& b) {
    if (a.path != b.path || a.imports.size() != b.imports.size() || a.classes.size() != b.classes.size() ||
        a.functions.size() != b.functions.size() || a.variables.size() != b.variables.size() ||
        a.statements.size() != b.statements.size() || a.items.size() != b.items.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.items.size(); ++i) {
        if (a.items[i].kind != b.items[i].kind || a.items[i].index != b.items[i].index) return false;
    }
    for (std::size_t i = 0; i < a.imports.size(); ++i) {
        if (a.imports[i].module != b.imports[i].module || a.imports[i].names != b.imports[i].names) return false;
    }
    for (std::size_t i = 0; i < a.functions.size(); ++i) {
        if (!functions_equal(a.functions[i], b.functions[i])) return false;
    }
    for (std::size_t i = 0; i < a.classes.size(); ++i) {
        const ClassDef& x = a.classes[i];
        const ClassDef& y = b.classes[i];
        if (x.name != y.name || x.attributes != y.attributes || x.methods.size() != y.methods.size()) return false;
        for (std::size_t j = 0; j < x.methods.size(); ++j) {
            if (!functions_equal(x.methods[j], y.methods[j])) return false;
        }
    }
    for (std::size_t i = 0; i < a.variables.size(); ++i) {
        if (a.variables[i].name != b.variables[i].name) return false;
    }
    for (std::size_t i = 0; i < a.statements.size(); ++i) {
        if (render_tokens(a.statements[i]) != render_tokens(b.statements[i])) return false;
    }
    return true;
}

}  // namespace repogen::minilang
