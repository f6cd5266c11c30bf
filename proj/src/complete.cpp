#include "repogen/analysis.hpp"

#include <algorithm>

namespace repogen::analysis {

namespace {

using minilang::Expr;
using minilang::FunctionDef;
using minilang::LexToken;
using minilang::TokenKind;

// Names every MiniPy program can use without defining them. Version 1.
const std::vector<std::string> kBuiltins = {
    "__class__", "__dict__", "__doc__", "__init__", "__module__", "__name__", "abs",
    "bool",      "dict",     "enumerate", "float",  "int",        "isinstance", "len",
    "list",      "max",      "min",     "object",   "print",      "range",    "set",
    "sorted",    "str",      "sum",     "super",    "tuple",      "zip",
};

bool is_layout(const LexToken& tok) {
    return tok.kind == TokenKind::Indent || tok.kind == TokenKind::Dedent;
}

std::string join_dotted(const std::vector<std::string>& parts) {
    std::string out;
    for (const std::string& part : parts) {
        if (!out.empty()) out += '.';
        out += part;
    }
    return out;
}

}  // namespace

const std::vector<std::string>& builtin_names() { return kBuiltins; }

bool is_builtin(std::string_view name) {
    return std::binary_search(kBuiltins.begin(), kBuiltins.end(), name, std::less<>());
}

bool is_identifier(const LexToken& tok) { return tok.kind == TokenKind::Identifier; }

LocalFacts function_facts(const FunctionDef& func, SourcePos before) {
    LocalFacts facts;
    bool method = !func.params.empty() && func.params.front() == "self";
    for (const minilang::Stmt* stmt : minilang::assignments(func.body)) {
        if (!(stmt->pos < before)) break;
        const Expr& target = *stmt->target;
        if (target.kind == Expr::Kind::Name) {
            facts.locals.insert(target.text);
            const Expr* value = stmt->value.get();
            if (value != nullptr && value->kind == Expr::Kind::Call &&
                value->children.front()->kind == Expr::Kind::Name) {
                facts.constructor_bindings[target.text] = value->children.front()->text;
            }
        } else if (method && target.kind == Expr::Kind::Attribute &&
                   target.children.front()->kind == Expr::Kind::Name &&
                   target.children.front()->text == "self") {
            facts.self_attributes.insert(target.text);
        }
    }
    return facts;
}

LocalFacts partial_body_facts(std::string_view body_text) {
    return function_facts(minilang::parse_body(body_text));
}

Enclosing find_enclosing(const minilang::Module& module, SourcePos pos) {
    Enclosing out;
    for (const FunctionDef& func : module.functions) {
        if (func.pos < pos && pos < func.end) out.function = &func;
    }
    for (const minilang::ClassDef& cls : module.classes) {
        if (!(cls.pos < pos && pos < cls.end)) continue;
        out.cls = &cls;
        for (const FunctionDef& method : cls.methods) {
            if (method.pos < pos && pos < method.end) out.function = &method;
        }
    }
    return out;
}

CompletionContext completion_context(std::string_view text_before_caret) {
    std::vector<LexToken> tokens = minilang::lex_recovering(text_before_caret).tokens;
    while (!tokens.empty() && is_layout(tokens.back())) tokens.pop_back();
    if (!tokens.empty()) {
        // An identifier touching the caret is the word being completed.
        const LexToken& last = tokens.back();
        bool word = last.kind == TokenKind::Identifier || last.kind == TokenKind::Keyword;
        if (word && !text_before_caret.empty() && text_before_caret.ends_with(last.text) &&
            text_before_caret.back() != ' ') {
            tokens.pop_back();
        }
    }
    CompletionContext ctx;
    if (tokens.empty() || !tokens.back().is(TokenKind::Punctuator, ".")) return ctx;
    ctx.member_access = true;
    std::vector<std::string> chain;
    std::size_t i = tokens.size() - 1;  // at a '.'
    while (true) {
        if (i == 0 || tokens[i - 1].kind != TokenKind::Identifier) return ctx;
        chain.push_back(tokens[i - 1].text);
        if (i - 1 == 0 || !tokens[i - 2].is(TokenKind::Punctuator, ".")) break;
        i -= 2;
    }
    std::reverse(chain.begin(), chain.end());
    ctx.receiver = std::move(chain);
    return ctx;
}

std::optional<ReceiverMembers> receiver_members(const ScopeIndex& index, std::string_view file,
                                                const Enclosing& enclosing,
                                                const std::vector<std::string>& receiver, SourcePos at) {
    if (receiver.empty()) return std::nullopt;
    const FunctionDef* func = enclosing.function;
    const std::string& head = receiver.front();
    if (func != nullptr) {
        bool is_param = std::find(func->params.begin(), func->params.end(), head) != func->params.end();
        LocalFacts facts = function_facts(*func, at);
        if (head == "self" && !func->params.empty() && func->params.front() == "self" && func->is_method &&
            enclosing.cls != nullptr) {
            if (receiver.size() != 1) return std::nullopt;
            const ClassInfo* info = index.find_class(file, enclosing.cls->name);
            if (info == nullptr) return std::nullopt;
            return ReceiverMembers{info->name, info->members()};
        }
        if (facts.locals.contains(head)) {
            auto binding = facts.constructor_bindings.find(head);
            if (receiver.size() != 1 || binding == facts.constructor_bindings.end()) return std::nullopt;
            std::optional<Symbol> symbol = index.resolve(file, binding->second);
            const ClassInfo* info = symbol ? index.find_class(*symbol) : nullptr;
            if (info == nullptr) return std::nullopt;
            return ReceiverMembers{info->name, info->members()};
        }
        if (is_param) return std::nullopt;
    }
    std::optional<Symbol> symbol = index.resolve(file, head);
    if (!symbol || symbol->kind != Symbol::Kind::Module) return std::nullopt;
    std::string dotted = join_dotted(receiver);
    std::optional<std::string> target = index.file_for_module(dotted);
    if (!target) return std::nullopt;
    return ReceiverMembers{dotted, index.module_members(*target)};
}

CompletionList tool_complete(const ScopeIndex& index, const CaretPosition& caret) {
    const Repository& repo = index.repository();
    if (!repo.contains(caret.file)) throw PositionError("no such file in repository: " + caret.file);
    const std::string& text = repo.text(caret.file);
    std::size_t offset = offset_of(text, caret.line, caret.column);
    CompletionContext ctx = completion_context(std::string_view(text).substr(0, offset));
    const minilang::Module& module = repo.module(caret.file);
    Enclosing enclosing = find_enclosing(module, caret.pos());

    if (ctx.member_access) {
        std::optional<ReceiverMembers> members =
            receiver_members(index, caret.file, enclosing, ctx.receiver, caret.pos());
        return members ? members->members : CompletionList{};
    }

    std::set<std::string> names;
    if (enclosing.function != nullptr) {
        names.insert(enclosing.function->params.begin(), enclosing.function->params.end());
        LocalFacts facts = function_facts(*enclosing.function, caret.pos());
        names.insert(facts.locals.begin(), facts.locals.end());
    }
    for (const auto& [name, symbol] : index.module_names(caret.file)) names.insert(name);
    CompletionList out;
    for (const std::string& name : names) {
        if (!is_builtin(name)) out.push_back(name);
    }
    return out;
}

CompletionList tool_complete(const Repository& repo, const CaretPosition& caret) {
    return tool_complete(ScopeIndex::build(repo), caret);
}

}  // namespace repogen::analysis
