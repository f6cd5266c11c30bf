#include "repogen/analysis.hpp"

#include <algorithm>

#include <json.hpp>

namespace repogen::analysis {

namespace {

using minilang::Expr;
using minilang::FunctionDef;
using minilang::Stmt;

std::vector<std::string> split_dotted(const std::string& dotted) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        std::size_t dot = dotted.find('.', start);
        parts.push_back(dotted.substr(start, dot - start));
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    return parts;
}

class Checker {
public:
    Checker(const ScopeIndex& index, std::string_view file, std::vector<LintError>& out)
        : index_(index), file_(file), out_(out) {
        for (const auto& [name, symbol] : index.module_names(file)) module_names_.insert(name);
    }

    void check_function(const FunctionDef& func, const minilang::ClassDef* cls) {
        enclosing_ = Enclosing{&func, cls};
        defined_ = module_names_;
        defined_.insert(func.params.begin(), func.params.end());
        for (const Stmt* stmt : minilang::assignments(func.body)) {
            if (stmt->target->kind == Expr::Kind::Name) defined_.insert(stmt->target->text);
        }
        for (const Stmt& stmt : func.body) visit(stmt);
    }

    void check_module_statement(const Stmt& stmt) {
        enclosing_ = Enclosing{};
        defined_ = module_names_;
        visit(stmt);
    }

private:
    void report(LintKind kind, SourcePos pos, std::string message) {
        out_.push_back(LintError{kind, std::string(file_), pos, std::move(message)});
    }

    void visit(const Stmt& stmt) {
        if (stmt.kind == Stmt::Kind::Assign && stmt.target->kind == Expr::Kind::Attribute) {
            // Stores create members; only the receiver is a use.
            visit(*stmt.target->children.front());
        }
        if (stmt.value) visit(*stmt.value);
        for (const Stmt& inner : stmt.body) visit(inner);
        for (const Stmt& inner : stmt.orelse) visit(inner);
    }

    void visit(const Expr& expr) {
        switch (expr.kind) {
            case Expr::Kind::Name:
                if (!defined_.contains(expr.text) && !is_builtin(expr.text)) {
                    report(LintKind::UndefinedVariable, expr.pos, "undefined variable '" + expr.text + "'");
                }
                return;
            case Expr::Kind::Attribute:
                check_member(expr);
                break;
            default:
                break;
        }
        for (const minilang::ExprPtr& child : expr.children) visit(*child);
    }

    void check_member(const Expr& attr) {
        if (is_builtin(attr.text)) return;
        std::optional<std::string> receiver = minilang::dotted_name(*attr.children.front());
        if (!receiver) return;
        std::optional<ReceiverMembers> members =
            receiver_members(index_, file_, enclosing_, split_dotted(*receiver), attr.name_pos);
        if (!members) return;
        if (!std::binary_search(members->members.begin(), members->members.end(), attr.text)) {
            report(LintKind::NoMember, attr.name_pos,
                   "'" + members->label + "' has no member '" + attr.text + "'");
        }
    }

    const ScopeIndex& index_;
    std::string_view file_;
    std::vector<LintError>& out_;
    std::set<std::string> module_names_;
    std::set<std::string> defined_;
    Enclosing enclosing_;
};

}  // namespace

std::string_view to_string(LintKind kind) {
    switch (kind) {
        case LintKind::SyntaxError: return "syntax-error";
        case LintKind::UndefinedVariable: return "undefined-variable";
        case LintKind::NoMember: return "no-member";
    }
    return "syntax-error";
}

std::vector<LintError> lint_check(const ScopeIndex& index, std::string_view file) {
    const Repository& repo = index.repository();
    if (!repo.contains(file)) throw PositionError("no such file in repository: " + std::string(file));
    const minilang::Module& module = repo.module(file);
    std::vector<LintError> out;
    for (const minilang::Diagnostic& diag : module.errors) {
        out.push_back(LintError{LintKind::SyntaxError, std::string(file), diag.pos, diag.message});
    }
    Checker checker(index, file, out);
    for (const FunctionDef& func : module.functions) checker.check_function(func, nullptr);
    for (const minilang::ClassDef& cls : module.classes) {
        for (const FunctionDef& method : cls.methods) checker.check_function(method, &cls);
    }
    for (const Stmt& stmt : module.statement_asts) checker.check_module_statement(stmt);
    std::stable_sort(out.begin(), out.end(), [](const LintError& a, const LintError& b) {
        if (a.pos != b.pos) return a.pos < b.pos;
        return a.kind < b.kind;
    });
    return out;
}

std::vector<LintError> lint_check(const Repository& repo, std::string_view file) {
    return lint_check(ScopeIndex::build(repo), file);
}

std::string lint_report_jsonl(const std::vector<LintError>& errors) {
    std::string out;
    for (const LintError& error : errors) {
        nlohmann::ordered_json record;
        record["file"] = error.file;
        record["line"] = error.pos.line;
        record["column"] = error.pos.column;
        record["kind"] = to_string(error.kind);
        record["message"] = error.message;
        out += record.dump() + "\n";
    }
    return out;
}

}  // namespace repogen::analysis
