#pragma once

// Static analysis over a repository of MiniPy files: scope resolution, the
// identifier-level completion provider, the dependency lint checker and the
// copy-on-write insertion used while a function is being generated.

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "repogen/minilang.hpp"

namespace repogen::analysis {

using minilang::SourcePos;

struct CaretPosition {
    std::string file;
    int line = 1;
    int column = 0;

    SourcePos pos() const { return {line, column}; }
    bool operator==(const CaretPosition&) const = default;
};

class PositionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Immutable-after-build set of source files. Copies share file storage, so
/// snapshots produced by `with_file` are cheap.
class Repository {
public:
    Repository() = default;
    explicit Repository(std::string name) : name_(std::move(name)) {}

    /// Every `.mp` file under `root`, keyed by its root-relative path.
    static Repository load(const std::filesystem::path& root, std::string name = {});

    const std::string& name() const { return name_; }

    void add_file(std::string path, std::string text);
    Repository with_file(std::string path, std::string text) const;

    bool contains(std::string_view path) const;
    const std::string& text(std::string_view path) const;
    const minilang::Module& module(std::string_view path) const;
    std::vector<std::string> paths() const;

    bool operator==(const Repository& other) const;

private:
    struct File {
        std::string text;
        minilang::Module module;
    };
    const File& file(std::string_view path) const;

    std::string name_;
    std::map<std::string, std::shared_ptr<const File>, std::less<>> files_;
};

/// Byte offset of (line, column); throws PositionError when out of bounds.
std::size_t offset_of(std::string_view text, int line, int column);

/// "pkg/util.mp" -> "pkg.util"
std::string module_name_for(std::string_view path);

// ---------------------------------------------------------------------------
// Scope index

struct Symbol {
    enum class Kind { Function, Class, Variable, Module, Unresolved };

    Kind kind = Kind::Unresolved;
    std::string file;  // defining file (target file for Module)
    std::string name;
    bool operator==(const Symbol&) const = default;
};

struct ClassInfo {
    std::string name;
    std::string file;
    std::vector<std::string> methods;
    std::vector<std::string> attributes;

    /// Methods and attributes, builtins removed, sorted.
    std::vector<std::string> members() const;
    bool operator==(const ClassInfo&) const = default;
};

struct IndexDiagnostic {
    std::string file;
    std::string message;
    bool operator==(const IndexDiagnostic&) const = default;
};

class ScopeIndex {
public:
    static ScopeIndex build(const Repository& repo);

    const Repository& repository() const { return repo_; }

    /// Names bound at module level in `file`, imported names included.
    const std::map<std::string, Symbol>& module_names(std::string_view file) const;
    std::optional<Symbol> resolve(std::string_view file, std::string_view name) const;
    const ClassInfo* find_class(std::string_view file, std::string_view name) const;
    const ClassInfo* find_class(const Symbol& symbol) const;
    /// Top-level definitions of `file` (what `module.` completes to).
    std::vector<std::string> module_members(std::string_view file) const;
    std::optional<std::string> file_for_module(std::string_view dotted) const;

    const std::vector<std::pair<std::string, std::string>>& import_edges() const { return edges_; }
    const std::vector<IndexDiagnostic>& diagnostics() const { return diagnostics_; }

    bool operator==(const ScopeIndex& other) const;

private:
    Repository repo_;
    std::map<std::string, std::map<std::string, Symbol>, std::less<>> names_;
    std::map<std::pair<std::string, std::string>, ClassInfo, std::less<>> classes_;
    std::vector<std::pair<std::string, std::string>> edges_;
    std::vector<IndexDiagnostic> diagnostics_;
};

// ---------------------------------------------------------------------------
// Function-level facts shared by completion, lint and the suggestion cache

struct LocalFacts {
    std::set<std::string> locals;                            // assigned names
    std::map<std::string, std::string> constructor_bindings; // x -> C for `x = C(...)`, most recent wins
    std::set<std::string> self_attributes;                   // `self.<name> = ...`

    bool operator==(const LocalFacts&) const = default;
};

/// Facts from assignments that start before `before`.
LocalFacts function_facts(const minilang::FunctionDef& func, SourcePos before = SourcePos::max());

/// Facts of a method body given as canonical text (indentation relative to
/// the body). Parsed in isolation; MiniPy lexing is line-local, so the result
/// matches what the body contributes once spliced into a file.
LocalFacts partial_body_facts(std::string_view body_text);

struct Enclosing {
    const minilang::FunctionDef* function = nullptr;
    const minilang::ClassDef* cls = nullptr;
};

Enclosing find_enclosing(const minilang::Module& module, SourcePos pos);

// ---------------------------------------------------------------------------
// Completion

/// Sorted ascending by code point, duplicate-free, builtins excluded.
using CompletionList = std::vector<std::string>;

struct CompletionContext {
    bool member_access = false;
    std::vector<std::string> receiver;  // dotted chain left of the '.'; empty when not a name chain

    bool operator==(const CompletionContext&) const = default;
};

CompletionContext completion_context(std::string_view text_before_caret);

struct ReceiverMembers {
    std::string label;  // class or module name
    std::vector<std::string> members;
};

/// Members reachable through `receiver.` at `at`; nullopt when the receiver
/// cannot be resolved statically.
std::optional<ReceiverMembers> receiver_members(const ScopeIndex& index, std::string_view file,
                                                const Enclosing& enclosing,
                                                const std::vector<std::string>& receiver, SourcePos at);

CompletionList tool_complete(const ScopeIndex& index, const CaretPosition& caret);
CompletionList tool_complete(const Repository& repo, const CaretPosition& caret);

bool is_builtin(std::string_view name);
const std::vector<std::string>& builtin_names();
bool is_identifier(const minilang::LexToken& tok);

// ---------------------------------------------------------------------------
// Lint

enum class LintKind { SyntaxError, UndefinedVariable, NoMember };

std::string_view to_string(LintKind kind);

struct LintError {
    LintKind kind = LintKind::SyntaxError;
    std::string file;
    SourcePos pos;
    std::string message;
    bool operator==(const LintError&) const = default;
};

std::vector<LintError> lint_check(const ScopeIndex& index, std::string_view file);
std::vector<LintError> lint_check(const Repository& repo, std::string_view file);

/// One JSON object per line: {file, line, column, kind, message}.
std::string lint_report_jsonl(const std::vector<LintError>& errors);

// ---------------------------------------------------------------------------
// Insertion

/// Removes <BOS>, <EOS> and <COMP> marker text.
std::string strip_markers(std::string_view text);

struct InsertResult {
    Repository snapshot;
    CaretPosition caret;  // immediately after the last inserted character
};

/// Splices `partial_text` (markers removed, every line after the first
/// indented by pos.column) at `pos`. The input repository is not modified.
InsertResult insert(const Repository& repo, const CaretPosition& pos, std::string_view partial_text);

}  // namespace repogen::analysis
