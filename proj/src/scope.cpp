#include "repogen/analysis.hpp"

#include <algorithm>
#include <functional>

namespace repogen::analysis {

namespace {

using minilang::Module;

struct Builder {
    const Repository& repo;
    std::map<std::string, std::string> module_files;  // dotted name -> path
    std::map<std::string, std::map<std::string, Symbol>> local;

    std::optional<std::string> file_for(const std::string& dotted) const {
        auto it = module_files.find(dotted);
        if (it == module_files.end()) return std::nullopt;
        return it->second;
    }

    // Follows `from m import name` chains; nullopt when the chain dead-ends
    // or loops.
    std::optional<Symbol> resolve(const std::string& file, const std::string& name,
                                  std::set<std::pair<std::string, std::string>>& visiting) const {
        if (!visiting.insert({file, name}).second) return std::nullopt;
        auto defs = local.find(file);
        if (defs != local.end()) {
            auto it = defs->second.find(name);
            if (it != defs->second.end()) return it->second;
        }
        for (const minilang::ImportDecl& decl : repo.module(file).imports) {
            if (std::find(decl.names.begin(), decl.names.end(), name) == decl.names.end()) continue;
            if (auto target = file_for(decl.module)) return resolve(*target, name, visiting);
        }
        return std::nullopt;
    }
};

void local_definitions(const Module& module, const std::string& file, std::map<std::string, Symbol>& out) {
    for (const minilang::VariableDef& var : module.variables) {
        out.emplace(var.name, Symbol{Symbol::Kind::Variable, file, var.name});
    }
    for (const minilang::FunctionDef& func : module.functions) {
        out[func.name] = Symbol{Symbol::Kind::Function, file, func.name};
    }
    for (const minilang::ClassDef& cls : module.classes) {
        out[cls.name] = Symbol{Symbol::Kind::Class, file, cls.name};
    }
}

}  // namespace

std::vector<std::string> ClassInfo::members() const {
    std::set<std::string> all;
    for (const std::string& name : methods) {
        if (!is_builtin(name)) all.insert(name);
    }
    for (const std::string& name : attributes) {
        if (!is_builtin(name)) all.insert(name);
    }
    return {all.begin(), all.end()};
}

ScopeIndex ScopeIndex::build(const Repository& repo) {
    ScopeIndex index;
    index.repo_ = repo;
    Builder builder{repo, {}, {}};
    const std::vector<std::string> paths = repo.paths();
    for (const std::string& path : paths) {
        builder.module_files[module_name_for(path)] = path;
        const Module& module = repo.module(path);
        local_definitions(module, path, builder.local[path]);
        for (const minilang::ClassDef& cls : module.classes) {
            ClassInfo info;
            info.name = cls.name;
            info.file = path;
            for (const minilang::FunctionDef& method : cls.methods) info.methods.push_back(method.name);
            info.attributes = cls.attributes;
            index.classes_[{path, cls.name}] = std::move(info);
        }
    }

    for (const std::string& path : paths) {
        std::map<std::string, Symbol> names = builder.local[path];
        for (const minilang::ImportDecl& decl : repo.module(path).imports) {
            std::optional<std::string> target = builder.file_for(decl.module);
            if (target) {
                index.edges_.emplace_back(path, *target);
            } else {
                index.diagnostics_.push_back({path, "unresolved import '" + decl.module + "'"});
            }
            if (decl.names.empty()) {
                // `import a.b` binds `a`; the rest of the chain is resolved on access.
                std::string head = decl.module.substr(0, decl.module.find('.'));
                std::optional<std::string> head_file = builder.file_for(head);
                names.emplace(head, Symbol{Symbol::Kind::Module, head_file.value_or(""), head});
                continue;
            }
            for (const std::string& name : decl.names) {
                std::optional<Symbol> symbol;
                if (target) {
                    std::set<std::pair<std::string, std::string>> visiting;
                    symbol = builder.resolve(*target, name, visiting);
                    if (!symbol) {
                        index.diagnostics_.push_back(
                            {path, "cannot resolve '" + name + "' imported from '" + decl.module + "'"});
                    }
                }
                names.emplace(name, symbol.value_or(Symbol{Symbol::Kind::Unresolved, "", name}));
            }
        }
        index.names_[path] = std::move(names);
    }

    std::sort(index.edges_.begin(), index.edges_.end());
    index.edges_.erase(std::unique(index.edges_.begin(), index.edges_.end()), index.edges_.end());

    // Cycle report: one diagnostic per back edge found by a DFS in path order.
    std::map<std::string, std::vector<std::string>> adjacency;
    for (const auto& [from, to] : index.edges_) adjacency[from].push_back(to);
    std::map<std::string, int> state;  // 0 new, 1 on stack, 2 done
    std::vector<std::string> stack;
    std::function<void(const std::string&)> visit = [&](const std::string& node) {
        state[node] = 1;
        stack.push_back(node);
        for (const std::string& next : adjacency[node]) {
            if (state[next] == 1) {
                auto start = std::find(stack.begin(), stack.end(), next);
                std::string cycle;
                for (auto it = start; it != stack.end(); ++it) cycle += *it + " -> ";
                index.diagnostics_.push_back({node, "import cycle: " + cycle + next});
            } else if (state[next] == 0) {
                visit(next);
            }
        }
        stack.pop_back();
        state[node] = 2;
    };
    for (const std::string& path : paths) {
        if (state[path] == 0) visit(path);
    }
    return index;
}

const std::map<std::string, Symbol>& ScopeIndex::module_names(std::string_view file) const {
    static const std::map<std::string, Symbol> empty;
    auto it = names_.find(file);
    return it == names_.end() ? empty : it->second;
}

std::optional<Symbol> ScopeIndex::resolve(std::string_view file, std::string_view name) const {
    const auto& names = module_names(file);
    auto it = names.find(std::string(name));
    if (it == names.end()) return std::nullopt;
    return it->second;
}

const ClassInfo* ScopeIndex::find_class(std::string_view file, std::string_view name) const {
    auto it = classes_.find(std::pair<std::string, std::string>(file, name));
    return it == classes_.end() ? nullptr : &it->second;
}

const ClassInfo* ScopeIndex::find_class(const Symbol& symbol) const {
    if (symbol.kind != Symbol::Kind::Class) return nullptr;
    return find_class(symbol.file, symbol.name);
}

std::vector<std::string> ScopeIndex::module_members(std::string_view file) const {
    if (!repo_.contains(file)) return {};
    std::map<std::string, Symbol> defs;
    local_definitions(repo_.module(file), std::string(file), defs);
    std::vector<std::string> out;
    for (const auto& [name, symbol] : defs) {
        if (!is_builtin(name)) out.push_back(name);
    }
    return out;
}

std::optional<std::string> ScopeIndex::file_for_module(std::string_view dotted) const {
    for (const std::string& path : repo_.paths()) {
        if (module_name_for(path) == dotted) return path;
    }
    return std::nullopt;
}

bool ScopeIndex::operator==(const ScopeIndex& other) const {
    return repo_ == other.repo_ && names_ == other.names_ && classes_ == other.classes_ &&
           edges_ == other.edges_ && diagnostics_ == other.diagnostics_;
}

}  // namespace repogen::analysis
