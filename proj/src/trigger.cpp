#include "repogen/trigger.hpp"

#include <algorithm>

#include <json.hpp>

#include "repogen/lm.hpp"
#include "repogen/parallel.hpp"

namespace repogen::trigger {

using minilang::LexToken;
using minilang::TokenKind;

std::string AugmentedFunction::text() const { return minilang::render_tokens(augmented_body); }

std::string description_of(const minilang::FunctionDef& func) {
    return func.signature_text + " " + func.docstring.value_or("");
}

std::vector<std::size_t> trigger_positions(const analysis::ScopeIndex& index, std::string_view file,
                                           std::span<const LexToken> body, std::vector<std::string>* diagnostics) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < body.size(); ++i) {
        const LexToken& tok = body[i];
        if (!analysis::is_identifier(tok) || analysis::is_builtin(tok.text)) continue;
        analysis::CaretPosition caret{std::string(file), tok.line, tok.column};
        try {
            analysis::CompletionList suggestions = analysis::tool_complete(index, caret);
            if (std::binary_search(suggestions.begin(), suggestions.end(), tok.text)) out.push_back(i);
        } catch (const std::exception& error) {
            if (diagnostics != nullptr) {
                diagnostics->push_back(std::string(file) + ":" + std::to_string(tok.line) + ":" +
                                       std::to_string(tok.column) + ": completion failed: " + error.what());
            }
        }
    }
    return out;
}

AugmentedFunction insert_triggers(const analysis::ScopeIndex& index, std::string_view file,
                                  const minilang::FunctionDef& func, std::vector<std::string>* diagnostics) {
    if (!func.has_docstring()) throw MissingDocstring("function '" + func.name + "' has no docstring");
    AugmentedFunction aug;
    aug.description = description_of(func);
    aug.source = FunctionSource{index.repository().name(), std::string(file), func.pos.line, func.name};
    std::vector<std::size_t> marked = trigger_positions(index, file, func.body_tokens, diagnostics);
    std::size_t next = 0;
    for (std::size_t i = 0; i < func.body_tokens.size(); ++i) {
        const LexToken& tok = func.body_tokens[i];
        if (next < marked.size() && marked[next] == i) {
            aug.augmented_body.push_back(
                LexToken{TokenKind::Marker, std::string(minilang::kCompMarker), tok.line, tok.column});
            ++aug.comp_count;
            ++next;
        }
        aug.augmented_body.push_back(tok);
    }
    return aug;
}

AugmentedFunction insert_triggers(const analysis::Repository& repo, std::string_view file,
                                  const minilang::FunctionDef& func) {
    return insert_triggers(analysis::ScopeIndex::build(repo), file, func);
}

std::string strip_triggers(const AugmentedFunction& aug) {
    std::vector<LexToken> plain;
    for (const LexToken& tok : aug.augmented_body) {
        if (tok.kind != TokenKind::Marker) plain.push_back(tok);
    }
    return minilang::render_tokens(plain);
}

std::string strip_trigger_text(std::string_view text) {
    std::string out;
    std::size_t i = 0;
    while (i < text.size()) {
        if (text.substr(i).starts_with(minilang::kCompMarker)) {
            i += minilang::kCompMarker.size();
        } else {
            out += text[i++];
        }
    }
    return out;
}

DatasetStats compute_stats(const std::vector<AugmentedFunction>& pairs) {
    DatasetStats stats;
    stats.pairs = pairs.size();
    if (pairs.empty()) return stats;
    double description = 0;
    double body = 0;
    double comps = 0;
    for (const AugmentedFunction& aug : pairs) {
        description += static_cast<double>(lm::split_pieces(aug.description).size());
        body += static_cast<double>(lm::split_pieces(aug.text()).size());
        comps += aug.comp_count;
    }
    const auto n = static_cast<double>(pairs.size());
    stats.mean_description_tokens = description / n;
    stats.mean_body_tokens = body / n;
    stats.mean_comp_count = comps / n;
    return stats;
}

std::vector<DatasetRecord> AugmentedDataset::records() const {
    std::vector<DatasetRecord> out;
    out.reserve(pairs.size());
    for (const AugmentedFunction& aug : pairs) {
        out.push_back(DatasetRecord{aug.source.repo, aug.source.file, aug.source.line, aug.description, aug.text(),
                                    aug.comp_count});
    }
    return out;
}

AugmentedDataset augment_corpus(const std::vector<analysis::Repository>& repos, std::string corpus_id, int jobs) {
    std::vector<const analysis::Repository*> ordered;
    for (const analysis::Repository& repo : repos) ordered.push_back(&repo);
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const auto* a, const auto* b) { return a->name() < b->name(); });

    struct Slot {
        std::vector<AugmentedFunction> pairs;
        std::vector<std::string> diagnostics;
        std::size_t skipped = 0;
    };
    std::vector<Slot> slots(ordered.size());
    parallel_for(ordered.size(), jobs, [&](std::size_t i) {
        const analysis::Repository& repo = *ordered[i];
        analysis::ScopeIndex index = analysis::ScopeIndex::build(repo);
        Slot& slot = slots[i];
        for (const std::string& path : repo.paths()) {
            const minilang::Module& module = repo.module(path);
            for (const minilang::Diagnostic& error : module.errors) {
                slot.diagnostics.push_back(repo.name() + "/" + path + ":" + std::to_string(error.pos.line) + ":" +
                                           std::to_string(error.pos.column) + ": " + error.message);
            }
            for (const minilang::FunctionDef* func : minilang::extract_functions(module)) {
                if (!func->has_docstring()) {
                    ++slot.skipped;
                    continue;
                }
                slot.pairs.push_back(insert_triggers(index, path, *func, &slot.diagnostics));
            }
        }
    });

    AugmentedDataset dataset;
    dataset.corpus_id = std::move(corpus_id);
    for (Slot& slot : slots) {
        for (AugmentedFunction& aug : slot.pairs) dataset.pairs.push_back(std::move(aug));
        for (std::string& diag : slot.diagnostics) dataset.diagnostics.push_back(std::move(diag));
        dataset.stats.skipped_without_docstring += slot.skipped;
    }
    std::size_t skipped = dataset.stats.skipped_without_docstring;
    dataset.stats = compute_stats(dataset.pairs);
    dataset.stats.skipped_without_docstring = skipped;
    return dataset;
}

std::string dataset_jsonl(const std::vector<DatasetRecord>& records) {
    std::string out;
    for (const DatasetRecord& record : records) {
        nlohmann::json row;
        row["augmented_body"] = record.augmented_body;
        row["comp_count"] = record.comp_count;
        row["description"] = record.description;
        row["file"] = record.file;
        row["line"] = record.line;
        row["repo"] = record.repo;
        out += row.dump() + "\n";
    }
    return out;
}

std::vector<DatasetRecord> parse_dataset_jsonl(std::string_view text) {
    std::vector<DatasetRecord> out;
    std::size_t start = 0;
    int line_no = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        try {
            nlohmann::json row = nlohmann::json::parse(line);
            DatasetRecord record;
            record.repo = row.at("repo").get<std::string>();
            record.file = row.at("file").get<std::string>();
            record.line = row.at("line").get<int>();
            record.description = row.at("description").get<std::string>();
            record.augmented_body = row.at("augmented_body").get<std::string>();
            record.comp_count = row.at("comp_count").get<int>();
            out.push_back(std::move(record));
        } catch (const nlohmann::json::exception& error) {
            throw std::runtime_error("dataset line " + std::to_string(line_no) + ": " + error.what());
        }
    }
    return out;
}

std::string stats_json(const AugmentedDataset& dataset) {
    nlohmann::json doc;
    doc["corpus"] = dataset.corpus_id;
    doc["tool_version"] = dataset.tool_version;
    doc["pairs"] = dataset.stats.pairs;
    doc["mean_description_tokens"] = dataset.stats.mean_description_tokens;
    doc["mean_body_tokens"] = dataset.stats.mean_body_tokens;
    doc["mean_comp_count"] = dataset.stats.mean_comp_count;
    doc["skipped_without_docstring"] = dataset.stats.skipped_without_docstring;
    doc["diagnostics"] = dataset.diagnostics;
    return doc.dump(2) + "\n";
}

}  // namespace repogen::trigger
