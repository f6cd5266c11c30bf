#pragma once

// Trigger insertion: walk a function body, ask the completion provider at
// every non-builtin identifier and put a <COMP> marker in front of the ones it
// could have suggested. Also assembles and serializes the augmented dataset.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "repogen/analysis.hpp"
#include "repogen/minilang.hpp"

namespace repogen::trigger {

inline constexpr std::string_view kToolVersion = "repogen 0.1.0";

struct FunctionSource {
    std::string repo;
    std::string file;
    int line = 0;  // line of the `def`
    std::string name;
    bool operator==(const FunctionSource&) const = default;
};

struct AugmentedFunction {
    std::string description;                      // signature, a space, docstring
    std::vector<minilang::LexToken> augmented_body;  // body tokens with Marker tokens inserted
    FunctionSource source;
    int comp_count = 0;

    /// Canonical text of the augmented body, markers included.
    std::string text() const;
};

class MissingDocstring : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Indices of the body tokens that get a marker: non-builtin identifiers the
/// completion provider lists when asked at the identifier's first character.
std::vector<std::size_t> trigger_positions(const analysis::ScopeIndex& index, std::string_view file,
                                           std::span<const minilang::LexToken> body,
                                           std::vector<std::string>* diagnostics = nullptr);

/// `diagnostics` collects completion failures (those identifiers get no marker).
AugmentedFunction insert_triggers(const analysis::ScopeIndex& index, std::string_view file,
                                  const minilang::FunctionDef& func,
                                  std::vector<std::string>* diagnostics = nullptr);
AugmentedFunction insert_triggers(const analysis::Repository& repo, std::string_view file,
                                  const minilang::FunctionDef& func);

/// render_body of the original function.
std::string strip_triggers(const AugmentedFunction& aug);

/// Removes marker text from canonical augmented text.
std::string strip_trigger_text(std::string_view text);

std::string description_of(const minilang::FunctionDef& func);

struct DatasetStats {
    std::size_t pairs = 0;
    double mean_description_tokens = 0.0;  // tokenizer pieces
    double mean_body_tokens = 0.0;         // tokenizer pieces of the augmented body
    double mean_comp_count = 0.0;
    std::size_t skipped_without_docstring = 0;
};

/// One row of the dataset file.
struct DatasetRecord {
    std::string repo;
    std::string file;
    int line = 0;
    std::string description;
    std::string augmented_body;
    int comp_count = 0;
    bool operator==(const DatasetRecord&) const = default;
};

struct AugmentedDataset {
    std::vector<AugmentedFunction> pairs;
    std::string corpus_id;
    std::string tool_version{kToolVersion};
    DatasetStats stats;
    std::vector<std::string> diagnostics;

    std::vector<DatasetRecord> records() const;
};

/// Ordered by repository name, file path, then position; `jobs` only changes
/// how many repositories are processed at once.
AugmentedDataset augment_corpus(const std::vector<analysis::Repository>& repos, std::string corpus_id,
                                int jobs = 1);

DatasetStats compute_stats(const std::vector<AugmentedFunction>& pairs);

/// Dataset file: one JSON object per line with keys augmented_body,
/// comp_count, description, file, line, repo.
std::string dataset_jsonl(const std::vector<DatasetRecord>& records);
std::vector<DatasetRecord> parse_dataset_jsonl(std::string_view text);

/// Sidecar metadata document for a dataset.
std::string stats_json(const AugmentedDataset& dataset);

}  // namespace repogen::trigger
