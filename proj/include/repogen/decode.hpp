#pragma once

// Decoding: greedy generation with the completion tool in the loop, the
// prefix trie over tokenized suggestions and the masked greedy walk that picks
// one suggestion, plus the per-call suggestion cache.

#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "repogen/analysis.hpp"
#include "repogen/lm.hpp"

namespace repogen::decode {

using lm::Distribution;
using lm::TokenId;

/// Raised when an internal invariant is broken (never on user input).
class InvariantError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

struct PrefixTrie {
    static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

    struct Node {
        TokenId token = -1;  // -1 at the root
        std::vector<std::size_t> children;
        bool terminal = false;
        std::size_t suggestion = kNone;  // index into `suggestions` when terminal
    };

    std::vector<Node> nodes;  // nodes[0] is the root
    std::vector<std::string> suggestions;  // as inserted (leading space included)
    std::vector<std::vector<TokenId>> sequences;
    /// Suggestions whose path runs through another suggestion's terminal; the
    /// walk stops at the first terminal, so they can never be selected.
    std::size_t shadowed = 0;

    std::optional<std::size_t> child(std::size_t node, TokenId token) const;
};

/// Whether a suggestion continuing `partial_text` should carry a leading
/// space, following the canonical spacing rules.
bool needs_leading_space(std::string_view partial_text);

PrefixTrie build_trie(const analysis::CompletionList& suggestions, const lm::Vocab& vocab,
                      bool leading_space = false);

/// Entries outside `allowed` set to 0, the rest unchanged.
Distribution mask_distribution(const Distribution& dist, std::span<const TokenId> allowed);

/// Index of the largest entry, lowest index on ties.
TokenId argmax(const Distribution& dist);

using Predictor = std::function<Distribution(std::span<const TokenId> prefix)>;

/// Masked greedy walk from the root to the first terminal. Returns the ids
/// appended after `prefix`.
std::vector<TokenId> select_suggestion(const Predictor& predict, std::vector<TokenId> prefix,
                                       const PrefixTrie& trie);
std::vector<TokenId> select_suggestion(const lm::NGramModel& model, std::span<const TokenId> description,
                                       std::vector<TokenId> prefix, const PrefixTrie& trie);

// ---------------------------------------------------------------------------

/// Within one generation, remembers suggestion lists by completion context.
/// A stored list is reused only when it provably equals what the tool would
/// return now: same context key, and the facts the list depends on (locals
/// for scope completions, self attributes for member completions) moved only
/// within the stored list.
class CompletionCache {
public:
    struct Probe {
        std::string key;
        std::set<std::string> facts;
    };

    /// Cache probe for the partial body text preceding the caret.
    static Probe probe(std::string_view partial_text);

    const analysis::CompletionList* find(const Probe& probe) const;
    void store(const Probe& probe, analysis::CompletionList list);
    std::size_t size() const { return entries_.size(); }

private:
    struct Entry {
        std::string key;
        std::set<std::string> facts;
        analysis::CompletionList list;
    };
    std::vector<Entry> entries_;
};

struct GenerationConfig {
    int max_tokens = 256;
    bool cache_enabled = true;
    bool tool_enabled = true;
};

enum class StepSource { Model, Tool };

struct GenerationTrace {
    std::vector<TokenId> tokens;      // emitted ids after <BOS>, markers included
    std::vector<StepSource> sources;  // parallel to tokens
    int steps = 0;                    // model predictions outside suggestion selection
    int triggers = 0;
    int tool_invocations = 0;
    int cache_hits = 0;
    int dropped_triggers = 0;  // triggers whose suggestion list was empty
    std::size_t shadowed_suggestions = 0;
    bool finished = false;     // stopped at <EOS> rather than the cap
};

struct GenerationResult {
    std::string text;  // body text, markers removed, indentation relative to the body
    GenerationTrace trace;
};

GenerationResult generate(const lm::NGramModel& model, const analysis::Repository& repo,
                          std::span<const TokenId> description, const analysis::CaretPosition& pos,
                          const GenerationConfig& config);

/// {steps, tool_invocations, cache_hits, triggers, dropped_triggers,
///  finished, sources[]} as a JSON document.
std::string trace_json(const GenerationTrace& trace);

}  // namespace repogen::decode
