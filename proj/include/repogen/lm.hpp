#pragma once

// The language model side: a vocabulary that always contains the <COMP>
// trigger token, a rule-based subword tokenizer, and a description-conditioned
// backoff n-gram model trained by counting.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace repogen::lm {

using TokenId = std::int32_t;

inline constexpr TokenId kBos = 0;
inline constexpr TokenId kEos = 1;
inline constexpr TokenId kUnk = 2;
inline constexpr TokenId kComp = 3;
inline constexpr std::string_view kBosText = "<BOS>";
inline constexpr std::string_view kEosText = "<EOS>";
inline constexpr std::string_view kUnkText = "<UNK>";
inline constexpr std::string_view kCompText = "<COMP>";

class VocabError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Vocab {
public:
    /// Reserved tokens, then the sorted union of the printable-ASCII alphabet
    /// and every piece the tokenizer cuts from the corpus.
    static Vocab build(std::span<const std::string> corpus);
    /// Rebuilds from a stored token list; the reserved prefix is checked.
    static Vocab from_tokens(std::vector<std::string> tokens);

    std::size_t size() const { return tokens_.size(); }
    std::optional<TokenId> find(std::string_view token) const;
    const std::string& token(TokenId id) const;
    const std::vector<std::string>& tokens() const { return tokens_; }
    std::size_t max_token_length() const { return max_length_; }

    bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenId> index_;
    std::size_t max_length_ = 0;
};

/// Splits text into tokenizer pieces. Concatenating the pieces gives back the
/// input. A single space separating two chunks is carried as the first
/// character of the following piece; a newline plus its indentation is one
/// piece; identifiers break at underscores (each its own piece) and at
/// lower-to-upper case transitions.
std::vector<std::string> split_pieces(std::string_view text);

/// Pieces missing from the vocabulary are covered greedily by their longest
/// known prefixes; a character nothing covers becomes <UNK>.
std::vector<TokenId> tokenize(std::string_view text, const Vocab& vocab);

/// Concatenation of token texts; reserved tokens render as their literal.
std::string detokenize(std::span<const TokenId> ids, const Vocab& vocab);

/// Same, with <BOS>, <EOS> and <COMP> left out.
std::string detokenize_plain(std::span<const TokenId> ids, const Vocab& vocab);

// ---------------------------------------------------------------------------

using Distribution = std::vector<double>;

struct TrainingPair {
    std::vector<TokenId> description;
    std::vector<TokenId> target;  // starts with <BOS>, ends with <EOS>
};

class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ModelFileError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class VersionError : public ModelFileError {
public:
    using ModelFileError::ModelFileError;
};

class CorruptFileError : public ModelFileError {
public:
    using ModelFileError::ModelFileError;
};

struct NGramOptions {
    int order = 3;
    double alpha = 0.1;
    std::uint32_t buckets = 16;
};

/// Bucket of a description: the smallest FNV-1a hash over its distinct
/// lower-cased alphanumeric subwords (one-permutation MinHash), modulo
/// `buckets`.
std::uint32_t description_bucket(std::span<const TokenId> description, const Vocab& vocab,
                                 std::uint32_t buckets);

/// Context slot standing for a whole marked identifier. Not a vocabulary id;
/// it only appears inside model contexts.
inline constexpr TokenId kFoldedIdentifier = -2;

/// How a marked identifier at the very end of a prefix enters the context.
/// While a suggestion is being spelled its pieces stay visible (Spelling);
/// once it is finished it folds into one slot like every earlier one (Free).
enum class ContextMode { Free, Spelling };

class NGramModel {
public:
    static constexpr std::uint32_t kGlobal = 0xFFFFFFFFu;
    static constexpr std::uint8_t kFormatVersion = 1;

    NGramModel(Vocab vocab, NGramOptions options);

    static NGramModel train(std::span<const TrainingPair> dataset, Vocab vocab, NGramOptions options);

    const Vocab& vocab() const { return vocab_; }
    const NGramOptions& options() const { return options_; }

    std::uint32_t bucket_of(std::span<const TokenId> description) const;

    /// Smoothed next-token distribution. Levels run from the empty context to
    /// the longest one, the global table before the description bucket at
    /// each length; every observed level is additively smoothed toward the
    /// distribution of the levels below it (uniform at the bottom).
    Distribution predict(std::span<const TokenId> description, std::span<const TokenId> prefix,
                         ContextMode mode = ContextMode::Free) const;
    Distribution predict_in_bucket(std::uint32_t bucket, std::span<const TokenId> prefix,
                                   ContextMode mode = ContextMode::Free) const;

    /// Mean per-token negative log-likelihood of the targets.
    double average_nll(std::span<const TrainingPair> dataset) const;

    std::string serialize() const;
    static NGramModel deserialize(std::string_view bytes);
    void save(const std::filesystem::path& path) const;
    static NGramModel load(const std::filesystem::path& path);

    std::size_t context_count() const { return table_.size(); }
    bool operator==(const NGramModel& other) const;

private:
    struct Key {
        std::uint32_t bucket;
        std::vector<TokenId> context;
        auto operator<=>(const Key&) const = default;
    };
    struct Counts {
        std::uint64_t total = 0;
        std::map<TokenId, std::uint64_t> next;
        bool operator==(const Counts&) const = default;
    };

    /// The last `length` tokens of the prefix with every marked identifier
    /// (<COMP> and the identifier pieces after it) folded into one
    /// kFoldedIdentifier slot, left-padded with <BOS>. In Spelling mode a marked identifier
    /// at the very end stays spelled out.
    void context_key(std::span<const TokenId> prefix, int length, ContextMode mode, std::vector<TokenId>& out) const;
    /// Mode each target position is trained (and scored) under.
    std::vector<ContextMode> target_modes(std::span<const TokenId> target) const;
    void observe(std::uint32_t bucket, std::span<const TokenId> target);
    const Counts* lookup(std::uint32_t bucket, std::vector<TokenId>& scratch, std::span<const TokenId> prefix,
                         int length, ContextMode mode) const;

    Vocab vocab_;
    NGramOptions options_;
    std::map<Key, Counts> table_;
    std::vector<bool> word_piece_;  // per id: identifier characters only, no leading space
};

}  // namespace repogen::lm
