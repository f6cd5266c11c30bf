#include "repogen/lm.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace repogen::lm {

namespace {

constexpr std::string_view kMagic = "RGNM";

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (char c : bytes) {
        hash ^= static_cast<unsigned char>(c);
        hash *= 0x100000001b3ull;
    }
    return hash;
}

bool is_word(std::string_view piece) {
    bool letter = false;
    for (char c : piece) {
        bool alpha = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
        if (!alpha && !(c >= '0' && c <= '9')) return false;
        letter = letter || alpha;
    }
    return letter;
}

class Writer {
public:
    void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void bytes(std::string_view s) { out_.append(s); }
    std::string& str() { return out_; }

private:
    std::string out_;
};

class Reader {
public:
    explicit Reader(std::string_view in) : in_(in) {}

    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(in_[pos_++]);
    }
    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
        return v;
    }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s(in_.substr(pos_, n));
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == in_.size(); }

private:
    void need(std::size_t n) const {
        if (in_.size() - pos_ < n) throw CorruptFileError("model file is truncated");
    }
    std::string_view in_;
    std::size_t pos_ = 0;
};

}  // namespace

std::uint32_t description_bucket(std::span<const TokenId> description, const Vocab& vocab,
                                 std::uint32_t buckets) {
    if (buckets == 0) return 0;
    std::set<std::string> words;
    for (TokenId id : description) {
        std::string piece = vocab.token(id);
        if (!piece.empty() && piece.front() == ' ') piece.erase(piece.begin());
        if (!is_word(piece)) continue;
        for (char& c : piece) {
            if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        }
        words.insert(std::move(piece));
    }
    // One-permutation MinHash: descriptions sharing most of their words
    // usually share the minimum too.
    std::uint64_t least = 0;
    for (const std::string& word : words) {
        std::uint64_t h = fnv1a(word);
        if (least == 0 || h < least) least = h;
    }
    return static_cast<std::uint32_t>(least % buckets);
}

NGramModel::NGramModel(Vocab vocab, NGramOptions options) : vocab_(std::move(vocab)), options_(options) {
    word_piece_.reserve(vocab_.size());
    for (const std::string& token : vocab_.tokens()) {
        bool glued = !token.empty() && std::all_of(token.begin(), token.end(), [](char c) {
            return c == '_' || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
        });
        word_piece_.push_back(glued);
    }
    if (options_.order < 1) throw TrainingError("n-gram order must be at least 1");
    if (!(options_.alpha > 0.0) || !std::isfinite(options_.alpha)) {
        throw TrainingError("smoothing alpha must be positive");
    }
    if (options_.buckets < 1) throw TrainingError("bucket count must be at least 1");
}

std::uint32_t NGramModel::bucket_of(std::span<const TokenId> description) const {
    return description_bucket(description, vocab_, options_.buckets);
}

std::vector<ContextMode> NGramModel::target_modes(std::span<const TokenId> target) const {
    std::vector<ContextMode> modes(target.size(), ContextMode::Free);
    bool in_marked = false;  // target[i - 1] belongs to a marked identifier
    for (std::size_t i = 1; i < target.size(); ++i) {
        bool after_marker = target[i - 1] == kComp;
        bool spelling = after_marker || (in_marked && word_piece_[static_cast<std::size_t>(target[i])]);
        if (spelling) modes[i] = ContextMode::Spelling;
        in_marked = spelling;
    }
    return modes;
}

void NGramModel::observe(std::uint32_t bucket, std::span<const TokenId> target) {
    std::vector<ContextMode> modes = target_modes(target);
    std::vector<TokenId> context;
    for (std::size_t i = 1; i < target.size(); ++i) {
        for (int k = 0; k < options_.order; ++k) {
            context_key(target.first(i), k, modes[i], context);
            for (std::uint32_t scope : {bucket, kGlobal}) {
                Counts& counts = table_[Key{scope, context}];
                ++counts.total;
                ++counts.next[target[i]];
            }
        }
    }
}

NGramModel NGramModel::train(std::span<const TrainingPair> dataset, Vocab vocab, NGramOptions options) {
    if (dataset.empty()) throw TrainingError("training set is empty");
    NGramModel model(std::move(vocab), options);
    const auto size = static_cast<TokenId>(model.vocab_.size());
    for (const TrainingPair& pair : dataset) {
        if (pair.target.size() < 2 || pair.target.front() != kBos || pair.target.back() != kEos) {
            throw TrainingError("training target must start with <BOS> and end with <EOS>");
        }
        for (TokenId id : pair.target) {
            if (id < 0 || id >= size) throw TrainingError("training target has an out-of-vocabulary id");
        }
        model.observe(model.bucket_of(pair.description), pair.target);
    }
    return model;
}

void NGramModel::context_key(std::span<const TokenId> prefix, int length, ContextMode mode,
                             std::vector<TokenId>& out) const {
    std::vector<TokenId> view;
    view.reserve(prefix.size());
    for (std::size_t i = 0; i < prefix.size();) {
        if (prefix[i] != kComp) {
            view.push_back(prefix[i++]);
            continue;
        }
        std::size_t j = i + 1;
        if (j < prefix.size()) ++j;
        while (j < prefix.size() && word_piece_[static_cast<std::size_t>(prefix[j])]) ++j;
        if (j < prefix.size() || mode == ContextMode::Free) {
            view.push_back(kFoldedIdentifier);
        } else {
            view.insert(view.end(), prefix.begin() + static_cast<std::ptrdiff_t>(i), prefix.end());
        }
        i = j;
    }
    out.assign(static_cast<std::size_t>(length), kBos);
    std::size_t take = std::min(out.size(), view.size());
    std::copy(view.end() - static_cast<std::ptrdiff_t>(take), view.end(), out.end() - static_cast<std::ptrdiff_t>(take));
}

const NGramModel::Counts* NGramModel::lookup(std::uint32_t bucket, std::vector<TokenId>& scratch,
                                             std::span<const TokenId> prefix, int length, ContextMode mode) const {
    context_key(prefix, length, mode, scratch);
    auto it = table_.find(Key{bucket, scratch});
    if (it == table_.end() || it->second.total == 0) return nullptr;
    return &it->second;
}

Distribution NGramModel::predict_in_bucket(std::uint32_t bucket, std::span<const TokenId> prefix,
                                           ContextMode mode) const {
    const std::size_t size = vocab_.size();
    const double pseudo = options_.alpha * static_cast<double>(size);
    // Least specific level first; each observed level is additively smoothed
    // toward the one below it, so an unobserved level changes nothing.
    Distribution dist(size, 1.0 / static_cast<double>(size));
    std::vector<TokenId> scratch;
    for (int k = 0; k < options_.order; ++k) {
        for (std::uint32_t scope : {kGlobal, bucket}) {
            const Counts* counts = lookup(scope, scratch, prefix, k, mode);
            if (counts == nullptr) continue;
            const double denom = static_cast<double>(counts->total) + pseudo;
            for (double& p : dist) p = p * pseudo / denom;
            for (const auto& [id, count] : counts->next) {
                dist[static_cast<std::size_t>(id)] += static_cast<double>(count) / denom;
            }
        }
    }
    return dist;
}

Distribution NGramModel::predict(std::span<const TokenId> description, std::span<const TokenId> prefix,
                                 ContextMode mode) const {
    return predict_in_bucket(bucket_of(description), prefix, mode);
}

double NGramModel::average_nll(std::span<const TrainingPair> dataset) const {
    double total = 0.0;
    std::size_t count = 0;
    for (const TrainingPair& pair : dataset) {
        std::uint32_t bucket = bucket_of(pair.description);
        std::vector<ContextMode> modes = target_modes(pair.target);
        for (std::size_t i = 1; i < pair.target.size(); ++i) {
            Distribution dist = predict_in_bucket(bucket, std::span(pair.target).first(i), modes[i]);
            total -= std::log(dist[static_cast<std::size_t>(pair.target[i])]);
            ++count;
        }
    }
    return count == 0 ? 0.0 : total / static_cast<double>(count);
}

std::string NGramModel::serialize() const {
    Writer w;
    w.bytes(kMagic);
    w.u8(kFormatVersion);
    w.u32(static_cast<std::uint32_t>(options_.order));
    w.u64(std::bit_cast<std::uint64_t>(options_.alpha));
    w.u32(options_.buckets);
    w.u32(static_cast<std::uint32_t>(vocab_.size()));
    for (const std::string& token : vocab_.tokens()) {
        w.u32(static_cast<std::uint32_t>(token.size()));
        w.bytes(token);
    }
    w.u64(table_.size());
    for (const auto& [key, counts] : table_) {
        w.u32(key.bucket);
        w.u32(static_cast<std::uint32_t>(key.context.size()));
        for (TokenId id : key.context) w.u32(static_cast<std::uint32_t>(id));
        w.u32(static_cast<std::uint32_t>(counts.next.size()));
        for (const auto& [id, count] : counts.next) {
            w.u32(static_cast<std::uint32_t>(id));
            w.u64(count);
        }
    }
    w.u64(fnv1a(w.str()));
    return std::move(w.str());
}

NGramModel NGramModel::deserialize(std::string_view bytes) {
    if (bytes.size() < kMagic.size() + 1 + 8) throw CorruptFileError("model file is truncated");
    if (bytes.substr(0, kMagic.size()) != kMagic) throw CorruptFileError("not a model file (bad magic)");
    auto version = static_cast<std::uint8_t>(bytes[kMagic.size()]);
    if (version != kFormatVersion) {
        throw VersionError("unsupported model format version " + std::to_string(version) + " (expected " +
                           std::to_string(kFormatVersion) + ")");
    }
    std::string_view body = bytes.substr(0, bytes.size() - 8);
    Reader tail(bytes.substr(bytes.size() - 8));
    if (tail.u64() != fnv1a(body)) throw CorruptFileError("model file checksum mismatch");

    Reader r(body.substr(kMagic.size() + 1));
    NGramOptions options;
    options.order = static_cast<int>(r.u32());
    options.alpha = std::bit_cast<double>(r.u64());
    options.buckets = r.u32();
    std::uint32_t vocab_size = r.u32();
    std::vector<std::string> tokens;
    for (std::uint32_t i = 0; i < vocab_size; ++i) tokens.push_back(r.bytes(r.u32()));
    Vocab vocab;
    try {
        vocab = Vocab::from_tokens(std::move(tokens));
    } catch (const VocabError& error) {
        throw CorruptFileError(std::string("bad vocabulary: ") + error.what());
    }
    NGramModel model(std::move(vocab), options);
    std::uint64_t contexts = r.u64();
    for (std::uint64_t c = 0; c < contexts; ++c) {
        Key key;
        key.bucket = r.u32();
        std::uint32_t length = r.u32();
        if (length >= static_cast<std::uint32_t>(options.order)) throw CorruptFileError("context too long");
        for (std::uint32_t j = 0; j < length; ++j) key.context.push_back(static_cast<TokenId>(r.u32()));
        Counts counts;
        std::uint32_t entries = r.u32();
        for (std::uint32_t e = 0; e < entries; ++e) {
            auto id = static_cast<TokenId>(r.u32());
            std::uint64_t count = r.u64();
            if (id < 0 || static_cast<std::size_t>(id) >= vocab_size || count == 0) {
                throw CorruptFileError("bad count entry");
            }
            counts.next[id] = count;
            counts.total += count;
        }
        model.table_.emplace(std::move(key), std::move(counts));
    }
    if (!r.done()) throw CorruptFileError("trailing bytes in model file");
    return model;
}

void NGramModel::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ModelFileError("cannot write " + path.string());
    std::string bytes = serialize();
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ModelFileError("cannot write " + path.string());
}

NGramModel NGramModel::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelFileError("cannot read " + path.string());
    std::ostringstream bytes;
    bytes << in.rdbuf();
    return deserialize(bytes.str());
}

bool NGramModel::operator==(const NGramModel& other) const {
    return vocab_ == other.vocab_ && options_.order == other.options_.order &&
           options_.alpha == other.options_.alpha && options_.buckets == other.options_.buckets &&
           table_ == other.table_;
}

}  // namespace repogen::lm
