#include "repogen/lm.hpp"

#include <algorithm>
#include <array>
#include <set>

namespace repogen::lm {

namespace {

constexpr std::array<std::string_view, 4> kReserved = {kBosText, kEosText, kUnkText, kCompText};

bool is_lower(char c) { return c >= 'a' && c <= 'z'; }
bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_ident_start(char c) { return is_lower(c) || is_upper(c) || c == '_'; }
bool is_ident_char(char c) { return is_ident_start(c) || is_digit(c); }

std::size_t code_point_length(std::string_view text, std::size_t i) {
    auto lead = static_cast<unsigned char>(text[i]);
    std::size_t n = 1;
    if ((lead >> 5) == 0x6) n = 2;
    else if ((lead >> 4) == 0xE) n = 3;
    else if ((lead >> 3) == 0x1E) n = 4;
    return std::min(n, text.size() - i);
}

std::optional<std::string_view> reserved_at(std::string_view text, std::size_t i) {
    for (std::string_view literal : kReserved) {
        if (text.substr(i).starts_with(literal)) return literal;
    }
    return std::nullopt;
}

// Subwords of one identifier.
void split_identifier(std::string_view word, std::vector<std::string>& out) {
    std::size_t start = 0;
    for (std::size_t i = 0; i <= word.size(); ++i) {
        bool cut = i == word.size() || word[i] == '_' ||
                   (i > start && is_upper(word[i]) && is_lower(word[i - 1]));
        if (!cut) continue;
        if (i > start) out.emplace_back(word.substr(start, i - start));
        if (i < word.size() && word[i] == '_') {
            out.emplace_back("_");
            start = i + 1;
        } else {
            start = i;
        }
    }
}

}  // namespace

std::vector<std::string> split_pieces(std::string_view text) {
    std::vector<std::string> pieces;
    bool pending_space = false;
    auto push = [&](std::vector<std::string> chunk) {
        if (chunk.empty()) return;
        if (pending_space) {
            chunk.front().insert(chunk.front().begin(), ' ');
            pending_space = false;
        }
        for (std::string& piece : chunk) pieces.push_back(std::move(piece));
    };

    std::size_t i = 0;
    while (i < text.size()) {
        if (auto literal = reserved_at(text, i)) {
            pieces.emplace_back(*literal);
            i += literal->size();
            continue;
        }
        char c = text[i];
        if (c == ' ') {
            std::size_t end = i;
            while (end < text.size() && text[end] == ' ') ++end;
            bool single = end - i == 1 && end < text.size() && text[end] != '\n' && text[end] != '\t' &&
                          text[end] != '\r' && !pending_space;
            if (single) {
                pending_space = true;
            } else {
                std::string run(text.substr(i, end - i));
                if (pending_space) {
                    run.insert(run.begin(), ' ');
                    pending_space = false;
                }
                pieces.push_back(std::move(run));
            }
            i = end;
            continue;
        }
        if (c == '\n') {
            std::size_t end = i + 1;
            while (end < text.size() && text[end] == ' ') ++end;
            push({std::string(text.substr(i, end - i))});
            i = end;
            continue;
        }
        if (is_ident_start(c)) {
            std::size_t end = i;
            while (end < text.size() && is_ident_char(text[end])) ++end;
            std::vector<std::string> chunk;
            split_identifier(text.substr(i, end - i), chunk);
            push(std::move(chunk));
            i = end;
            continue;
        }
        if (is_digit(c)) {
            std::size_t end = i;
            while (end < text.size() && is_digit(text[end])) ++end;
            if (end + 1 < text.size() && text[end] == '.' && is_digit(text[end + 1])) {
                ++end;
                while (end < text.size() && is_digit(text[end])) ++end;
            }
            push({std::string(text.substr(i, end - i))});
            i = end;
            continue;
        }
        std::string_view two = text.substr(i, 2);
        if (two == "==" || two == "!=" || two == "<=" || two == ">=") {
            push({std::string(two)});
            i += 2;
            continue;
        }
        std::size_t n = code_point_length(text, i);
        push({std::string(text.substr(i, n))});
        i += n;
    }
    if (pending_space) pieces.emplace_back(" ");
    return pieces;
}

Vocab Vocab::build(std::span<const std::string> corpus) {
    if (corpus.empty()) throw VocabError("cannot build a vocabulary from an empty corpus");
    std::set<std::string> pieces;
    for (int c = 0x20; c < 0x7F; ++c) pieces.insert(std::string(1, static_cast<char>(c)));
    pieces.insert("\n");
    for (const std::string& text : corpus) {
        for (std::string& piece : split_pieces(text)) pieces.insert(std::move(piece));
    }
    std::vector<std::string> tokens(kReserved.begin(), kReserved.end());
    for (const std::string& piece : pieces) {
        if (std::find(kReserved.begin(), kReserved.end(), piece) == kReserved.end()) tokens.push_back(piece);
    }
    return from_tokens(std::move(tokens));
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
    if (tokens.size() < kReserved.size()) throw VocabError("vocabulary is missing reserved tokens");
    for (std::size_t i = 0; i < kReserved.size(); ++i) {
        if (tokens[i] != kReserved[i]) throw VocabError("reserved token out of place: " + tokens[i]);
    }
    Vocab vocab;
    vocab.tokens_ = std::move(tokens);
    for (std::size_t i = 0; i < vocab.tokens_.size(); ++i) {
        const std::string& token = vocab.tokens_[i];
        if (token.empty()) throw VocabError("empty vocabulary entry");
        if (!vocab.index_.emplace(token, static_cast<TokenId>(i)).second) {
            throw VocabError("duplicate vocabulary entry: " + token);
        }
        vocab.max_length_ = std::max(vocab.max_length_, token.size());
    }
    return vocab;
}

std::optional<TokenId> Vocab::find(std::string_view token) const {
    auto it = index_.find(std::string(token));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

const std::string& Vocab::token(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
        throw VocabError("unknown token id " + std::to_string(id));
    }
    return tokens_[static_cast<std::size_t>(id)];
}

std::vector<TokenId> tokenize(std::string_view text, const Vocab& vocab) {
    std::vector<TokenId> ids;
    for (const std::string& piece : split_pieces(text)) {
        if (auto id = vocab.find(piece)) {
            ids.push_back(*id);
            continue;
        }
        std::string_view rest = piece;
        while (!rest.empty()) {
            std::size_t len = std::min(rest.size(), vocab.max_token_length());
            std::optional<TokenId> found;
            for (; len > 0; --len) {
                std::optional<TokenId> id = vocab.find(rest.substr(0, len));
                if (id && *id > kComp) {
                    found = id;
                    break;
                }
            }
            if (found) {
                ids.push_back(*found);
                rest.remove_prefix(len);
            } else {
                ids.push_back(kUnk);
                rest.remove_prefix(code_point_length(rest, 0));
            }
        }
    }
    return ids;
}

std::string detokenize(std::span<const TokenId> ids, const Vocab& vocab) {
    std::string out;
    for (TokenId id : ids) out += vocab.token(id);
    return out;
}

std::string detokenize_plain(std::span<const TokenId> ids, const Vocab& vocab) {
    std::string out;
    for (TokenId id : ids) {
        if (id == kBos || id == kEos || id == kComp) continue;
        out += vocab.token(id);
    }
    return out;
}

}  // namespace repogen::lm
