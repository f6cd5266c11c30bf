#include "repogen/decode.hpp"

#include <algorithm>

#include <json.hpp>

namespace repogen::decode {

std::optional<std::size_t> PrefixTrie::child(std::size_t node, TokenId token) const {
    for (std::size_t c : nodes.at(node).children) {
        if (nodes[c].token == token) return c;
    }
    return std::nullopt;
}

bool needs_leading_space(std::string_view partial_text) {
    if (partial_text.empty()) return false;
    char last = partial_text.back();
    if (last == '.' || last == '(' || last == '[' || last == ' ' || last == '\n') return false;
    return true;
}

PrefixTrie build_trie(const analysis::CompletionList& suggestions, const lm::Vocab& vocab, bool leading_space) {
    if (suggestions.empty()) throw std::invalid_argument("cannot build a prefix trie from an empty suggestion list");
    PrefixTrie trie;
    trie.nodes.emplace_back();
    for (const std::string& suggestion : suggestions) {
        std::string text = leading_space ? " " + suggestion : suggestion;
        std::vector<TokenId> ids = lm::tokenize(text, vocab);
        if (ids.empty()) throw std::invalid_argument("suggestion tokenizes to nothing");
        std::size_t node = 0;
        for (TokenId id : ids) {
            std::optional<std::size_t> next = trie.child(node, id);
            if (!next) {
                trie.nodes.push_back(PrefixTrie::Node{id, {}, false, PrefixTrie::kNone});
                next = trie.nodes.size() - 1;
                trie.nodes[node].children.push_back(*next);
            }
            node = *next;
        }
        if (!trie.nodes[node].terminal) {
            trie.nodes[node].terminal = true;
            trie.nodes[node].suggestion = trie.suggestions.size();
        }
        trie.suggestions.push_back(std::move(text));
        trie.sequences.push_back(std::move(ids));
    }
    for (const std::vector<TokenId>& ids : trie.sequences) {
        std::size_t node = 0;
        for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
            node = *trie.child(node, ids[i]);
            if (trie.nodes[node].terminal) {
                ++trie.shadowed;
                break;
            }
        }
    }
    return trie;
}

Distribution mask_distribution(const Distribution& dist, std::span<const TokenId> allowed) {
    if (allowed.empty()) throw std::invalid_argument("mask needs at least one allowed token");
    Distribution masked(dist.size(), 0.0);
    for (TokenId id : allowed) {
        auto i = static_cast<std::size_t>(id);
        if (i >= dist.size()) throw std::out_of_range("masked token id outside the distribution");
        masked[i] = dist[i];
    }
    return masked;
}

TokenId argmax(const Distribution& dist) {
    std::size_t best = 0;
    bool found = false;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        if (dist[i] > 0.0 && (!found || dist[i] > dist[best])) {
            best = i;
            found = true;
        }
    }
    if (!found) throw InvariantError("argmax of an all-zero distribution");
    return static_cast<TokenId>(best);
}

std::vector<TokenId> select_suggestion(const Predictor& predict, std::vector<TokenId> prefix,
                                       const PrefixTrie& trie) {
    if (trie.nodes.size() < 2) throw std::invalid_argument("empty prefix trie");
    std::vector<TokenId> appended;
    std::size_t node = 0;
    std::vector<TokenId> allowed;
    while (!trie.nodes[node].terminal) {
        allowed.clear();
        for (std::size_t c : trie.nodes[node].children) allowed.push_back(trie.nodes[c].token);
        if (allowed.empty()) throw InvariantError("non-terminal trie leaf");
        TokenId token = argmax(mask_distribution(predict(prefix), allowed));
        std::optional<std::size_t> next = trie.child(node, token);
        if (!next) throw InvariantError("masked argmax left the trie");
        prefix.push_back(token);
        appended.push_back(token);
        node = *next;
    }
    return appended;
}

std::vector<TokenId> select_suggestion(const lm::NGramModel& model, std::span<const TokenId> description,
                                       std::vector<TokenId> prefix, const PrefixTrie& trie) {
    const std::uint32_t bucket = model.bucket_of(description);
    Predictor predict = [&](std::span<const TokenId> p) {
        return model.predict_in_bucket(bucket, p, lm::ContextMode::Spelling);
    };
    return select_suggestion(predict, std::move(prefix), trie);
}

// ---------------------------------------------------------------------------

CompletionCache::Probe CompletionCache::probe(std::string_view partial_text) {
    analysis::CompletionContext ctx = analysis::completion_context(partial_text);
    analysis::LocalFacts facts = analysis::partial_body_facts(partial_text);
    Probe probe;
    if (!ctx.member_access) {
        probe.key = "scope";
        probe.facts = facts.locals;
        return probe;
    }
    probe.key = "member:";
    for (const std::string& part : ctx.receiver) probe.key += part + ".";
    if (!ctx.receiver.empty() && facts.locals.contains(ctx.receiver.front())) {
        auto binding = facts.constructor_bindings.find(ctx.receiver.front());
        probe.key += "|local:";
        if (binding != facts.constructor_bindings.end()) probe.key += binding->second;
    }
    probe.facts = facts.self_attributes;
    return probe;
}

const analysis::CompletionList* CompletionCache::find(const Probe& probe) const {
    for (const Entry& entry : entries_) {
        if (entry.key != probe.key) continue;
        bool grew_from_stored = std::includes(probe.facts.begin(), probe.facts.end(), entry.facts.begin(),
                                              entry.facts.end());
        bool within_list = std::all_of(probe.facts.begin(), probe.facts.end(), [&](const std::string& name) {
            return std::binary_search(entry.list.begin(), entry.list.end(), name);
        });
        if (grew_from_stored && within_list) return &entry.list;
    }
    return nullptr;
}

void CompletionCache::store(const Probe& probe, analysis::CompletionList list) {
    entries_.push_back(Entry{probe.key, probe.facts, std::move(list)});
}

// ---------------------------------------------------------------------------

GenerationResult generate(const lm::NGramModel& model, const analysis::Repository& repo,
                          std::span<const TokenId> description, const analysis::CaretPosition& pos,
                          const GenerationConfig& config) {
    if (config.max_tokens < 1) throw std::invalid_argument("max_tokens must be at least 1");
    // Fail early on a bad position rather than at the first trigger.
    analysis::offset_of(repo.text(pos.file), pos.line, pos.column);

    const lm::Vocab& vocab = model.vocab();
    const std::uint32_t bucket = model.bucket_of(description);
    Predictor predict = [&](std::span<const TokenId> p) { return model.predict_in_bucket(bucket, p); };
    Predictor spell = [&](std::span<const TokenId> p) {
        return model.predict_in_bucket(bucket, p, lm::ContextMode::Spelling);
    };

    GenerationResult result;
    GenerationTrace& trace = result.trace;
    std::vector<TokenId> ids{lm::kBos};
    CompletionCache cache;
    bool suppress_trigger = false;

    auto emit = [&](TokenId id, StepSource source) {
        ids.push_back(id);
        trace.tokens.push_back(id);
        trace.sources.push_back(source);
    };

    while (trace.steps < config.max_tokens) {
        Distribution dist = predict(ids);
        ++trace.steps;
        if (!config.tool_enabled || suppress_trigger) dist[static_cast<std::size_t>(lm::kComp)] = 0.0;
        suppress_trigger = false;
        TokenId token = argmax(dist);
        if (token == lm::kEos) {
            trace.finished = true;
            break;
        }
        if (token != lm::kComp) {
            emit(token, StepSource::Model);
            continue;
        }

        ++trace.triggers;
        std::string partial = lm::detokenize_plain(ids, vocab);
        analysis::CompletionList suggestions;
        const analysis::CompletionList* cached = nullptr;
        CompletionCache::Probe probe;
        if (config.cache_enabled) {
            probe = CompletionCache::probe(partial);
            cached = cache.find(probe);
        }
        if (cached != nullptr) {
            ++trace.cache_hits;
            suggestions = *cached;
        } else {
            ++trace.tool_invocations;
            try {
                analysis::InsertResult inserted = analysis::insert(repo, pos, partial);
                suggestions = analysis::tool_complete(analysis::ScopeIndex::build(inserted.snapshot), inserted.caret);
            } catch (const analysis::PositionError&) {
                suggestions.clear();
            }
            if (config.cache_enabled) cache.store(probe, suggestions);
        }
        if (suggestions.empty()) {
            ++trace.dropped_triggers;
            suppress_trigger = true;
            continue;
        }
        emit(lm::kComp, StepSource::Model);
        PrefixTrie trie = build_trie(suggestions, vocab, needs_leading_space(partial));
        trace.shadowed_suggestions += trie.shadowed;
        for (TokenId id : select_suggestion(spell, ids, trie)) emit(id, StepSource::Tool);
    }
    result.text = lm::detokenize_plain(ids, vocab);
    return result;
}

std::string trace_json(const GenerationTrace& trace) {
    nlohmann::ordered_json doc;
    doc["steps"] = trace.steps;
    doc["tool_invocations"] = trace.tool_invocations;
    doc["cache_hits"] = trace.cache_hits;
    doc["triggers"] = trace.triggers;
    doc["dropped_triggers"] = trace.dropped_triggers;
    doc["shadowed_suggestions"] = trace.shadowed_suggestions;
    doc["finished"] = trace.finished;
    nlohmann::json sources = nlohmann::json::array();
    for (StepSource source : trace.sources) sources.push_back(source == StepSource::Model ? "model" : "tool");
    doc["sources"] = std::move(sources);
    return doc.dump();
}

}  // namespace repogen::decode
