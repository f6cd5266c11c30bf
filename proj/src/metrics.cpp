#include "repogen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "repogen/trigger.hpp"

namespace repogen::metrics {

namespace {

using minilang::Expr;
using minilang::LexToken;
using minilang::SourcePos;
using minilang::Stmt;
using minilang::TokenKind;

void collect(const Expr& expr, ExpressionSet& out) {
    if (expr.kind == Expr::Kind::Attribute) {
        if (auto dotted = minilang::dotted_name(expr)) out.insert(*dotted);
    } else if (expr.kind == Expr::Kind::Call) {
        if (auto dotted = minilang::dotted_name(*expr.children.front())) out.insert(*dotted);
    }
    for (const minilang::ExprPtr& child : expr.children) collect(*child, out);
}

void collect(const Stmt& stmt, ExpressionSet& out) {
    if (stmt.target) collect(*stmt.target, out);
    if (stmt.value) collect(*stmt.value, out);
    for (const Stmt& inner : stmt.body) collect(inner, out);
    for (const Stmt& inner : stmt.orelse) collect(inner, out);
}

// Dotted receiver chain ending at the '.' just before body[i], or nullopt
// when the receiver is not a plain name chain.
std::optional<std::string> receiver_chain(std::span<const LexToken> body, std::size_t i) {
    std::vector<std::string> parts;
    std::size_t dot = i - 1;
    while (true) {
        if (dot == 0 || body[dot - 1].kind != TokenKind::Identifier) return std::nullopt;
        parts.push_back(body[dot - 1].text);
        if (dot - 1 == 0 || !body[dot - 2].is(TokenKind::Punctuator, ".")) break;
        dot -= 2;
    }
    std::string out;
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) out += *it + ".";
    return out;
}

}  // namespace

ExpressionSet identify_dependencies(const analysis::Repository& repo, const analysis::CaretPosition& pos,
                                    std::string_view ground_truth) {
    analysis::InsertResult inserted = analysis::insert(repo, pos, ground_truth);
    const analysis::Repository& snapshot = inserted.snapshot;
    analysis::ScopeIndex index = analysis::ScopeIndex::build(snapshot);
    const minilang::Module& module = snapshot.module(pos.file);
    analysis::Enclosing enclosing = analysis::find_enclosing(module, pos.pos());
    if (enclosing.function == nullptr) {
        throw std::runtime_error("ground truth position is not inside a function");
    }
    std::span<const LexToken> body = enclosing.function->body_tokens;
    ExpressionSet deps;
    for (std::size_t i : trigger::trigger_positions(index, pos.file, body)) {
        if (i > 0 && body[i - 1].is(TokenKind::Punctuator, ".")) {
            if (auto chain = receiver_chain(body, i)) deps.insert(*chain + body[i].text);
        } else if (i + 1 < body.size() && body[i + 1].is(TokenKind::Punctuator, "(")) {
            deps.insert(body[i].text);
        }
    }
    return deps;
}

ExpressionSet extract_expressions(std::string_view body) {
    minilang::FunctionDef func = minilang::parse_body(body);
    ExpressionSet out;
    for (const Stmt& stmt : func.body) collect(stmt, out);
    return out;
}

std::optional<double> dependency_coverage(std::span<const ExpressionSet> deps, std::span<const ExpressionSet> exps) {
    if (deps.size() != exps.size()) throw std::invalid_argument("dependency and expression lists differ in length");
    std::size_t covered = 0;
    std::size_t total = 0;
    for (std::size_t i = 0; i < deps.size(); ++i) {
        total += deps[i].size();
        for (const std::string& dep : deps[i]) covered += exps[i].count(dep);
    }
    if (total == 0) return std::nullopt;
    return static_cast<double>(covered) / static_cast<double>(total);
}

std::vector<analysis::LintError> inserted_lint_errors(const analysis::Repository& repo,
                                                      const analysis::CaretPosition& pos, std::string_view body) {
    analysis::InsertResult inserted = analysis::insert(repo, pos, body);
    const minilang::Module& module = inserted.snapshot.module(pos.file);
    analysis::Enclosing enclosing = analysis::find_enclosing(module, pos.pos());
    SourcePos first = pos.pos();
    SourcePos last = inserted.caret.pos();
    if (enclosing.function != nullptr) {
        // The whole function: an empty or broken body is reported at its
        // boundary, not inside the inserted text.
        first = enclosing.function->pos;
        last = enclosing.function->end;
    }
    std::vector<analysis::LintError> out;
    for (analysis::LintError& error : analysis::lint_check(inserted.snapshot, pos.file)) {
        if (first <= error.pos && error.pos <= last) out.push_back(std::move(error));
    }
    return out;
}

bool exact_match(std::string_view prediction, std::string_view ground_truth) {
    return minilang::canonicalize(prediction) == minilang::canonicalize(ground_truth);
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diagonal = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            std::size_t above = row[j];
            std::size_t substitute = diagonal + (a[i - 1] == b[j - 1] ? 0 : 1);
            row[j] = std::min({above + 1, row[j - 1] + 1, substitute});
            diagonal = above;
        }
    }
    return row[b.size()];
}

double edit_similarity(std::string_view a, std::string_view b) {
    std::size_t longest = std::max(a.size(), b.size());
    if (longest == 0) return 100.0;
    return 100.0 * (1.0 - static_cast<double>(levenshtein(a, b)) / static_cast<double>(longest));
}

BleuCounts& BleuCounts::operator+=(const BleuCounts& other) {
    for (std::size_t n = 0; n < 4; ++n) {
        matches[n] += other.matches[n];
        totals[n] += other.totals[n];
    }
    candidate_length += other.candidate_length;
    reference_length += other.reference_length;
    return *this;
}

BleuCounts bleu_counts(std::span<const lm::TokenId> candidate, std::span<const lm::TokenId> reference) {
    BleuCounts counts;
    counts.candidate_length = candidate.size();
    counts.reference_length = reference.size();
    for (std::size_t n = 1; n <= 4; ++n) {
        std::map<std::vector<lm::TokenId>, std::size_t> ref_grams;
        for (std::size_t i = 0; i + n <= reference.size(); ++i) {
            ++ref_grams[std::vector<lm::TokenId>(reference.begin() + i, reference.begin() + i + n)];
        }
        std::map<std::vector<lm::TokenId>, std::size_t> cand_grams;
        for (std::size_t i = 0; i + n <= candidate.size(); ++i) {
            ++cand_grams[std::vector<lm::TokenId>(candidate.begin() + i, candidate.begin() + i + n)];
            ++counts.totals[n - 1];
        }
        for (const auto& [gram, count] : cand_grams) {
            auto it = ref_grams.find(gram);
            if (it != ref_grams.end()) counts.matches[n - 1] += std::min(count, it->second);
        }
    }
    return counts;
}

double bleu_score(const BleuCounts& counts) {
    if (counts.candidate_length == 0) return 0.0;
    double log_sum = 0.0;
    int orders = 0;
    for (std::size_t n = 0; n < 4; ++n) {
        if (counts.totals[n] == 0) continue;
        double precision = counts.matches[n] > 0
                               ? static_cast<double>(counts.matches[n]) / static_cast<double>(counts.totals[n])
                               : 1.0 / (2.0 * static_cast<double>(counts.totals[n]));
        log_sum += std::log(precision);
        ++orders;
    }
    double c = static_cast<double>(counts.candidate_length);
    double r = static_cast<double>(counts.reference_length);
    double brevity = c > r ? 1.0 : std::exp(1.0 - r / c);
    return brevity * std::exp(log_sum / orders);
}

double corpus_bleu(std::span<const std::string> predictions, std::span<const std::string> references,
                   const lm::Vocab& vocab) {
    if (predictions.size() != references.size()) throw std::invalid_argument("prediction/reference count mismatch");
    BleuCounts total;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        total += bleu_counts(lm::tokenize(predictions[i], vocab), lm::tokenize(references[i], vocab));
    }
    return bleu_score(total);
}

}  // namespace repogen::metrics
