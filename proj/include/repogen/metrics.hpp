#pragma once

// Evaluation metrics over (prediction, ground truth) pairs: dependency
// coverage, static validity, exact match, edit similarity and BLEU-4.

#include <array>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "repogen/analysis.hpp"
#include "repogen/lm.hpp"

namespace repogen::metrics {

using ExpressionSet = std::set<std::string>;

/// Dependencies of a ground-truth body placed at `pos`: for every identifier
/// trigger insertion would mark, the access it belongs to. A marked member
/// after `.` gives its full receiver chain (`self._value`); a marked bare
/// name gives itself when it is called (`helper`); other marked names give
/// nothing.
ExpressionSet identify_dependencies(const analysis::Repository& repo, const analysis::CaretPosition& pos,
                                    std::string_view ground_truth);

/// Attribute accesses and call targets of a body, as dotted text. Broken
/// statements contribute whatever the recovering parser kept.
ExpressionSet extract_expressions(std::string_view body);

/// Σ|EXP ∩ DEP| / Σ|DEP| over all pairs; nullopt when every DEP is empty.
std::optional<double> dependency_coverage(std::span<const ExpressionSet> deps, std::span<const ExpressionSet> exps);

/// Lint errors that fall inside the function holding `pos` once `body` is
/// inserted there.
std::vector<analysis::LintError> inserted_lint_errors(const analysis::Repository& repo,
                                                      const analysis::CaretPosition& pos, std::string_view body);

bool exact_match(std::string_view prediction, std::string_view ground_truth);

std::size_t levenshtein(std::string_view a, std::string_view b);

/// 100 * (1 - distance / max length); 100 when both are empty.
double edit_similarity(std::string_view a, std::string_view b);

struct BleuCounts {
    std::array<std::size_t, 4> matches{};
    std::array<std::size_t, 4> totals{};  // candidate n-grams
    std::size_t candidate_length = 0;
    std::size_t reference_length = 0;

    BleuCounts& operator+=(const BleuCounts& other);
};

BleuCounts bleu_counts(std::span<const lm::TokenId> candidate, std::span<const lm::TokenId> reference);

/// Geometric mean of the modified n-gram precisions (n = 1..4) times the
/// brevity penalty. An order with candidate n-grams but no match uses
/// 1 / (2 * candidate n-grams); orders without candidate n-grams are left out
/// of the mean; an empty candidate scores 0.
double bleu_score(const BleuCounts& counts);

double corpus_bleu(std::span<const std::string> predictions, std::span<const std::string> references,
                   const lm::Vocab& vocab);

}  // namespace repogen::metrics
