#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

#include "repogen/metrics.hpp"
#include "support.hpp"

using namespace repogen;
using namespace repogen::metrics;
using fixtures::make_repo;
using lm::TokenId;

namespace {

const char* kCounter =
    "class Counter:\n"
    "    def __init__(self):\n"
    "        self._value = 0\n"
    "        self.a = 0\n"
    "        self.b = 0\n"
    "        self.c = 0\n"
    "    def add(self, update):\n"
    "        return update\n"
    "    def work(self, update):\n"
    "        \"Do the work.\"\n"
    "        \n";

analysis::CaretPosition work_caret() { return {"counter.mp", 11, 8}; }

// Clipped matches counted per candidate position: each occurrence of a gram
// contributes min(in candidate, in reference) / in candidate.
double brute_force_bleu(const std::vector<TokenId>& cand, const std::vector<TokenId>& ref) {
    if (cand.empty()) return 0.0;
    auto occurrences = [](const std::vector<TokenId>& seq, const std::vector<TokenId>& gram) {
        int count = 0;
        for (std::size_t i = 0; i + gram.size() <= seq.size(); ++i) {
            if (std::equal(gram.begin(), gram.end(), seq.begin() + static_cast<std::ptrdiff_t>(i))) ++count;
        }
        return count;
    };
    double log_sum = 0;
    int orders = 0;
    for (std::size_t n = 1; n <= 4; ++n) {
        if (cand.size() < n) continue;
        double matches = 0;
        double total = 0;
        for (std::size_t i = 0; i + n <= cand.size(); ++i) {
            std::vector<TokenId> gram(cand.begin() + static_cast<std::ptrdiff_t>(i),
                                      cand.begin() + static_cast<std::ptrdiff_t>(i + n));
            double in_cand = occurrences(cand, gram);
            matches += std::min(in_cand, static_cast<double>(occurrences(ref, gram))) / in_cand;
            total += 1;
        }
        matches = std::round(matches);
        log_sum += std::log(matches > 0 ? matches / total : 1.0 / (2.0 * total));
        ++orders;
    }
    double c = static_cast<double>(cand.size());
    double r = static_cast<double>(ref.size());
    return (c > r ? 1.0 : std::exp(1.0 - r / c)) * std::exp(log_sum / orders);
}

// Plain recursive edit distance with memoization over the full table.
std::size_t brute_force_distance(const std::string& a, const std::string& b) {
    std::vector<std::vector<long>> memo(a.size() + 1, std::vector<long>(b.size() + 1, -1));
    std::function<long(std::size_t, std::size_t)> d = [&](std::size_t i, std::size_t j) -> long {
        if (i == 0) return static_cast<long>(j);
        if (j == 0) return static_cast<long>(i);
        long& slot = memo[i][j];
        if (slot >= 0) return slot;
        slot = std::min({d(i - 1, j) + 1, d(i, j - 1) + 1, d(i - 1, j - 1) + (a[i - 1] == b[j - 1] ? 0 : 1)});
        return slot;
    };
    return static_cast<std::size_t>(d(a.size(), b.size()));
}

std::string random_code(std::mt19937& rng) {
    static const std::vector<std::string> words = {"self", ".", "x", " = ", "f(", ")", " + ", "1", "\n", "return "};
    std::string out;
    std::size_t n = rng() % 14;
    for (std::size_t i = 0; i < n; ++i) out += words[rng() % words.size()];
    return out;
}

}  // namespace

TEST(Dependencies, MarkedMemberGivesReceiverChain) {
    auto repo = make_repo({{"counter.mp", kCounter}});
    EXPECT_EQ(identify_dependencies(repo, work_caret(), "return self._value"), (ExpressionSet{"self._value"}));
}

TEST(Dependencies, CalledMethodButNotBareArgument) {
    auto repo = make_repo({{"counter.mp", kCounter}});
    EXPECT_EQ(identify_dependencies(repo, work_caret(), "self.add(update)"), (ExpressionSet{"self.add"}));
    EXPECT_EQ(extract_expressions("self.add(update)"), (ExpressionSet{"self.add"}));
}

TEST(Dependencies, ThreeMarkedAccesses) {
    auto repo = make_repo({{"counter.mp", kCounter}});
    EXPECT_EQ(identify_dependencies(repo, work_caret(), "self.a = self.b + self.c"),
              (ExpressionSet{"self.a", "self.b", "self.c"}));
}

TEST(Dependencies, UnknownMemberIsNotADependency) {
    auto repo = make_repo({{"counter.mp", kCounter}});
    EXPECT_TRUE(identify_dependencies(repo, work_caret(), "return self.missing").empty());
}

TEST(Expressions, AttributesAndCallTargets) {
    EXPECT_EQ(extract_expressions("x = helpers.clamp(self.a.b, 1)\nreturn len(x)"),
              (ExpressionSet{"helpers.clamp", "len", "self.a", "self.a.b"}));
    EXPECT_TRUE(extract_expressions("return x + 1").empty());
    EXPECT_TRUE(extract_expressions("").empty());
}

TEST(Coverage, QuarterCovered) {
    std::vector<ExpressionSet> deps = {{"self.a", "self.b", "self.c", "self.d"}};
    std::vector<ExpressionSet> exps = {{"self.a", "self.z"}};
    EXPECT_DOUBLE_EQ(*dependency_coverage(deps, exps), 0.25);
}

TEST(Coverage, EmptyDependenciesGiveNoValue) {
    std::vector<ExpressionSet> deps = {{}, {}};
    std::vector<ExpressionSet> exps = {{"x"}, {}};
    EXPECT_FALSE(dependency_coverage(deps, exps).has_value());
    std::vector<ExpressionSet> one = {{}};
    EXPECT_THROW(dependency_coverage(deps, one), std::invalid_argument);
}

TEST(Validity, TenPredictionsSevenAndEightValid) {
    auto repo = make_repo({{"counter.mp", kCounter}});
    std::vector<std::string> good = {"return self._value", "self.a = 1", "return self.add(update)", "return update",
                                     "x = 1\nreturn x", "self.b = self.c", "pass", "return len(str(update))"};
    std::vector<std::string> bad = {"return self.nope", "return y", "x = (1 +"};
    auto rate = [&](std::size_t n_good, std::size_t n_bad) {
        std::size_t valid = 0;
        std::size_t total = 0;
        for (std::size_t i = 0; i < n_good; ++i, ++total) {
            valid += inserted_lint_errors(repo, work_caret(), good[i]).empty() ? 1 : 0;
        }
        for (std::size_t i = 0; i < n_bad; ++i, ++total) {
            valid += inserted_lint_errors(repo, work_caret(), bad[i]).empty() ? 1 : 0;
        }
        return static_cast<double>(valid) / static_cast<double>(total);
    };
    EXPECT_DOUBLE_EQ(rate(7, 3), 0.7);
    EXPECT_DOUBLE_EQ(rate(8, 2), 0.8);
}

TEST(Validity, ErrorsOutsideTheFunctionAreIgnored) {
    std::string src = std::string(kCounter) + "\ndef broken():\n    return zzz\n";
    auto repo = make_repo({{"counter.mp", src}});
    EXPECT_TRUE(inserted_lint_errors(repo, work_caret(), "return self._value").empty());
    EXPECT_EQ(inserted_lint_errors(repo, work_caret(), "return www").size(), 1u);
}

TEST(ExactMatch, CanonicalWhitespace) {
    EXPECT_TRUE(exact_match("return  self.a+1", "return self.a + 1"));
    EXPECT_FALSE(exact_match("return self.a", "return self.b"));
}

TEST(EditSim, KnownValues) {
    EXPECT_EQ(levenshtein("kitten", "sitting"), 3u);
    EXPECT_DOUBLE_EQ(edit_similarity("", ""), 100.0);
    EXPECT_DOUBLE_EQ(edit_similarity("abcd", "abcd"), 100.0);
    EXPECT_DOUBLE_EQ(edit_similarity("abcd", ""), 0.0);
    EXPECT_DOUBLE_EQ(edit_similarity("abcd", "abed"), 75.0);
}

TEST(EditSim, MatchesBruteForce) {
    std::mt19937 rng(8);
    for (int trial = 0; trial < 300; ++trial) {
        std::string a = random_code(rng);
        std::string b = random_code(rng);
        EXPECT_EQ(levenshtein(a, b), brute_force_distance(a, b));
        EXPECT_EQ(levenshtein(a, b), levenshtein(b, a));
    }
}

TEST(Bleu, KnownValues) {
    std::vector<TokenId> ref = {1, 2, 3, 4, 5};
    EXPECT_DOUBLE_EQ(bleu_score(bleu_counts(ref, ref)), 1.0);
    EXPECT_DOUBLE_EQ(bleu_score(bleu_counts(std::vector<TokenId>{}, ref)), 0.0);
    // Clipping: four copies of a token present once.
    BleuCounts clipped = bleu_counts(std::vector<TokenId>{7, 7, 7, 7}, std::vector<TokenId>{7, 8, 9, 10});
    EXPECT_EQ(clipped.matches[0], 1u);
    EXPECT_EQ(clipped.totals[0], 4u);
    // One token, no match: only the unigram order counts, precision 1/2.
    EXPECT_DOUBLE_EQ(bleu_score(bleu_counts(std::vector<TokenId>{9}, std::vector<TokenId>{9, 9})),
                     std::exp(1.0 - 2.0));
    EXPECT_DOUBLE_EQ(bleu_score(bleu_counts(std::vector<TokenId>{8}, std::vector<TokenId>{9})), 0.5);
}

TEST(Bleu, MatchesBruteForce) {
    std::mt19937 rng(21);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<TokenId> cand(rng() % 12);
        std::vector<TokenId> ref(1 + rng() % 12);
        for (TokenId& t : cand) t = static_cast<TokenId>(rng() % 5);
        for (TokenId& t : ref) t = static_cast<TokenId>(rng() % 5);
        EXPECT_NEAR(bleu_score(bleu_counts(cand, ref)), brute_force_bleu(cand, ref), 1e-12);
    }
}

TEST(Bleu, CorpusLevelPoolsCounts) {
    lm::Vocab vocab = lm::Vocab::build(std::vector<std::string>{"return self.a + 1"});
    std::vector<std::string> preds = {"return self.a", "x"};
    std::vector<std::string> refs = {"return self.a + 1", "x"};
    BleuCounts pooled = bleu_counts(lm::tokenize(preds[0], vocab), lm::tokenize(refs[0], vocab));
    pooled += bleu_counts(lm::tokenize(preds[1], vocab), lm::tokenize(refs[1], vocab));
    EXPECT_DOUBLE_EQ(corpus_bleu(preds, refs, vocab), bleu_score(pooled));
    EXPECT_THROW(corpus_bleu(preds, std::vector<std::string>{"x"}, vocab), std::invalid_argument);
}

// Predicting the ground truth itself reaches every ceiling.
TEST(Ceiling, IdentityPredictionOnCorpusTasks) {
    auto tasks = pipeline::make_tasks(pipeline::load_corpus(fixtures::demo_dir() / "eval"));
    ASSERT_GE(tasks.size(), 100u);
    std::vector<ExpressionSet> deps;
    std::vector<ExpressionSet> exps;
    std::vector<std::string> truths;
    for (const auto& task : tasks) {
        deps.push_back(identify_dependencies(task.hole_repo, task.caret, task.ground_truth));
        exps.push_back(extract_expressions(task.ground_truth));
        truths.push_back(task.ground_truth);
        EXPECT_TRUE(inserted_lint_errors(task.hole_repo, task.caret, task.ground_truth).empty()) << task.id;
        EXPECT_TRUE(exact_match(task.ground_truth, task.ground_truth));
        EXPECT_DOUBLE_EQ(edit_similarity(task.ground_truth, task.ground_truth), 100.0);
        for (const std::string& dep : deps.back()) EXPECT_TRUE(exps.back().count(dep)) << task.id << " " << dep;
    }
    EXPECT_DOUBLE_EQ(*dependency_coverage(deps, exps), 1.0);
    lm::Vocab vocab = lm::Vocab::build(truths);
    EXPECT_DOUBLE_EQ(corpus_bleu(truths, truths, vocab), 1.0);
}
