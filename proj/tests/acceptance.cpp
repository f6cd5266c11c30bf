// Acceptance run over the bundled demo corpus: one PASS/FAIL line per
// criterion, nonzero exit when any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <string>

#include "repogen/pipeline.hpp"

using namespace repogen;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail) {
    std::printf("%s [%d] %s: %s\n", pass ? "PASS" : "FAIL", id, name, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string fmt(const char* format, auto... args) {
    char buffer[512];
    std::snprintf(buffer, sizeof buffer, format, args...);
    return buffer;
}

fs::path demo_dir() { return fs::path(REPOGEN_SOURCE_DIR) / "data" / "demo"; }

struct Artifacts {
    std::string dataset;
    std::string tool_model;
    std::string vanilla_model;
    std::string report;
    pipeline::EvalReport eval;
    double seconds = 0;
};

Artifacts full_run(const pipeline::RunConfig& config, bool cache) {
    auto start = Clock::now();
    Artifacts out;
    auto dataset = trigger::augment_corpus(pipeline::load_corpus(config.train_root), config.corpus_id, config.jobs);
    auto records = dataset.records();
    out.dataset = trigger::dataset_jsonl(records);
    pipeline::TrainedModels models = pipeline::train_models(records, config.model);
    out.tool_model = models.tool.serialize();
    out.vanilla_model = models.vanilla.serialize();
    auto tasks = pipeline::resolve_tasks(pipeline::parse_tasks_jsonl(pipeline::read_file(config.tasks)),
                                         pipeline::load_corpus(config.eval_root));
    decode::GenerationConfig gen{config.max_tokens, cache, true};
    out.eval = pipeline::evaluate(models, tasks, gen, config.jobs);
    out.report = pipeline::report_json(out.eval);
    out.seconds = seconds_since(start);
    return out;
}

// --- brute-force oracles --------------------------------------------------

std::vector<lm::TokenId> brute_force_select(const decode::Predictor& predict, std::vector<lm::TokenId> prefix,
                                            const std::vector<std::vector<lm::TokenId>>& sequences) {
    std::vector<lm::TokenId> chosen;
    while (true) {
        for (const auto& seq : sequences) {
            if (seq == chosen) return chosen;
        }
        std::set<lm::TokenId> allowed;
        for (const auto& seq : sequences) {
            if (seq.size() > chosen.size() && std::equal(chosen.begin(), chosen.end(), seq.begin())) {
                allowed.insert(seq[chosen.size()]);
            }
        }
        lm::Distribution dist = predict(prefix);
        lm::TokenId best = *allowed.begin();
        for (lm::TokenId id : allowed) {
            if (dist[static_cast<std::size_t>(id)] > dist[static_cast<std::size_t>(best)]) best = id;
        }
        chosen.push_back(best);
        prefix.push_back(best);
    }
}

std::size_t table_distance(const std::string& a, const std::string& b) {
    std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
    for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
    for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
        }
    }
    return d[a.size()][b.size()];
}

// Corpus BLEU with clipped counts found by scanning, no n-gram maps.
double scan_bleu(const std::vector<std::vector<lm::TokenId>>& cands, const std::vector<std::vector<lm::TokenId>>& refs) {
    auto occurrences = [](const std::vector<lm::TokenId>& seq, const lm::TokenId* gram, std::size_t n) {
        std::size_t count = 0;
        for (std::size_t i = 0; i + n <= seq.size(); ++i) {
            if (std::equal(gram, gram + n, seq.begin() + static_cast<std::ptrdiff_t>(i))) ++count;
        }
        return count;
    };
    double c = 0;
    double r = 0;
    double log_sum = 0;
    int orders = 0;
    for (std::size_t n = 1; n <= 4; ++n) {
        std::size_t matches = 0;
        std::size_t total = 0;
        for (std::size_t k = 0; k < cands.size(); ++k) {
            const auto& cand = cands[k];
            for (std::size_t i = 0; i + n <= cand.size(); ++i) {
                ++total;
                const lm::TokenId* gram = cand.data() + i;
                // Count each distinct gram once, at its first occurrence.
                bool first = true;
                for (std::size_t j = 0; j < i; ++j) {
                    if (std::equal(gram, gram + n, cand.data() + j)) first = false;
                }
                if (first) matches += std::min(occurrences(cand, gram, n), occurrences(refs[k], gram, n));
            }
        }
        if (total == 0) continue;
        log_sum += std::log(matches > 0 ? static_cast<double>(matches) / static_cast<double>(total)
                                        : 1.0 / (2.0 * static_cast<double>(total)));
        ++orders;
    }
    for (std::size_t k = 0; k < cands.size(); ++k) {
        c += static_cast<double>(cands[k].size());
        r += static_cast<double>(refs[k].size());
    }
    if (c == 0) return 0.0;
    return (c > r ? 1.0 : std::exp(1.0 - r / c)) * std::exp(log_sum / orders);
}

}  // namespace

int main() {
    pipeline::RunConfig config = pipeline::resolve_paths(
        pipeline::parse_config(pipeline::read_file(demo_dir() / "config.json")), demo_dir());
    std::vector<analysis::Repository> repos = pipeline::load_corpus(config.train_root);
    for (auto& repo : pipeline::load_corpus(config.eval_root)) repos.push_back(std::move(repo));

    // [1] augmentation round trip
    {
        auto start = Clock::now();
        std::size_t functions = 0;
        std::size_t mismatches = 0;
        std::set<std::string> with_functions;
        for (const auto& repo : repos) {
            analysis::ScopeIndex index = analysis::ScopeIndex::build(repo);
            for (const std::string& path : repo.paths()) {
                for (const auto* func : minilang::extract_functions(repo.module(path))) {
                    if (!func->has_docstring()) continue;
                    auto aug = trigger::insert_triggers(index, path, *func);
                    if (trigger::strip_triggers(aug) != minilang::render_body(*func)) ++mismatches;
                    if (trigger::strip_trigger_text(aug.text()) != minilang::render_body(*func)) ++mismatches;
                    ++functions;
                    with_functions.insert(repo.name());
                }
            }
        }
        double secs = seconds_since(start);
        report(1, "augmentation round trip",
               mismatches == 0 && functions >= 200 && with_functions.size() >= 10 && secs < 30.0,
               fmt("%zu functions in %zu repositories, %zu mismatches, %.2f s (need >=200, >=10, 0, <30 s)",
                   functions, with_functions.size(), mismatches, secs));
    }

    // [2] every marker names a suggestion of the tool, and only those
    {
        std::size_t markers = 0;
        std::size_t violations = 0;
        for (const auto& repo : repos) {
            analysis::ScopeIndex index = analysis::ScopeIndex::build(repo);
            for (const std::string& path : repo.paths()) {
                for (const auto* func : minilang::extract_functions(repo.module(path))) {
                    if (!func->has_docstring()) continue;
                    const auto body = trigger::insert_triggers(index, path, *func).augmented_body;
                    for (std::size_t i = 0; i < body.size(); ++i) {
                        if (body[i].kind == minilang::TokenKind::Marker) {
                            ++markers;
                            if (i + 1 == body.size() || !analysis::is_identifier(body[i + 1])) ++violations;
                            continue;
                        }
                        if (!analysis::is_identifier(body[i])) continue;
                        bool marked = i > 0 && body[i - 1].kind == minilang::TokenKind::Marker;
                        auto list = analysis::tool_complete(index, {path, body[i].line, body[i].column});
                        bool listed = std::binary_search(list.begin(), list.end(), body[i].text);
                        if (marked != listed || (marked && analysis::is_builtin(body[i].text))) ++violations;
                    }
                }
            }
        }
        report(2, "marker validity", violations == 0 && markers > 0,
               fmt("%zu markers, %zu violations (need 0)", markers, violations));
    }

    Artifacts first = full_run(config, true);

    // [3] trie selection against the brute-force walk
    {
        pipeline::TrainedModels models{lm::NGramModel::deserialize(first.tool_model),
                                       lm::NGramModel::deserialize(first.vanilla_model)};
        const lm::NGramModel& model = models.tool;
        auto records = trigger::parse_dataset_jsonl(first.dataset);
        auto pairs = pipeline::training_pairs(records, model.vocab(), true);
        std::set<std::string> name_pool;
        for (const auto& repo : repos) {
            for (const std::string& path : repo.paths()) {
                for (const auto& tok : minilang::lex(repo.text(path)).tokens) {
                    if (analysis::is_identifier(tok)) name_pool.insert(tok.text);
                }
            }
        }
        std::vector<std::string> names(name_pool.begin(), name_pool.end());
        std::mt19937 rng(2024);
        int mismatches = 0;
        std::size_t largest = 0;
        for (int trial = 0; trial < 1000; ++trial) {
            const auto& pair = pairs[rng() % pairs.size()];
            std::vector<std::size_t> cuts;
            for (std::size_t i = 0; i < pair.target.size(); ++i) {
                if (pair.target[i] == lm::kComp) cuts.push_back(i);
            }
            std::size_t cut = cuts.empty() ? 0 : cuts[rng() % cuts.size()];
            std::vector<lm::TokenId> prefix(pair.target.begin(), pair.target.begin() + static_cast<std::ptrdiff_t>(cut + 1));
            std::set<std::string> chosen;
            std::size_t n = 1 + rng() % 100;
            while (chosen.size() < n) chosen.insert(names[rng() % names.size()]);
            analysis::CompletionList list(chosen.begin(), chosen.end());
            largest = std::max(largest, list.size());
            decode::PrefixTrie trie = decode::build_trie(list, model.vocab(), rng() % 2 == 0);
            std::uint32_t bucket = model.bucket_of(pair.description);
            decode::Predictor spell = [&](std::span<const lm::TokenId> p) {
                return model.predict_in_bucket(bucket, p, lm::ContextMode::Spelling);
            };
            auto got = decode::select_suggestion(model, pair.description, prefix, trie);
            if (got != brute_force_select(spell, prefix, trie.sequences)) ++mismatches;
        }
        report(3, "constrained selection", mismatches == 0,
               fmt("1000 cases up to %zu suggestions, %d mismatches with the brute-force walk", largest, mismatches));
    }

    const pipeline::ModelReport& tool = first.eval.tool;
    const pipeline::ModelReport& vanilla = first.eval.vanilla;

    // [4] dependency-aware metrics improve
    {
        double dep_tool = tool.dep_cov.value_or(0);
        double dep_vanilla = vanilla.dep_cov.value_or(0);
        double val_gain = (tool.val_rate - vanilla.val_rate) / vanilla.val_rate;
        double dep_gain = dep_vanilla > 0 ? (dep_tool - dep_vanilla) / dep_vanilla : (dep_tool > 0 ? INFINITY : 0);
        report(4, "ValRate and DepCov gain",
               val_gain >= 0.15 && dep_gain >= 0.15 && tool.n >= 100 && first.seconds < 300.0,
               fmt("ValRate %.3f -> %.3f (%+.0f%%), DepCov %.3f -> %.3f (%+.0f%%), %zu tasks, %.1f s "
                   "(need >=+15%% each, >=100 tasks, <300 s)",
                   vanilla.val_rate, tool.val_rate, 100 * val_gain, dep_vanilla, dep_tool, 100 * dep_gain, tool.n,
                   first.seconds));
    }

    // [5] surface metrics do not regress
    {
        report(5, "EM and BLEU hold", tool.exact_match >= vanilla.exact_match && tool.bleu4 >= 0.95 * vanilla.bleu4,
               fmt("EM %.3f vs %.3f, BLEU-4 %.3f vs %.3f (need EM >=, BLEU >= 0.95x)", tool.exact_match,
                   vanilla.exact_match, tool.bleu4, vanilla.bleu4));
    }

    // [6] metric implementations against brute force on 20 pairs
    {
        auto tasks = pipeline::resolve_tasks(pipeline::parse_tasks_jsonl(pipeline::read_file(config.tasks)),
                                             pipeline::load_corpus(config.eval_root));
        tasks.resize(20);
        lm::NGramModel model = lm::NGramModel::deserialize(first.tool_model);
        auto deps = pipeline::task_dependencies(tasks, config.jobs);
        auto sub = pipeline::evaluate_model("tool", model, tasks, deps, {config.max_tokens, true, true}, config.jobs);

        std::size_t covered = 0;
        std::size_t total = 0;
        double edit = 0;
        std::vector<std::vector<lm::TokenId>> cands;
        std::vector<std::vector<lm::TokenId>> refs;
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            const std::string& pred = sub.pairs[i].prediction;
            auto exps = metrics::extract_expressions(pred);
            std::vector<std::string> exp_list(exps.begin(), exps.end());
            for (const std::string& dep : deps[i]) {
                ++total;
                if (std::find(exp_list.begin(), exp_list.end(), dep) != exp_list.end()) ++covered;
            }
            std::string canonical = minilang::canonicalize(pred);
            std::size_t longest = std::max(canonical.size(), tasks[i].ground_truth.size());
            edit += longest == 0 ? 100.0
                                 : 100.0 * (1.0 - static_cast<double>(table_distance(canonical, tasks[i].ground_truth)) /
                                                      static_cast<double>(longest));
            cands.push_back(lm::tokenize(pred, model.vocab()));
            refs.push_back(lm::tokenize(tasks[i].ground_truth, model.vocab()));
        }
        double dep_oracle = total == 0 ? 0 : static_cast<double>(covered) / static_cast<double>(total);
        double edit_oracle = edit / static_cast<double>(tasks.size());
        double bleu_oracle = scan_bleu(cands, refs);
        double worst = std::max({std::fabs(sub.dep_cov.value_or(0) - dep_oracle), std::fabs(sub.edit_sim - edit_oracle),
                                 std::fabs(sub.bleu4 - bleu_oracle)});
        report(6, "metric oracles", worst <= 1e-9 && total > 0,
               fmt("DepCov %.6f, EditSim %.4f, BLEU-4 %.6f; largest deviation %.2e (need <=1e-9)", dep_oracle,
                   edit_oracle, bleu_oracle, worst));
    }

    // [7] the suggestion cache never changes output and saves calls
    {
        Artifacts uncached = full_run(config, false);
        std::string cached_predictions;
        std::string uncached_predictions;
        for (const auto& pair : first.eval.tool.pairs) cached_predictions += pair.prediction + '\0';
        for (const auto& pair : uncached.eval.tool.pairs) uncached_predictions += pair.prediction + '\0';

        analysis::Repository repo("cache");
        repo.add_file("c.mp",
                      "class Counter:\n"
                      "    def __init__(self):\n"
                      "        self.a = 0\n"
                      "        self.b = 0\n"
                      "    def get(self):\n"
                      "        \"Sum of both.\"\n"
                      "        \n");
        std::vector<std::string> bodies = {"return<COMP> self.<COMP>a +<COMP> self.<COMP>b", "describe"};
        lm::Vocab vocab = lm::Vocab::build(bodies);
        std::vector<lm::TrainingPair> data;
        for (int i = 0; i < 20; ++i) {
            lm::TrainingPair pair{lm::tokenize("describe", vocab), {lm::kBos}};
            for (lm::TokenId id : lm::tokenize(bodies[0], vocab)) pair.target.push_back(id);
            pair.target.push_back(lm::kEos);
            data.push_back(pair);
        }
        lm::NGramModel model = lm::NGramModel::train(data, vocab, config.model);
        auto description = lm::tokenize("describe", vocab);
        auto on = decode::generate(model, repo, description, {"c.mp", 7, 8}, {64, true, true});
        auto off = decode::generate(model, repo, description, {"c.mp", 7, 8}, {64, false, true});
        bool same = cached_predictions == uncached_predictions && on.text == off.text;
        report(7, "cache transparency",
               same && on.trace.tool_invocations < off.trace.tool_invocations,
               fmt("benchmark predictions %s; fixture %d vs %d tool calls (%d cache hits)",
                   cached_predictions == uncached_predictions ? "identical" : "DIFFER", on.trace.tool_invocations,
                   off.trace.tool_invocations, on.trace.cache_hits));
    }

    // [8] reruns reproduce every artifact
    {
        pipeline::RunConfig serial = config;
        serial.jobs = 1;
        Artifacts second = full_run(serial, true);
        bool same = first.dataset == second.dataset && first.tool_model == second.tool_model &&
                    first.vanilla_model == second.vanilla_model && first.report == second.report;
        report(8, "determinism", same,
               fmt("dataset %zu B, models %zu B + %zu B, report %zu B; %s (jobs %d vs 1)", first.dataset.size(),
                   first.tool_model.size(), first.vanilla_model.size(), first.report.size(),
                   same ? "byte-identical" : "DIFFERENT", config.jobs));
    }

    // [9] predictive distributions are proper
    {
        lm::NGramModel model = lm::NGramModel::deserialize(first.tool_model);
        std::mt19937 rng(99);
        std::uniform_int_distribution<lm::TokenId> token(0, static_cast<lm::TokenId>(model.vocab().size()) - 1);
        double worst = 0;
        double min_comp = 1;
        for (int trial = 0; trial < 1000; ++trial) {
            std::vector<lm::TokenId> prefix{lm::kBos};
            std::size_t length = rng() % 16;
            for (std::size_t i = 0; i < length; ++i) prefix.push_back(token(rng));
            std::vector<lm::TokenId> description;
            for (std::size_t i = 0; i < rng() % 10; ++i) description.push_back(token(rng));
            lm::Distribution dist = model.predict(description, prefix,
                                                  trial % 2 == 0 ? lm::ContextMode::Free : lm::ContextMode::Spelling);
            worst = std::max(worst, std::fabs(std::accumulate(dist.begin(), dist.end(), 0.0) - 1.0));
            min_comp = std::min(min_comp, dist[static_cast<std::size_t>(lm::kComp)]);
        }
        report(9, "normalized distributions", worst <= 1e-9 && min_comp > 0,
               fmt("1000 contexts, largest |sum-1| %.2e (need <=1e-9), smallest P(<COMP>) %.2e (need >0)", worst,
                   min_comp));
    }

    std::printf("%s: %d of 9 criteria failed\n", failures == 0 ? "OK" : "FAILED", failures);
    return failures == 0 ? 0 : 1;
}
