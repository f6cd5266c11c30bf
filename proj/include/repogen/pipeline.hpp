#pragma once

// Stage plumbing shared by the command-line tool and the acceptance suite:
// corpus loading, benchmark tasks, model training, evaluation and reports.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "repogen/analysis.hpp"
#include "repogen/decode.hpp"
#include "repogen/lm.hpp"
#include "repogen/metrics.hpp"
#include "repogen/trigger.hpp"

namespace repogen::pipeline {

namespace fs = std::filesystem;

/// Every immediate subdirectory of `root` is one repository, named after the
/// directory. Sorted by name.
std::vector<analysis::Repository> load_corpus(const fs::path& root);

// ---------------------------------------------------------------------------
// Benchmark tasks

/// A function whose body was cut out of its file. The hole is one line of
/// indentation where the body used to be; the caret sits at its end.
struct EvalTask {
    std::string id;  // repo/file:line:function
    std::string repo;
    std::string file;
    std::string function;
    int line = 0;
    analysis::Repository hole_repo;
    analysis::CaretPosition caret;
    std::string description;
    std::string ground_truth;  // render_body of the original
};

/// nullopt when the function has no docstring or an empty body.
std::optional<EvalTask> make_task(const analysis::Repository& repo, const std::string& file,
                                  const minilang::FunctionDef& func);

/// Tasks for every docstring function of every repository, in corpus order.
std::vector<EvalTask> make_tasks(const std::vector<analysis::Repository>& repos);

struct TaskRef {
    std::string repo;
    std::string file;
    std::string function;
    int line = 0;  // line of the `def`
    bool operator==(const TaskRef&) const = default;
};

/// Tasks file: one JSON object per line with keys file, function, line, repo.
std::string tasks_jsonl(const std::vector<EvalTask>& tasks);
std::vector<TaskRef> parse_tasks_jsonl(std::string_view text);
std::vector<EvalTask> resolve_tasks(const std::vector<TaskRef>& refs, const std::vector<analysis::Repository>& repos);

// ---------------------------------------------------------------------------
// Training

/// Shared vocabulary: descriptions and augmented bodies of the dataset.
lm::Vocab build_vocab(const std::vector<trigger::DatasetRecord>& records);

/// `augmented` keeps the markers (tool model); otherwise they are stripped
/// (vanilla model).
std::vector<lm::TrainingPair> training_pairs(const std::vector<trigger::DatasetRecord>& records,
                                             const lm::Vocab& vocab, bool augmented);

struct TrainedModels {
    lm::NGramModel tool;
    lm::NGramModel vanilla;
};

TrainedModels train_models(const std::vector<trigger::DatasetRecord>& records, const lm::NGramOptions& options);

// ---------------------------------------------------------------------------
// Evaluation

struct PairResult {
    std::string task;
    std::string prediction;
    metrics::ExpressionSet dependencies;
    std::size_t covered = 0;
    std::size_t lint_errors = 0;
    bool valid = false;
    bool exact = false;
    double edit_similarity = 0.0;
    double bleu = 0.0;  // sentence level
    decode::GenerationTrace trace;
};

struct ModelReport {
    std::string name;
    std::size_t n = 0;
    std::size_t n_with_dependencies = 0;
    std::optional<double> dep_cov;
    double val_rate = 0.0;
    std::optional<double> val_rate_dep;
    double exact_match = 0.0;
    double edit_sim = 0.0;  // mean percentage
    double bleu4 = 0.0;     // corpus level
    long triggers = 0;
    long tool_invocations = 0;
    long cache_hits = 0;
    long dropped_triggers = 0;
    std::vector<PairResult> pairs;
};

struct EvalReport {
    ModelReport vanilla;
    ModelReport tool;
};

/// Dependencies of each task's ground truth (model independent).
std::vector<metrics::ExpressionSet> task_dependencies(const std::vector<EvalTask>& tasks, int jobs = 1);

ModelReport evaluate_model(const std::string& name, const lm::NGramModel& model, const std::vector<EvalTask>& tasks,
                           const std::vector<metrics::ExpressionSet>& deps, const decode::GenerationConfig& config,
                           int jobs = 1);

EvalReport evaluate(const TrainedModels& models, const std::vector<EvalTask>& tasks,
                    const decode::GenerationConfig& config, int jobs = 1);

/// Headline numbers per model plus one row per task; no timings, so reruns
/// give identical bytes.
std::string report_json(const EvalReport& report);

// ---------------------------------------------------------------------------
// Run configuration

struct RunConfig {
    std::string corpus_id = "demo";
    fs::path train_root = "data/demo/train";
    fs::path eval_root = "data/demo/eval";
    fs::path tasks = "data/demo/tasks.jsonl";
    lm::NGramOptions model;
    int max_tokens = 256;
    bool cache = true;
    int jobs = 1;
    fs::path dataset = "out/dataset.jsonl";
    fs::path dataset_stats = "out/dataset.stats.json";
    fs::path tool_model = "out/tool.rgnm";
    fs::path vanilla_model = "out/vanilla.rgnm";
    fs::path report = "out/report.json";

    bool operator==(const RunConfig& other) const;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parses the JSON config; missing keys keep their defaults, unknown keys are
/// rejected.
RunConfig parse_config(std::string_view json_text);
std::string config_json(const RunConfig& config);

/// Makes every relative path absolute against `base`.
RunConfig resolve_paths(RunConfig config, const fs::path& base);

/// Base directory for relative paths: $REPOGEN_DATA_DIR when set, else the
/// directory holding the config file (or the working directory).
fs::path data_base(const std::optional<fs::path>& config_file);

std::string read_file(const fs::path& path);
void write_file(const fs::path& path, std::string_view bytes);

}  // namespace repogen::pipeline
