#include "repogen/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "repogen/parallel.hpp"

namespace repogen::pipeline {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

bool is_layout(const minilang::LexToken& tok) {
    return tok.kind == minilang::TokenKind::Newline || tok.kind == minilang::TokenKind::Indent ||
           tok.kind == minilang::TokenKind::Dedent;
}

ordered_json optional_number(const std::optional<double>& value) {
    return value ? ordered_json(*value) : ordered_json(nullptr);
}

}  // namespace

std::vector<analysis::Repository> load_corpus(const fs::path& root) {
    if (!fs::is_directory(root)) throw std::runtime_error("corpus root is not a directory: " + root.string());
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_directory()) dirs.push_back(entry.path());
    }
    std::sort(dirs.begin(), dirs.end());
    std::vector<analysis::Repository> repos;
    for (const fs::path& dir : dirs) repos.push_back(analysis::Repository::load(dir, dir.filename().string()));
    return repos;
}

// ---------------------------------------------------------------------------

std::optional<EvalTask> make_task(const analysis::Repository& repo, const std::string& file,
                                  const minilang::FunctionDef& func) {
    if (!func.has_docstring()) return std::nullopt;
    int first_line = 0;
    int last_line = 0;
    for (const minilang::LexToken& tok : func.body_tokens) {
        if (is_layout(tok)) continue;
        if (first_line == 0) first_line = tok.line;
        last_line = tok.line;
    }
    if (first_line == 0) return std::nullopt;

    const std::string& text = repo.text(file);
    std::size_t start = analysis::offset_of(text, first_line, 0);
    std::size_t end = text.find('\n', analysis::offset_of(text, last_line, 0));
    if (end == std::string::npos) end = text.size();
    std::string hole_text = text.substr(0, start) + std::string(static_cast<std::size_t>(func.body_indent), ' ') +
                            text.substr(end);

    EvalTask task;
    task.repo = repo.name();
    task.file = file;
    task.function = func.name;
    task.line = func.pos.line;
    task.id = repo.name() + "/" + file + ":" + std::to_string(func.pos.line) + ":" + func.name;
    task.hole_repo = repo.with_file(file, std::move(hole_text));
    task.caret = analysis::CaretPosition{file, first_line, func.body_indent};
    task.description = trigger::description_of(func);
    task.ground_truth = minilang::render_body(func);
    return task;
}

std::vector<EvalTask> make_tasks(const std::vector<analysis::Repository>& repos) {
    std::vector<EvalTask> tasks;
    for (const analysis::Repository& repo : repos) {
        for (const std::string& path : repo.paths()) {
            for (const minilang::FunctionDef* func : minilang::extract_functions(repo.module(path))) {
                if (auto task = make_task(repo, path, *func)) tasks.push_back(std::move(*task));
            }
        }
    }
    return tasks;
}

std::string tasks_jsonl(const std::vector<EvalTask>& tasks) {
    std::string out;
    for (const EvalTask& task : tasks) {
        json row;
        row["repo"] = task.repo;
        row["file"] = task.file;
        row["function"] = task.function;
        row["line"] = task.line;
        out += row.dump() + "\n";
    }
    return out;
}

std::vector<TaskRef> parse_tasks_jsonl(std::string_view text) {
    std::vector<TaskRef> refs;
    int line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        try {
            json row = json::parse(line);
            refs.push_back(TaskRef{row.at("repo").get<std::string>(), row.at("file").get<std::string>(),
                                   row.at("function").get<std::string>(), row.at("line").get<int>()});
        } catch (const json::exception& error) {
            throw std::runtime_error("tasks line " + std::to_string(line_no) + ": " + error.what());
        }
    }
    return refs;
}

std::vector<EvalTask> resolve_tasks(const std::vector<TaskRef>& refs, const std::vector<analysis::Repository>& repos) {
    std::vector<EvalTask> tasks;
    for (const TaskRef& ref : refs) {
        auto repo = std::find_if(repos.begin(), repos.end(),
                                 [&](const analysis::Repository& r) { return r.name() == ref.repo; });
        if (repo == repos.end()) throw std::runtime_error("task refers to unknown repository " + ref.repo);
        if (!repo->contains(ref.file)) throw std::runtime_error("task refers to unknown file " + ref.file);
        const minilang::FunctionDef* found = nullptr;
        for (const minilang::FunctionDef* func : minilang::extract_functions(repo->module(ref.file))) {
            if (func->name == ref.function && func->pos.line == ref.line) found = func;
        }
        if (found == nullptr) {
            throw std::runtime_error("task refers to unknown function " + ref.function + " at " + ref.file + ":" +
                                     std::to_string(ref.line));
        }
        std::optional<EvalTask> task = make_task(*repo, ref.file, *found);
        if (!task) throw std::runtime_error("function " + ref.function + " has no docstring or no body");
        tasks.push_back(std::move(*task));
    }
    return tasks;
}

// ---------------------------------------------------------------------------

lm::Vocab build_vocab(const std::vector<trigger::DatasetRecord>& records) {
    std::vector<std::string> corpus;
    corpus.reserve(2 * records.size());
    for (const trigger::DatasetRecord& record : records) {
        corpus.push_back(record.description);
        corpus.push_back(record.augmented_body);
    }
    if (corpus.empty()) corpus.emplace_back();
    return lm::Vocab::build(corpus);
}

std::vector<lm::TrainingPair> training_pairs(const std::vector<trigger::DatasetRecord>& records,
                                             const lm::Vocab& vocab, bool augmented) {
    std::vector<lm::TrainingPair> pairs;
    pairs.reserve(records.size());
    for (const trigger::DatasetRecord& record : records) {
        std::string body = augmented ? record.augmented_body : trigger::strip_trigger_text(record.augmented_body);
        lm::TrainingPair pair;
        pair.description = lm::tokenize(record.description, vocab);
        pair.target.push_back(lm::kBos);
        for (lm::TokenId id : lm::tokenize(body, vocab)) pair.target.push_back(id);
        pair.target.push_back(lm::kEos);
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

TrainedModels train_models(const std::vector<trigger::DatasetRecord>& records, const lm::NGramOptions& options) {
    lm::Vocab vocab = build_vocab(records);
    std::vector<lm::TrainingPair> tool = training_pairs(records, vocab, true);
    std::vector<lm::TrainingPair> vanilla = training_pairs(records, vocab, false);
    return TrainedModels{lm::NGramModel::train(tool, vocab, options), lm::NGramModel::train(vanilla, vocab, options)};
}

// ---------------------------------------------------------------------------

std::vector<metrics::ExpressionSet> task_dependencies(const std::vector<EvalTask>& tasks, int jobs) {
    std::vector<metrics::ExpressionSet> deps(tasks.size());
    parallel_for(tasks.size(), jobs, [&](std::size_t i) {
        deps[i] = metrics::identify_dependencies(tasks[i].hole_repo, tasks[i].caret, tasks[i].ground_truth);
    });
    return deps;
}

ModelReport evaluate_model(const std::string& name, const lm::NGramModel& model, const std::vector<EvalTask>& tasks,
                           const std::vector<metrics::ExpressionSet>& deps, const decode::GenerationConfig& config,
                           int jobs) {
    if (deps.size() != tasks.size()) throw std::invalid_argument("one dependency set per task expected");
    const lm::Vocab& vocab = model.vocab();
    ModelReport report;
    report.name = name;
    report.n = tasks.size();
    report.pairs.resize(tasks.size());
    parallel_for(tasks.size(), jobs, [&](std::size_t i) {
        const EvalTask& task = tasks[i];
        PairResult& pair = report.pairs[i];
        pair.task = task.id;
        std::vector<lm::TokenId> description = lm::tokenize(task.description, vocab);
        decode::GenerationResult generated = decode::generate(model, task.hole_repo, description, task.caret, config);
        pair.prediction = std::move(generated.text);
        pair.trace = std::move(generated.trace);
        pair.dependencies = deps[i];
        metrics::ExpressionSet exps = metrics::extract_expressions(pair.prediction);
        for (const std::string& dep : pair.dependencies) pair.covered += exps.count(dep);
        pair.lint_errors = metrics::inserted_lint_errors(task.hole_repo, task.caret, pair.prediction).size();
        pair.valid = pair.lint_errors == 0;
        pair.exact = metrics::exact_match(pair.prediction, task.ground_truth);
        std::string canonical = minilang::canonicalize(pair.prediction);
        pair.edit_similarity = metrics::edit_similarity(canonical, task.ground_truth);
        pair.bleu = metrics::bleu_score(
            metrics::bleu_counts(lm::tokenize(pair.prediction, vocab), lm::tokenize(task.ground_truth, vocab)));
    });

    std::vector<metrics::ExpressionSet> exps;
    std::vector<std::string> predictions;
    std::vector<std::string> references;
    std::size_t valid = 0;
    std::size_t valid_dep = 0;
    std::size_t exact = 0;
    double edit = 0.0;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const PairResult& pair = report.pairs[i];
        exps.push_back(metrics::extract_expressions(pair.prediction));
        predictions.push_back(pair.prediction);
        references.push_back(tasks[i].ground_truth);
        valid += pair.valid ? 1 : 0;
        exact += pair.exact ? 1 : 0;
        edit += pair.edit_similarity;
        if (!pair.dependencies.empty()) {
            ++report.n_with_dependencies;
            valid_dep += pair.valid ? 1 : 0;
        }
        report.triggers += pair.trace.triggers;
        report.tool_invocations += pair.trace.tool_invocations;
        report.cache_hits += pair.trace.cache_hits;
        report.dropped_triggers += pair.trace.dropped_triggers;
    }
    if (!tasks.empty()) {
        const auto n = static_cast<double>(tasks.size());
        report.val_rate = static_cast<double>(valid) / n;
        report.exact_match = static_cast<double>(exact) / n;
        report.edit_sim = edit / n;
        report.bleu4 = metrics::corpus_bleu(predictions, references, vocab);
    }
    report.dep_cov = metrics::dependency_coverage(deps, exps);
    if (report.n_with_dependencies > 0) {
        report.val_rate_dep = static_cast<double>(valid_dep) / static_cast<double>(report.n_with_dependencies);
    }
    return report;
}

EvalReport evaluate(const TrainedModels& models, const std::vector<EvalTask>& tasks,
                    const decode::GenerationConfig& config, int jobs) {
    std::vector<metrics::ExpressionSet> deps = task_dependencies(tasks, jobs);
    decode::GenerationConfig vanilla = config;
    vanilla.tool_enabled = false;
    decode::GenerationConfig tool = config;
    tool.tool_enabled = true;
    return EvalReport{evaluate_model("vanilla", models.vanilla, tasks, deps, vanilla, jobs),
                      evaluate_model("tool", models.tool, tasks, deps, tool, jobs)};
}

std::string report_json(const EvalReport& report) {
    ordered_json doc;
    doc["tasks"] = report.tool.n;
    ordered_json headline;
    ordered_json details;
    ordered_json rows;
    for (const ModelReport* model : {&report.vanilla, &report.tool}) {
        ordered_json h;
        h["dep_cov"] = optional_number(model->dep_cov);
        h["val_rate"] = model->val_rate;
        h["val_rate_dep"] = optional_number(model->val_rate_dep);
        h["exact_match"] = model->exact_match;
        h["edit_sim"] = model->edit_sim;
        h["bleu4"] = model->bleu4;
        headline[model->name] = std::move(h);

        ordered_json d;
        d["n"] = model->n;
        d["n_with_dependencies"] = model->n_with_dependencies;
        d["triggers"] = model->triggers;
        d["tool_invocations"] = model->tool_invocations;
        d["cache_hits"] = model->cache_hits;
        d["dropped_triggers"] = model->dropped_triggers;
        details[model->name] = std::move(d);

        ordered_json list = ordered_json::array();
        for (const PairResult& pair : model->pairs) {
            ordered_json row;
            row["task"] = pair.task;
            row["dependencies"] = pair.dependencies;
            row["covered"] = pair.covered;
            row["valid"] = pair.valid;
            row["lint_errors"] = pair.lint_errors;
            row["exact"] = pair.exact;
            row["edit_sim"] = pair.edit_similarity;
            row["bleu4"] = pair.bleu;
            row["steps"] = pair.trace.steps;
            row["tool_invocations"] = pair.trace.tool_invocations;
            row["cache_hits"] = pair.trace.cache_hits;
            row["prediction"] = pair.prediction;
            list.push_back(std::move(row));
        }
        rows[model->name] = std::move(list);
    }
    doc["headline"] = std::move(headline);
    doc["details"] = std::move(details);
    doc["pairs"] = std::move(rows);
    return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

bool RunConfig::operator==(const RunConfig& other) const {
    return corpus_id == other.corpus_id && train_root == other.train_root && eval_root == other.eval_root &&
           tasks == other.tasks && model.order == other.model.order && model.alpha == other.model.alpha &&
           model.buckets == other.model.buckets && max_tokens == other.max_tokens && cache == other.cache &&
           jobs == other.jobs && dataset == other.dataset && dataset_stats == other.dataset_stats &&
           tool_model == other.tool_model && vanilla_model == other.vanilla_model && report == other.report;
}

namespace {

void reject_unknown(const json& object, std::initializer_list<std::string_view> known, const std::string& where) {
    if (!object.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, value] : object.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw ConfigError("unknown config key '" + where + key + "'");
        }
    }
}

template <typename T>
void read(const json& object, const char* key, T& out) {
    if (object.contains(key)) out = object.at(key).get<T>();
}

void read_path(const json& object, const char* key, fs::path& out) {
    if (object.contains(key)) out = object.at(key).get<std::string>();
}

}  // namespace

RunConfig parse_config(std::string_view json_text) {
    RunConfig config;
    try {
        json doc = json::parse(json_text);
        reject_unknown(doc, {"corpus_id", "train_root", "eval_root", "tasks", "model", "generation", "jobs", "outputs"},
                       "");
        read(doc, "corpus_id", config.corpus_id);
        read_path(doc, "train_root", config.train_root);
        read_path(doc, "eval_root", config.eval_root);
        read_path(doc, "tasks", config.tasks);
        read(doc, "jobs", config.jobs);
        if (doc.contains("model")) {
            const json& model = doc.at("model");
            reject_unknown(model, {"order", "alpha", "buckets"}, "model.");
            read(model, "order", config.model.order);
            read(model, "alpha", config.model.alpha);
            read(model, "buckets", config.model.buckets);
        }
        if (doc.contains("generation")) {
            const json& gen = doc.at("generation");
            reject_unknown(gen, {"max_tokens", "cache"}, "generation.");
            read(gen, "max_tokens", config.max_tokens);
            read(gen, "cache", config.cache);
        }
        if (doc.contains("outputs")) {
            const json& out = doc.at("outputs");
            reject_unknown(out, {"dataset", "dataset_stats", "tool_model", "vanilla_model", "report"}, "outputs.");
            read_path(out, "dataset", config.dataset);
            read_path(out, "dataset_stats", config.dataset_stats);
            read_path(out, "tool_model", config.tool_model);
            read_path(out, "vanilla_model", config.vanilla_model);
            read_path(out, "report", config.report);
        }
    } catch (const json::exception& error) {
        throw ConfigError(std::string("bad config: ") + error.what());
    }
    if (config.model.order < 1) throw ConfigError("model.order must be at least 1");
    if (!(config.model.alpha > 0.0)) throw ConfigError("model.alpha must be positive");
    if (config.model.buckets < 1) throw ConfigError("model.buckets must be at least 1");
    if (config.max_tokens < 1) throw ConfigError("generation.max_tokens must be at least 1");
    if (config.jobs < 1) throw ConfigError("jobs must be at least 1");
    return config;
}

std::string config_json(const RunConfig& config) {
    ordered_json doc;
    doc["corpus_id"] = config.corpus_id;
    doc["train_root"] = config.train_root.generic_string();
    doc["eval_root"] = config.eval_root.generic_string();
    doc["tasks"] = config.tasks.generic_string();
    doc["model"] = {{"order", config.model.order}, {"alpha", config.model.alpha}, {"buckets", config.model.buckets}};
    doc["generation"] = {{"max_tokens", config.max_tokens}, {"cache", config.cache}};
    doc["jobs"] = config.jobs;
    doc["outputs"] = {{"dataset", config.dataset.generic_string()},
                      {"dataset_stats", config.dataset_stats.generic_string()},
                      {"tool_model", config.tool_model.generic_string()},
                      {"vanilla_model", config.vanilla_model.generic_string()},
                      {"report", config.report.generic_string()}};
    return doc.dump(2) + "\n";
}

RunConfig resolve_paths(RunConfig config, const fs::path& base) {
    for (fs::path* path : {&config.train_root, &config.eval_root, &config.tasks, &config.dataset,
                           &config.dataset_stats, &config.tool_model, &config.vanilla_model, &config.report}) {
        if (path->is_relative()) *path = (base / *path).lexically_normal();
    }
    return config;
}

fs::path data_base(const std::optional<fs::path>& config_file) {
    if (const char* env = std::getenv("REPOGEN_DATA_DIR"); env != nullptr && *env != '\0') return fs::path(env);
    if (config_file && config_file->has_parent_path()) return fs::absolute(config_file->parent_path());
    return fs::current_path();
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream bytes;
    bytes << in.rdbuf();
    return bytes.str();
}

void write_file(const fs::path& path, std::string_view bytes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace repogen::pipeline
