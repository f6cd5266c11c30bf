// repogen command-line tool: augment, train, generate, evaluate, lint, complete.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "repogen/pipeline.hpp"

namespace fs = std::filesystem;
using namespace repogen;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

struct Options {
    std::string config_file;
    std::optional<int> jobs;
    std::optional<int> order;
    std::optional<int> max_tokens;
    bool no_cache = false;
    std::string train_root;
    std::string eval_root;
    std::string tasks;
};

pipeline::RunConfig load_config(const Options& opts) {
    pipeline::RunConfig config;
    std::optional<fs::path> file;
    if (!opts.config_file.empty()) {
        file = fs::path(opts.config_file);
        config = pipeline::parse_config(pipeline::read_file(*file));
    }
    // Command-line paths are relative to the working directory, config paths
    // to the data base.
    config = pipeline::resolve_paths(config, pipeline::data_base(file));
    if (!opts.train_root.empty()) config.train_root = fs::absolute(opts.train_root);
    if (!opts.eval_root.empty()) config.eval_root = fs::absolute(opts.eval_root);
    if (!opts.tasks.empty()) config.tasks = fs::absolute(opts.tasks);
    if (opts.jobs) config.jobs = *opts.jobs;
    if (opts.order) config.model.order = *opts.order;
    if (opts.max_tokens) config.max_tokens = *opts.max_tokens;
    if (opts.no_cache) config.cache = false;
    if (config.jobs < 1 || config.model.order < 1 || config.max_tokens < 1) {
        throw pipeline::ConfigError("jobs, order and max-tokens must be positive");
    }
    return config;
}

decode::GenerationConfig generation_config(const pipeline::RunConfig& config) {
    decode::GenerationConfig gen;
    gen.max_tokens = config.max_tokens;
    gen.cache_enabled = config.cache;
    return gen;
}

int cmd_augment(const pipeline::RunConfig& config) {
    std::vector<analysis::Repository> repos = pipeline::load_corpus(config.train_root);
    trigger::AugmentedDataset dataset = trigger::augment_corpus(repos, config.corpus_id, config.jobs);
    for (const std::string& diag : dataset.diagnostics) std::cerr << "note: " << diag << "\n";
    if (dataset.pairs.empty()) std::cerr << "warning: no documented functions found under " << config.train_root << "\n";
    pipeline::write_file(config.dataset, trigger::dataset_jsonl(dataset.records()));
    pipeline::write_file(config.dataset_stats, trigger::stats_json(dataset));
    std::printf("%zu pairs from %zu repositories, mean comp_count %.2f\n", dataset.stats.pairs, repos.size(),
                dataset.stats.mean_comp_count);
    std::printf("wrote %s\n", config.dataset.string().c_str());
    return kOk;
}

int cmd_train(const pipeline::RunConfig& config) {
    std::vector<trigger::DatasetRecord> records = trigger::parse_dataset_jsonl(pipeline::read_file(config.dataset));
    pipeline::TrainedModels models = pipeline::train_models(records, config.model);
    models.tool.save(config.tool_model);
    models.vanilla.save(config.vanilla_model);
    std::vector<lm::TrainingPair> pairs = pipeline::training_pairs(records, models.tool.vocab(), true);
    double nll = models.tool.average_nll(pairs);
    double uniform = std::log(static_cast<double>(models.tool.vocab().size()));
    std::printf("vocab %zu, tool model training perplexity %.3f (uniform %.1f)\n", models.tool.vocab().size(),
                std::exp(nll), std::exp(uniform));
    std::printf("wrote %s and %s\n", config.tool_model.string().c_str(), config.vanilla_model.string().c_str());
    return kOk;
}

struct GenerateArgs {
    std::string task;
    std::string repo;
    std::string file;
    int line = 0;
    int column = 0;
    std::string description;
    bool vanilla = false;
    bool trace = false;
};

int cmd_generate(const pipeline::RunConfig& config, const GenerateArgs& args) {
    analysis::Repository repo;
    analysis::CaretPosition caret;
    std::string description;
    if (!args.task.empty()) {
        std::vector<analysis::Repository> repos = pipeline::load_corpus(config.eval_root);
        std::vector<pipeline::EvalTask> tasks =
            pipeline::resolve_tasks(pipeline::parse_tasks_jsonl(pipeline::read_file(config.tasks)), repos);
        auto it = std::find_if(tasks.begin(), tasks.end(), [&](const pipeline::EvalTask& t) { return t.id == args.task; });
        if (it == tasks.end()) throw std::runtime_error("no task with id " + args.task);
        repo = it->hole_repo;
        caret = it->caret;
        description = it->description;
    } else {
        if (args.repo.empty() || args.file.empty() || args.line < 1) {
            throw CLI::ValidationError("generate needs --task or --repo, --file, --line and --description");
        }
        repo = analysis::Repository::load(args.repo, fs::path(args.repo).filename().string());
        caret = analysis::CaretPosition{args.file, args.line, args.column};
        if (!repo.contains(caret.file)) throw analysis::PositionError("no file " + caret.file + " in repository");
        analysis::offset_of(repo.text(caret.file), caret.line, caret.column);
        description = args.description;
    }
    lm::NGramModel model = lm::NGramModel::load(args.vanilla ? config.vanilla_model : config.tool_model);
    decode::GenerationConfig gen = generation_config(config);
    gen.tool_enabled = !args.vanilla;
    decode::GenerationResult result =
        decode::generate(model, repo, lm::tokenize(description, model.vocab()), caret, gen);
    std::cout << result.text;
    if (!result.text.empty() && result.text.back() != '\n') std::cout << "\n";
    if (args.trace) {
        std::cerr << decode::trace_json(result.trace);
    } else {
        std::cerr << "steps " << result.trace.steps << ", triggers " << result.trace.triggers << ", tool calls "
                  << result.trace.tool_invocations << ", cache hits " << result.trace.cache_hits << "\n";
    }
    return kOk;
}

int cmd_evaluate(const pipeline::RunConfig& config) {
    std::vector<analysis::Repository> repos = pipeline::load_corpus(config.eval_root);
    std::vector<pipeline::EvalTask> tasks =
        pipeline::resolve_tasks(pipeline::parse_tasks_jsonl(pipeline::read_file(config.tasks)), repos);
    pipeline::TrainedModels models{lm::NGramModel::load(config.tool_model), lm::NGramModel::load(config.vanilla_model)};
    pipeline::EvalReport report = pipeline::evaluate(models, tasks, generation_config(config), config.jobs);
    pipeline::write_file(config.report, pipeline::report_json(report));
    auto show = [](const std::optional<double>& v) { return v ? std::to_string(*v) : std::string("n/a"); };
    std::printf("%-8s %9s %9s %9s %9s %9s\n", "model", "DepCov", "ValRate", "Exact", "EditSim", "BLEU-4");
    for (const pipeline::ModelReport* m : {&report.vanilla, &report.tool}) {
        std::printf("%-8s %9s %9.4f %9.4f %9.3f %9.4f\n", m->name.c_str(), show(m->dep_cov).c_str(), m->val_rate,
                    m->exact_match, m->edit_sim, m->bleu4);
    }
    std::printf("%zu tasks, wrote %s\n", tasks.size(), config.report.string().c_str());
    return kOk;
}

int cmd_lint(const std::string& repo_dir, const std::string& file) {
    analysis::Repository repo = analysis::Repository::load(repo_dir, fs::path(repo_dir).filename().string());
    analysis::ScopeIndex index = analysis::ScopeIndex::build(repo);
    std::vector<analysis::LintError> errors;
    for (const std::string& path : repo.paths()) {
        if (!file.empty() && path != file) continue;
        for (analysis::LintError& e : analysis::lint_check(index, path)) errors.push_back(std::move(e));
    }
    if (!file.empty() && !repo.contains(file)) throw std::runtime_error("no file " + file + " in repository");
    std::cout << analysis::lint_report_jsonl(errors);
    return kOk;
}

int cmd_complete(const std::string& repo_dir, const analysis::CaretPosition& caret) {
    analysis::Repository repo = analysis::Repository::load(repo_dir, fs::path(repo_dir).filename().string());
    if (!repo.contains(caret.file)) throw analysis::PositionError("no file " + caret.file + " in repository");
    for (const std::string& name : analysis::tool_complete(repo, caret)) std::cout << name << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Repository-aware code generation with a completion tool in the decoding loop"};
    app.require_subcommand(1);
    Options opts;
    app.add_option("-c,--config", opts.config_file, "JSON run configuration")->check(CLI::ExistingFile);

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-j,--jobs", opts.jobs, "worker threads");
    };

    CLI::App* augment = app.add_subcommand("augment", "insert trigger markers into the training corpus");
    add_common(augment);
    augment->add_option("--train-root", opts.train_root, "directory of training repositories");

    CLI::App* train = app.add_subcommand("train", "train the tool and vanilla models from the dataset");
    train->add_option("--order", opts.order, "n-gram order");

    GenerateArgs gen;
    CLI::App* generate = app.add_subcommand("generate", "generate one function body");
    generate->add_option("--task", gen.task, "task id from the tasks file");
    generate->add_option("--repo", gen.repo, "repository directory");
    generate->add_option("--file", gen.file, "file inside the repository");
    generate->add_option("--line", gen.line, "caret line (1-based)");
    generate->add_option("--column", gen.column, "caret column (0-based)");
    generate->add_option("--description", gen.description, "signature and docstring");
    generate->add_flag("--vanilla", gen.vanilla, "use the vanilla model without the tool");
    generate->add_flag("--trace", gen.trace, "print the per-step trace as JSON on stderr");
    generate->add_option("--max-tokens", opts.max_tokens, "generation cap");
    generate->add_flag("--no-cache", opts.no_cache, "disable the suggestion cache");
    generate->add_option("--eval-root", opts.eval_root, "directory of evaluation repositories");
    generate->add_option("--tasks", opts.tasks, "tasks file");

    CLI::App* evaluate = app.add_subcommand("evaluate", "evaluate both models on the benchmark tasks");
    add_common(evaluate);
    evaluate->add_option("--eval-root", opts.eval_root, "directory of evaluation repositories");
    evaluate->add_option("--tasks", opts.tasks, "tasks file");
    evaluate->add_option("--max-tokens", opts.max_tokens, "generation cap");
    evaluate->add_flag("--no-cache", opts.no_cache, "disable the suggestion cache");

    std::string repo_dir;
    std::string lint_file;
    CLI::App* lint = app.add_subcommand("lint", "report syntax, undefined-variable and no-member errors");
    lint->add_option("repo", repo_dir, "repository directory")->required()->check(CLI::ExistingDirectory);
    lint->add_option("--file", lint_file, "only this file");

    analysis::CaretPosition caret;
    CLI::App* complete = app.add_subcommand("complete", "list identifiers valid at a position");
    complete->add_option("repo", repo_dir, "repository directory")->required()->check(CLI::ExistingDirectory);
    complete->add_option("file", caret.file, "file inside the repository")->required();
    complete->add_option("line", caret.line, "line (1-based)")->required();
    complete->add_option("column", caret.column, "column (0-based)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (lint->parsed()) return cmd_lint(repo_dir, lint_file);
        if (complete->parsed()) return cmd_complete(repo_dir, caret);
        pipeline::RunConfig config = load_config(opts);
        if (augment->parsed()) return cmd_augment(config);
        if (train->parsed()) return cmd_train(config);
        if (generate->parsed()) return cmd_generate(config, gen);
        if (evaluate->parsed()) return cmd_evaluate(config);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const pipeline::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::logic_error& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kInternal;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kData;
    }
    return kInternal;
}
