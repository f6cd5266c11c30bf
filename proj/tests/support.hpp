#pragma once

// Fixtures shared by the unit tests.

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "repogen/analysis.hpp"
#include "repogen/pipeline.hpp"

namespace repogen::fixtures {

inline std::filesystem::path source_dir() { return REPOGEN_SOURCE_DIR; }
inline std::filesystem::path demo_dir() { return source_dir() / "data" / "demo"; }

inline analysis::Repository make_repo(std::vector<std::pair<std::string, std::string>> files,
                                      std::string name = "fixture") {
    analysis::Repository repo(std::move(name));
    for (auto& [path, text] : files) repo.add_file(std::move(path), std::move(text));
    return repo;
}

/// Train and eval repositories of the bundled corpus.
inline const std::vector<analysis::Repository>& demo_repos() {
    static const std::vector<analysis::Repository> repos = [] {
        std::vector<analysis::Repository> all = pipeline::load_corpus(demo_dir() / "train");
        for (analysis::Repository& repo : pipeline::load_corpus(demo_dir() / "eval")) all.push_back(std::move(repo));
        return all;
    }();
    return repos;
}

}  // namespace repogen::fixtures
