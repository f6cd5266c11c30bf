#include "repogen/analysis.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace repogen::analysis {

namespace fs = std::filesystem;

Repository Repository::load(const fs::path& root, std::string name) {
    if (!fs::is_directory(root)) throw std::runtime_error("not a directory: " + root.string());
    if (name.empty()) name = root.filename().string();
    Repository repo(std::move(name));
    std::vector<fs::path> found;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (entry.is_regular_file() && entry.path().extension() == ".mp") found.push_back(entry.path());
    }
    std::sort(found.begin(), found.end());
    for (const fs::path& path : found) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw std::runtime_error("cannot read " + path.string());
        std::ostringstream text;
        text << in.rdbuf();
        repo.add_file(fs::relative(path, root).generic_string(), text.str());
    }
    return repo;
}

void Repository::add_file(std::string path, std::string text) {
    auto file = std::make_shared<File>();
    file->module = minilang::parse(text, path);
    file->text = std::move(text);
    files_[std::move(path)] = std::move(file);
}

Repository Repository::with_file(std::string path, std::string text) const {
    Repository copy = *this;
    copy.add_file(std::move(path), std::move(text));
    return copy;
}

bool Repository::contains(std::string_view path) const { return files_.find(path) != files_.end(); }

const Repository::File& Repository::file(std::string_view path) const {
    auto it = files_.find(path);
    if (it == files_.end()) throw PositionError("no such file in repository: " + std::string(path));
    return *it->second;
}

const std::string& Repository::text(std::string_view path) const { return file(path).text; }

const minilang::Module& Repository::module(std::string_view path) const { return file(path).module; }

std::vector<std::string> Repository::paths() const {
    std::vector<std::string> out;
    out.reserve(files_.size());
    for (const auto& [path, file] : files_) out.push_back(path);
    return out;
}

bool Repository::operator==(const Repository& other) const {
    if (name_ != other.name_ || files_.size() != other.files_.size()) return false;
    auto a = files_.begin();
    auto b = other.files_.begin();
    for (; a != files_.end(); ++a, ++b) {
        if (a->first != b->first) return false;
        if (a->second != b->second && a->second->text != b->second->text) return false;
    }
    return true;
}

std::size_t offset_of(std::string_view text, int line, int column) {
    if (line < 1 || column < 0) throw PositionError("position out of range");
    std::size_t start = 0;
    for (int l = 1; l < line; ++l) {
        std::size_t eol = text.find('\n', start);
        if (eol == std::string_view::npos) {
            throw PositionError("line " + std::to_string(line) + " is past the end of the file");
        }
        start = eol + 1;
    }
    std::size_t eol = text.find('\n', start);
    std::size_t length = (eol == std::string_view::npos ? text.size() : eol) - start;
    if (static_cast<std::size_t>(column) > length) {
        throw PositionError("column " + std::to_string(column) + " is past the end of line " + std::to_string(line));
    }
    return start + static_cast<std::size_t>(column);
}

std::string module_name_for(std::string_view path) {
    std::string name(path);
    if (name.ends_with(".mp")) name.resize(name.size() - 3);
    std::replace(name.begin(), name.end(), '/', '.');
    return name;
}

}  // namespace repogen::analysis
