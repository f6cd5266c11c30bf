#include "repogen/analysis.hpp"

#include <array>

namespace repogen::analysis {

std::string strip_markers(std::string_view text) {
    static constexpr std::array<std::string_view, 3> kMarkers = {"<BOS>", "<EOS>", "<COMP>"};
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        bool matched = false;
        for (std::string_view marker : kMarkers) {
            if (text.substr(i).starts_with(marker)) {
                i += marker.size();
                matched = true;
                break;
            }
        }
        if (!matched) out += text[i++];
    }
    return out;
}

InsertResult insert(const Repository& repo, const CaretPosition& pos, std::string_view partial_text) {
    if (!repo.contains(pos.file)) throw PositionError("no such file in repository: " + pos.file);
    const std::string& original = repo.text(pos.file);
    std::size_t offset = offset_of(original, pos.line, pos.column);

    std::string body = strip_markers(partial_text);
    std::string indent(static_cast<std::size_t>(pos.column), ' ');
    std::string spliced;
    CaretPosition caret = pos;
    for (char c : body) {
        spliced += c;
        if (c == '\n') {
            spliced += indent;
            ++caret.line;
            caret.column = pos.column;
        } else {
            ++caret.column;
        }
    }
    // Columns count bytes, as the lexer does.
    std::string text = original.substr(0, offset) + spliced + original.substr(offset);
    return InsertResult{repo.with_file(pos.file, std::move(text)), caret};
}

}  // namespace repogen::analysis
