#include "replimit/resources.hpp"

#include "replimit/errors.hpp"

namespace replimit {

std::vector<std::string> bundled_lines(std::string_view name) {
    auto text = bundled_resource(name);
    if (!text) throw Error("missing bundled resource " + std::string(name));
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < text->size()) {
        auto end = text->find('\n', start);
        if (end == std::string_view::npos) end = text->size();
        auto line = text->substr(start, end - start);
        start = end + 1;
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
        if (line.empty() || line.front() == '#') continue;
        lines.emplace_back(line);
    }
    return lines;
}

}  // namespace replimit
