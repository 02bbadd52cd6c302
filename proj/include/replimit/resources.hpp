#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace replimit {

// Raw bytes of a word list compiled into the library (see resources/).
std::optional<std::string_view> bundled_resource(std::string_view name);

// Non-empty, non-comment lines of a bundled list, in file order.
std::vector<std::string> bundled_lines(std::string_view name);

}  // namespace replimit
