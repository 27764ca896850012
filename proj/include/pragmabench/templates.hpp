#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace pragmabench::strategies {

namespace detail {
struct TemplateEntry {
    std::string_view name;
    std::string_view text;
};
extern const TemplateEntry kTemplateTable[];
extern const std::size_t kTemplateCount;
} // namespace detail

// Returns the embedded template bytes (identical to templates/<name>.txt).
// Throws Error(Config) for an unknown name.
std::string_view template_text(std::string_view name);

std::vector<std::string_view> template_names();

} // namespace pragmabench::strategies
