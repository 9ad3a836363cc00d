#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace toolcal::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
// Lowercase, trim, and collapse internal whitespace runs to one space.
std::string normalize(std::string_view s);

bool starts_with_ci(std::string_view s, std::string_view prefix);
bool iequals(std::string_view a, std::string_view b);

// Non-empty, non-numeric bracket bodies in order of appearance, trimmed.
std::vector<std::string> bracketed_tags(std::string_view s);

// Text following the last line that starts with `label`, up to the end of
// that line, trimmed. Empty when the label is absent.
std::string last_labeled_line(std::string_view s, std::string_view label);

std::string join(const std::vector<std::string>& items, std::string_view sep);
std::string join_tags(const std::vector<std::string>& tools);  // "[a], [b]"

} // namespace toolcal::text
