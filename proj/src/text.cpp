#include "toolcal/text.hpp"

#include <algorithm>
#include <cctype>

namespace toolcal::text {

namespace {

bool space(unsigned char c)
{
    return std::isspace(c) != 0;
}

bool numeric_body(std::string_view body)
{
    bool digit = false;
    for (unsigned char c : body) {
        if (std::isdigit(c)) {
            digit = true;
        } else if (!(space(c) || c == '.' || c == '%' || c == '+' || c == '-')) {
            return false;
        }
    }
    return digit;
}

} // namespace

std::string trim(std::string_view s)
{
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && space(static_cast<unsigned char>(s[b]))) {
        ++b;
    }
    while (e > b && space(static_cast<unsigned char>(s[e - 1]))) {
        --e;
    }
    return std::string(s.substr(b, e - b));
}

std::string to_lower(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string normalize(std::string_view s)
{
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (unsigned char c : s) {
        if (space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

bool starts_with_ci(std::string_view s, std::string_view prefix)
{
    return s.size() >= prefix.size() && iequals(s.substr(0, prefix.size()), prefix);
}

bool iequals(std::string_view a, std::string_view b)
{
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](unsigned char x, unsigned char y) {
               return std::tolower(x) == std::tolower(y);
           });
}

std::vector<std::string> bracketed_tags(std::string_view s)
{
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
        std::size_t open = s.find('[', pos);
        if (open == std::string_view::npos) {
            break;
        }
        std::size_t close = s.find_first_of("[]\n", open + 1);
        if (close == std::string_view::npos) {
            break;
        }
        if (s[close] != ']') {
            pos = close;
            continue;
        }
        std::string_view body = s.substr(open + 1, close - open - 1);
        std::string name = trim(body);
        if (!name.empty() && !numeric_body(body)) {
            out.push_back(std::move(name));
        }
        pos = close + 1;
    }
    return out;
}

std::string last_labeled_line(std::string_view s, std::string_view label)
{
    std::size_t found = std::string_view::npos;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        std::size_t end = s.find('\n', pos);
        std::string_view line = s.substr(pos, end == std::string_view::npos ? s.npos : end - pos);
        std::size_t lead = 0;
        while (lead < line.size() && space(static_cast<unsigned char>(line[lead]))) {
            ++lead;
        }
        if (line.substr(lead, label.size()) == label) {
            found = pos + lead + label.size();
        }
        if (end == std::string_view::npos) {
            break;
        }
        pos = end + 1;
    }
    if (found == std::string_view::npos) {
        return {};
    }
    std::size_t end = s.find('\n', found);
    return trim(s.substr(found, end == std::string_view::npos ? s.npos : end - found));
}

std::string join(const std::vector<std::string>& items, std::string_view sep)
{
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) {
            out += sep;
        }
        out += items[i];
    }
    return out;
}

std::string join_tags(const std::vector<std::string>& tools)
{
    std::string out;
    for (std::size_t i = 0; i < tools.size(); ++i) {
        if (i > 0) {
            out += ", ";
        }
        out += "[" + tools[i] + "]";
    }
    return out;
}

} // namespace toolcal::text
