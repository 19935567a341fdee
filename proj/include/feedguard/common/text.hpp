#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace feedguard::text {

std::string trim(std::string_view s);

/// Case-folds ASCII letters, trims, and collapses internal whitespace runs to a
/// single space. Used wherever two labels must compare "equal as text".
std::string normalize(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::vector<std::string> split(std::string_view s, char sep);

bool contains(std::string_view haystack, std::string_view needle);

/// Lowercase SHA-256 hex digest.
std::string sha256_hex(std::string_view data);

/// Substitutes every {{name}} placeholder. Unfilled placeholders and unused
/// variables throw std::invalid_argument.
std::string render(std::string_view tmpl, const std::map<std::string, std::string>& vars);

/// Wraps a value in double quotes for prompt rendering.
std::string quote(std::string_view s);

}  // namespace feedguard::text
