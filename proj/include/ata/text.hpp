#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ata {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace text {

std::string_view trim(std::string_view s);
std::string_view trim_right(std::string_view s);

/// Splits on '\n', dropping a trailing '\r' from each line. A trailing
/// newline does not produce an empty final line.
std::vector<std::string> split_lines(std::string_view s);

std::string join(std::span<const std::string> parts, std::string_view sep);

std::string to_upper(std::string_view s);
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool icontains(std::string_view haystack, std::string_view needle);
bool starts_with_icase(std::string_view s, std::string_view prefix);

/// Deterministic token estimate shared by every budgeted renderer: each
/// maximal run of letters/digits counts as one token, every other
/// non-space character counts as one token.
std::size_t count_tokens(std::string_view s);

/// Longest prefix of `s` whose count_tokens() is <= budget.
std::string truncate_tokens(std::string_view s, std::size_t budget);

std::string sha256_hex(std::string_view bytes);
std::string base64_encode(std::string_view bytes);
/// Throws Error on malformed input. Whitespace is ignored.
std::string base64_decode(std::string_view b64);

/// Shortest round-trip decimal rendering of a double ("0", "0.5", "1e-07").
std::string format_number(double v);

bool is_valid_utf8(std::string_view s);

/// Double-quoted rendering with C-style escapes for quotes, backslashes and
/// control characters.
std::string quote(std::string_view s);

}  // namespace text
}  // namespace ata
