#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace multihop::utf8 {

inline constexpr char32_t kReplacement = 0xFFFD;

// Decodes the code point starting at byte offset `i` and advances `i` past
// it. Malformed bytes decode to U+FFFD one byte at a time, so decoding
// always makes progress and never reads past the end.
char32_t decode(std::string_view s, std::size_t& i);

void append(std::string& out, char32_t cp);

// Number of code points in `s`.
std::size_t length(std::string_view s);

// Substring by code-point offsets, [char_start, char_end).
std::string substr(std::string_view s, std::size_t char_start, std::size_t char_end);

}  // namespace multihop::utf8
