#pragma once

#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// Fixed CSV dialect: comma separator, LF line endings, UTF-8 without BOM,
// RFC 4180 quoting only for fields that contain a comma, quote, CR or LF.
namespace jitscope::csv {

std::string escape(std::string_view field);

void write_row(std::ostream& out, std::span<const std::string> fields);

// Parses a whole document. Throws Error(E_IO) on an unterminated quote.
std::vector<std::vector<std::string>> parse(std::string_view text);

}  // namespace jitscope::csv
