#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace seedens::csv {

// RFC 4180: quoted fields may contain commas, CRLF/LF and doubled quotes.
// Returns one vector of fields per row; blank trailing line is ignored.
// Throws InputError on an unterminated quote.
std::vector<std::vector<std::string>> parse(std::string_view text);

// Quotes the field only when it needs it.
std::string escape(std::string_view field);

std::string join_row(const std::vector<std::string>& fields);

}  // namespace seedens::csv
