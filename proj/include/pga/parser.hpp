#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pga/meadow.hpp"
#include "pga/syntax.hpp"

namespace pga {

struct ParseError : std::runtime_error {
    int line;
    int col;
    ParseError(const std::string& msg, int line_, int col_)
        : std::runtime_error("parse error at " + std::to_string(line_) + ":" +
                             std::to_string(col_) + ": " + msg),
          line(line_),
          col(col_) {}
};

// Program text -> syntax tree. Whitespace-insensitive, // line comments.
// Probability and jump arguments are evaluated to exact rationals during
// parsing; jump arguments must pass as_natural.
TermPtr parse(std::string_view text);

// A meadow expression on its own (the argument grammar).
MeadowExprPtr parse_meadow(std::string_view text);

// Flattens a repetition-free, choice-free term into an instruction list.
// Returns nothing when the term contains repetition or choice; callers turn
// that into their own error.
std::optional<std::vector<Instruction>> term_to_instruction_list(const Term& t);

}  // namespace pga
