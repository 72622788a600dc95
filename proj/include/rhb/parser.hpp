#ifndef RHB_PARSER_HPP
#define RHB_PARSER_HPP

#include <stdexcept>
#include <string>

#include "rhb/expr.hpp"

namespace rhb {

struct ParseError : std::runtime_error {
    int line = 0;
    int column = 0;
    ParseError(int line_, int col_, const std::string& msg)
        : std::runtime_error("parse error at " + std::to_string(line_) + ":" +
                             std::to_string(col_) + ": " + msg),
          line(line_), column(col_) {}
};

/// Parses a system description (grammar documented in the README).
/// Throws ParseError with line/column on malformed input.
OdeSystem parse_system(const std::string& text);

} // namespace rhb

#endif
