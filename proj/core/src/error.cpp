#include "qtrap/error.hpp"

namespace qtrap {

namespace {

std::string format_position(const std::string& message, const std::string& field,
                            const std::string& origin, std::size_t line) {
    std::string out;
    if (!origin.empty()) {
        out += origin;
        if (line > 0) out += ":" + std::to_string(line);
        out += ": ";
    } else if (line > 0) {
        out += "line " + std::to_string(line) + ": ";
    }
    if (!field.empty()) out += "field '" + field + "': ";
    out += message;
    return out;
}

}  // namespace

ValidationError::ValidationError(const std::string& message, std::string field,
                                 std::string origin, std::size_t line)
    : Error(ErrorKind::validation, format_position(message, field, origin, line)),
      field_(std::move(field)),
      origin_(std::move(origin)),
      line_(line),
      detail_(message) {}

}  // namespace qtrap
