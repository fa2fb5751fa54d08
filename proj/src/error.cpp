#include "lineoptics/error.hpp"

namespace lineoptics {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ChartExcluded: return "ChartExcluded";
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::NotIncident: return "NotIncident";
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::SolverFailure: return "SolverFailure";
    case ErrorKind::ParseError: return "ParseError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

namespace {

std::string format_parse_message(int line, const std::string& field, const std::string& message) {
  std::string out = "line " + std::to_string(line);
  if (!field.empty()) out += " [" + field + "]";
  return out + ": " + message;
}

}  // namespace

ParseError::ParseError(int line, std::string field, const std::string& message)
    : Error(ErrorKind::ParseError, format_parse_message(line, field, message)),
      line_(line),
      field_(std::move(field)) {}

}  // namespace lineoptics
