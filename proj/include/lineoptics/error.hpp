#ifndef LINEOPTICS_ERROR_HPP
#define LINEOPTICS_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace lineoptics {

enum class ErrorKind {
  ChartExcluded,    // direction falls in the excluded cap around the south pole
  DegenerateInput,  // coincident points/directions, non-unit vectors
  NotIncident,      // a line does not pass through the point it should
  OutOfDomain,      // surface parameter outside the declared rectangle
  SolverFailure,    // root search stalled without a certified root
  ParseError,       // malformed scene file
};

std::string_view to_string(ErrorKind kind);

/// Base exception for every failure reported by the library. The kind is
/// machine-readable; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ParseError : public Error {
 public:
  ParseError(int line, std::string field, const std::string& message);

  int line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  int line_;
  std::string field_;
};

}  // namespace lineoptics

#endif  // LINEOPTICS_ERROR_HPP
