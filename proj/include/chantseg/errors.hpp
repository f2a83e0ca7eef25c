#pragma once

#include <stdexcept>
#include <string>

namespace chantseg {

// Base class for every error raised by the library. Subclasses name the
// specific failure so callers (and the CLI) can map them to exit codes.
struct Error : public std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct EmptyMelody : public Error {
  explicit EmptyMelody(const std::string& msg = "no pitch letters in melody") : Error(msg) {}
};

struct UnknownCharacter : public Error {
  explicit UnknownCharacter(const std::string& msg) : Error(msg) {}
};

struct DegenerateSplit : public Error {
  explicit DegenerateSplit(const std::string& msg) : Error(msg) {}
};

struct StaleTrace : public Error {
  explicit StaleTrace(const std::string& msg) : Error(msg) {}
};

struct SegmentTooLong : public Error {
  explicit SegmentTooLong(const std::string& msg) : Error(msg) {}
};

struct MissingBoundaries : public Error {
  explicit MissingBoundaries(const std::string& msg) : Error(msg) {}
};

struct NotApplicable : public Error {
  explicit NotApplicable(const std::string& msg) : Error(msg) {}
};

struct EmptyInput : public Error {
  explicit EmptyInput(const std::string& msg) : Error(msg) {}
};

struct ZeroVariance : public Error {
  explicit ZeroVariance(const std::string& msg = "series has zero variance") : Error(msg) {}
};

struct EmptyMode : public Error {
  explicit EmptyMode(const std::string& msg) : Error(msg) {}
};

struct AllModesImpossible : public Error {
  explicit AllModesImpossible(const std::string& msg = "every mode scores -inf") : Error(msg) {}
};

struct IoError : public Error {
  explicit IoError(const std::string& msg) : Error(msg) {}
};

struct FormatError : public Error {
  explicit FormatError(const std::string& msg) : Error(msg) {}
};

}  // namespace chantseg
