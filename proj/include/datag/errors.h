#ifndef DATAG_ERRORS_H_
#define DATAG_ERRORS_H_

#include <stdexcept>
#include <string>

namespace datag {

// Base class of every error raised by the toolkit. The CLI maps the three
// families below onto exit codes 1 (usage), 2 (data/format) and 3 (integrity).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller misuse: bad flags, wrong pipeline order, mode mismatch.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Configuration problems: missing rule table, disabled features needed, etc.
class ConfigError : public UsageError {
 public:
  using UsageError::UsageError;
};

// Anything wrong with input data or files.
class DataError : public Error {
 public:
  using Error::Error;
};

class IoError : public DataError {
 public:
  IoError(const std::string &path, const std::string &what)
      : DataError(path + ": " + what), path_(path) {}
  const std::string &path() const { return path_; }

 private:
  std::string path_;
};

// Malformed record. The locator is "file:line" or "file#element".
class ParseError : public DataError {
 public:
  ParseError(const std::string &locator, const std::string &what)
      : DataError(locator + ": " + what), locator_(locator) {}
  const std::string &locator() const { return locator_; }

 private:
  std::string locator_;
};

// Invalid taxonomy, rule table, annotation or model structure.
class ValidationError : public DataError {
 public:
  using DataError::DataError;
};

// Feature vector dimension incompatible with a model.
class DimensionError : public DataError {
 public:
  using DataError::DataError;
};

// Training cannot proceed (single class, empty positive set, ...).
class TrainingError : public DataError {
 public:
  using DataError::DataError;
};

// Declared counts do not match what was read.
class IntegrityError : public Error {
 public:
  IntegrityError(const std::string &what, long expected, long found)
      : Error(what + ": expected " + std::to_string(expected) + ", found " +
              std::to_string(found)),
        expected_(expected),
        found_(found) {}
  long expected() const { return expected_; }
  long found() const { return found_; }

 private:
  long expected_;
  long found_;
};

}  // namespace datag

#endif  // DATAG_ERRORS_H_
