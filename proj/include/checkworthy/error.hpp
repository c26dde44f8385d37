#pragma once

#include <stdexcept>
#include <string>

namespace checkworthy {

/// Base class for every error raised by the library. `exit_code()` is the
/// process status the CLI reports for it.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 3; }
};

/// Malformed input file (TSV rows, lexicon rows, stoplists).
class ParseError : public Error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what), file_(file), line_(line) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

/// Broken binary container (vector files, model bundles).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A caller violated an operation's precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

class MissingKeyError : public Error {
 public:
  using Error::Error;
};

/// Bad configuration or hyperparameters.
class ConfigError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

/// The embedding service was unreachable or answered badly.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, int attempts)
      : Error(what + " (after " + std::to_string(attempts) + " attempt" +
              (attempts == 1 ? "" : "s") + ")"),
        attempts_(attempts) {}

  int attempts() const noexcept { return attempts_; }
  int exit_code() const noexcept override { return 4; }

 private:
  int attempts_;
};

}  // namespace checkworthy
