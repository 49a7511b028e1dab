#pragma once

#include <stdexcept>
#include <string>

namespace bhmds {

// Failure categories map one-to-one onto CLI exit codes.
enum class ErrorKind { InputValidation = 2, Numerical = 3, Io = 4 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error(ErrorKind::InputValidation, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

enum class DataErrorCode {
  Parse,
  NonSquare,
  NegativeEntry,
  NonzeroDiagonal,
  NotFinite,
  Asymmetric,
  ZeroOffDiagonal,
  Disconnected,
  BadIndex,
};

const char* to_string(DataErrorCode code) noexcept;

class DataError : public InputError {
 public:
  DataError(DataErrorCode code, const std::string& what)
      : InputError(std::string(to_string(code)) + ": " + what), code_(code) {}
  DataErrorCode code() const noexcept { return code_; }

 private:
  DataErrorCode code_;
};

}  // namespace bhmds
