#pragma once

#include <stdexcept>
#include <string>

namespace trapforge {

// Exception families map onto the CLI exit-code contract:
//   ConfigError -> 2, DataError -> 3, SchemaMismatchError -> 4, IoError -> 5.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class SchemaMismatchError : public Error {
 public:
  explicit SchemaMismatchError(const std::string& column, const std::string& detail)
      : Error("schema mismatch on column '" + column + "': " + detail), column_(column) {}
  const std::string& column() const { return column_; }

 private:
  std::string column_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class UnsupportedFormatError : public DataError {
 public:
  using DataError::DataError;
};

class CorruptRecordError : public DataError {
 public:
  CorruptRecordError(std::size_t record_index, const std::string& detail)
      : DataError("corrupt pcap record #" + std::to_string(record_index) + ": " + detail),
        record_index_(record_index) {}
  std::size_t record_index() const { return record_index_; }

 private:
  std::size_t record_index_;
};

class FrameTooLargeError : public DataError {
 public:
  using DataError::DataError;
};

class LabelTooLongError : public DataError {
 public:
  using DataError::DataError;
};

class SameAddressError : public DataError {
 public:
  using DataError::DataError;
};

class TargetTooLargeError : public DataError {
 public:
  using DataError::DataError;
};

class BadLineError : public DataError {
 public:
  BadLineError(std::size_t line, const std::string& reason)
      : DataError("label file line " + std::to_string(line) + ": " + reason), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class BadNameError : public DataError {
 public:
  using DataError::DataError;
};

class PortInUseError : public IoError {
 public:
  using IoError::IoError;
};

class NoAckError : public Error {
 public:
  using Error::Error;
};

class RefusedError : public Error {
 public:
  using Error::Error;
};

}  // namespace trapforge
