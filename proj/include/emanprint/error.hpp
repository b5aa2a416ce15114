#pragma once

#include <stdexcept>
#include <string>

namespace emanprint {

enum class ErrorKind {
  InvalidArgument,
  FileNotFound,
  MalformedHeader,
  UnsupportedEncoding,
  Io,
  EmptySignal,
  DimensionMismatch,
  LabelOutOfRange,
  Parse,
  AdapterUnavailable,
  Codec,
};

const char *to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

} // namespace emanprint
