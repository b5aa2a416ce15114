#include "emanprint/error.hpp"

namespace emanprint {

const char *to_string(ErrorKind kind) {
  switch (kind) {
  case ErrorKind::InvalidArgument: return "invalid argument";
  case ErrorKind::FileNotFound: return "file not found";
  case ErrorKind::MalformedHeader: return "malformed header";
  case ErrorKind::UnsupportedEncoding: return "unsupported encoding";
  case ErrorKind::Io: return "i/o error";
  case ErrorKind::EmptySignal: return "empty signal";
  case ErrorKind::DimensionMismatch: return "dimension mismatch";
  case ErrorKind::LabelOutOfRange: return "label out of range";
  case ErrorKind::Parse: return "parse error";
  case ErrorKind::AdapterUnavailable: return "codec adapter unavailable";
  case ErrorKind::Codec: return "codec failure";
  }
  return "unknown error";
}

} // namespace emanprint
