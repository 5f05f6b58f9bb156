#pragma once

#include <stdexcept>
#include <string>

namespace oaudit {

// Error taxonomy. Validation-class errors map to CLI exit code 2,
// runtime-class errors to exit code 3.
enum class errc {
  config,
  schema,
  parse,
  domain,
  format,
  alignment,
  degenerate,
  io,
  network,
  internal,
};

inline const char* errc_name(errc k) {
  switch (k) {
    case errc::config: return "config";
    case errc::schema: return "schema";
    case errc::parse: return "parse";
    case errc::domain: return "domain";
    case errc::format: return "format";
    case errc::alignment: return "alignment";
    case errc::degenerate: return "degenerate";
    case errc::io: return "io";
    case errc::network: return "network";
    case errc::internal: return "internal";
  }
  return "unknown";
}

inline bool is_validation_error(errc k) {
  switch (k) {
    case errc::config:
    case errc::schema:
    case errc::parse:
    case errc::domain:
    case errc::format:
    case errc::alignment:
      return true;
    default:
      return false;
  }
}

class Error : public std::runtime_error {
 public:
  Error(errc kind, const std::string& msg)
      : std::runtime_error(std::string(errc_name(kind)) + " error: " + msg),
        kind_(kind) {}

  errc kind() const { return kind_; }

 private:
  errc kind_;
};

[[noreturn]] inline void fail(errc kind, const std::string& msg) {
  throw Error(kind, msg);
}

}  // namespace oaudit
