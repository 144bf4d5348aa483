#pragma once

#include <stdexcept>
#include <string>

namespace emojivec {

// Error categories, mapped to distinct CLI exit codes.
enum class errc {
    config,     // invalid option / invariant violation
    not_found,  // missing key, missing file
    format,     // malformed input data (carries a line number where known)
    domain,     // argument outside the operation's domain
    degenerate, // input is structurally valid but unusable (zero vector, identical points)
    io,         // filesystem failure
};

class error : public std::runtime_error {
  public:
    error(errc code, std::string msg) : std::runtime_error(std::move(msg)), code_(code) {}
    errc code() const { return code_; }

  private:
    errc code_;
};

inline const char* errc_name(errc c) {
    switch (c) {
    case errc::config: return "config";
    case errc::not_found: return "not-found";
    case errc::format: return "format";
    case errc::domain: return "domain";
    case errc::degenerate: return "degenerate";
    case errc::io: return "io";
    }
    return "unknown";
}

[[noreturn]] inline void fail(errc code, const std::string& msg) { throw error(code, msg); }

} // namespace emojivec
