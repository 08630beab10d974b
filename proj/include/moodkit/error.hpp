#pragma once

#include <stdexcept>
#include <string>

namespace moodkit {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Empty or otherwise unusable volume (wrong dims, unnormalized input...).
class InvalidVolume : public Error {
public:
    using Error::Error;
};

/// Bad argument or config invariant violation.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Filesystem failure: missing file, unwritable directory.
class IoError : public Error {
public:
    using Error::Error;
};

enum class FormatErrc {
    bad_magic,
    unsupported_dtype,
    truncated,
    bad_header,
};

/// Malformed file content. `code()` tells which kind.
class FormatError : public Error {
public:
    FormatError(FormatErrc code, const std::string& what) : Error(what), code_(code) {}
    FormatErrc code() const noexcept { return code_; }

private:
    FormatErrc code_;
};

/// Persisted state disagrees with the requested configuration
/// (checkpoint architecture, schedule length, histogram binning).
class ConfigMismatch : public Error {
public:
    using Error::Error;
};

} // namespace moodkit
