#pragma once

#include <stdexcept>
#include <string>

namespace chartattack {

// Base class for all library errors. `path` points at the offending
// document location when one exists ("" otherwise).
class Error : public std::runtime_error {
public:
    Error(std::string path, const std::string& message)
        : std::runtime_error(path.empty() ? message : path + ": " + message),
          path_(std::move(path)) {}

    const std::string& path() const { return path_; }

private:
    std::string path_;
};

// Malformed document, type mismatch at a known path, or an invariant
// violation detected while constructing a typed annotation.
class ParseError : public Error {
public:
    using Error::Error;
};

// Patch path resolution failure or post-merge invariant violation.
class PatchError : public Error {
public:
    using Error::Error;
};

// A misleader was requested on an annotation that does not meet its
// structural conditions. `condition` names the failed check.
class IncompatibleError : public Error {
public:
    IncompatibleError(std::string kind, std::string condition)
        : Error("", "misleader '" + kind + "' incompatible: " + condition),
          kind_(std::move(kind)),
          condition_(std::move(condition)) {}

    const std::string& kind() const { return kind_; }
    const std::string& condition() const { return condition_; }

private:
    std::string kind_;
    std::string condition_;
};

// Chart geometry cannot be computed (log scale over a nonpositive
// domain, empty data, malformed SVG, ...).
class RenderError : public Error {
public:
    using Error::Error;
};

// External endpoint failure after retries were exhausted.
class EndpointError : public Error {
public:
    EndpointError(const std::string& message, int status = 0)
        : Error("", message), status_(status) {}

    int status() const { return status_; }

private:
    int status_ = 0;
};

// Filesystem / serialization problems.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace chartattack
