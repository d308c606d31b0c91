#pragma once

#include <stdexcept>
#include <string>

namespace sectlab {

// Base of every typed failure the toolkit raises. Subclasses carry an enum
// code so callers can branch without string matching.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace sectlab
