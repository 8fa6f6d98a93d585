#pragma once

#include <stdexcept>
#include <string>

namespace lagn {

// All recoverable failures (bad input files, contract violations on
// arguments) are reported as lagn::Error with a human-readable message.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace lagn
