#pragma once

#include <stdexcept>
#include <string>

namespace fprint {

// All library failures surface as this type; the message carries the context.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fprint
