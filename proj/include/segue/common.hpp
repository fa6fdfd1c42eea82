#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace segue {

using Index = std::int32_t;
using Offset = std::int64_t;

// Bad input data (malformed files, dangling references, coverage gaps).
// The CLI maps this to exit code 2.
class data_error : public std::runtime_error {
public:
    explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

// A violated internal invariant. The CLI maps this to exit code 3.
class internal_error : public std::logic_error {
public:
    explicit internal_error(const std::string& what) : std::logic_error(what) {}
};

}  // namespace segue
