#pragma once

#include <stdexcept>
#include <string>

namespace grushin {

/// Invalid experiment configuration (bad field, incompatible alpha/extension,
/// missing walls, ...). The message names the offending field.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace grushin
