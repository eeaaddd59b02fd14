#pragma once

#include <stdexcept>
#include <string>

namespace vrg {

// Error taxonomy shared by the whole engine. The CLI maps these onto exit
// codes: format/data/config problems exit 2, numerical failures exit 3.

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace vrg
