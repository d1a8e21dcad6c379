#pragma once

#include <stdexcept>
#include <string>

namespace nonfick {

/// Invalid user-facing configuration: bad grid sizes, unknown config keys,
/// missing presets, incompatible solver settings.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Runtime numerical failure: NaN/blow-up in a step, linear solver
/// breakdown, iteration caps exceeded.
struct NumericsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A hypothesis certificate could not be established (ellipticity lost,
/// coercivity gate empty); solvers refuse to run on such data.
struct CertificateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace nonfick
