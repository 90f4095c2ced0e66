#pragma once

#include <stdexcept>
#include <string>

namespace slicematch {

/// Malformed input data (CSV, PGM, PNG, trace files).
struct parse_error : std::runtime_error {
    explicit parse_error(const std::string& what) : std::runtime_error(what) {}
};

/// Well-formed input outside a solver's supported domain.
struct unsupported_instance : std::runtime_error {
    explicit unsupported_instance(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical degeneracy that leaves the requested quantity undefined.
struct degenerate_error : std::runtime_error {
    explicit degenerate_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace slicematch
