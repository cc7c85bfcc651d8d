#ifndef FSPC_ERRORS_HPP
#define FSPC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace fspc {

// Grid or dimension mismatch between operands.
struct shape_error : std::runtime_error {
    explicit shape_error(const std::string& what) : std::runtime_error(what) {}
};

// A model quantity cannot be identified from the data (degenerate design,
// constant warped base, rank-deficient system).
struct identifiability_error : std::runtime_error {
    explicit identifiability_error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid or inconsistent configuration / unusable input set.
struct configuration_error : std::runtime_error {
    explicit configuration_error(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure at runtime (non-finite objective, optimizer breakdown).
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input file.
struct parse_error : std::runtime_error {
    explicit parse_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace fspc

#endif
