#ifndef HALFFACE_ERROR_HPP
#define HALFFACE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace halfface {

enum class ErrorCode {
    io_failure,
    missing_file,
    unsupported_format,
    corrupt_header,
    corrupt_payload,
    out_of_bounds,
    bad_argument,
    zero_variance,
    geometry_mismatch,
    invariant_violation,
    version_mismatch,
    cascade_invalid,
    no_convergence,
    infeasible_split,
    empty_corpus,
};

const char* to_string(ErrorCode code);

/// Single exception type for the whole library; the code identifies the
/// failure class so callers can tell a corrupt payload from a missing file.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace halfface

#endif
