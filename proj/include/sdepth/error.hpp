#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sdepth {

enum class ErrorKind
{
    invalid_argument,
    dimension_mismatch,
    out_of_range,
    infeasible_budget,
    degenerate_mode,
    degenerate_input,
    degenerate_sample,
    zero_coefficient,
    all_zero_discrepancy,
    divergence,
};

std::string_view to_string(ErrorKind kind);

//! Library-wide exception; `kind()` lets callers branch without parsing text.
class Error : public std::runtime_error
{
  public:
    Error(ErrorKind kind, std::string const& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind)
    {
    }

    ErrorKind kind() const noexcept { return kind_; }

  private:
    ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind)
{
    switch (kind)
    {
        case ErrorKind::invalid_argument: return "InvalidArgument";
        case ErrorKind::dimension_mismatch: return "DimensionMismatch";
        case ErrorKind::out_of_range: return "OutOfRange";
        case ErrorKind::infeasible_budget: return "InfeasibleBudget";
        case ErrorKind::degenerate_mode: return "DegenerateMode";
        case ErrorKind::degenerate_input: return "DegenerateInput";
        case ErrorKind::degenerate_sample: return "DegenerateSample";
        case ErrorKind::zero_coefficient: return "ZeroCoefficient";
        case ErrorKind::all_zero_discrepancy: return "AllZeroDiscrepancy";
        case ErrorKind::divergence: return "Divergence";
    }
    return "Unknown";
}

#define SDEPTH_REQUIRE(cond, kind, msg)                   \
    do                                                    \
    {                                                     \
        if (!(cond))                                      \
        {                                                 \
            throw ::sdepth::Error(::sdepth::ErrorKind::kind, msg); \
        }                                                 \
    } while (0)

}  // namespace sdepth
