#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace sdepth {

enum class NormalityTest
{
    shapiro_wilk,
    dagostino_k2
};

std::string_view to_string(NormalityTest test);

struct NormalityReport
{
    NormalityTest test = NormalityTest::shapiro_wilk;
    double statistic = 0;  //!< W or K^2
    double p_value = 0;
    std::size_t n = 0;
};

/// Shapiro-Wilk W with Royston's polynomial approximation, 3 <= n <= 5000.
/// DegenerateSample when the sample range is below 1e-12.
NormalityReport shapiro_wilk(std::span<double const> samples);

/// D'Agostino-Pearson K^2 omnibus test from the transformed sample skewness
/// and kurtosis, n >= 20. p-value from chi-squared with 2 dof.
NormalityReport dagostino_k2(std::span<double const> samples);

}  // namespace sdepth
