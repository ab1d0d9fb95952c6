#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sdepth/modes.hpp"
#include "sdepth/network.hpp"

namespace sdepth {

/// Infinite-width architecture variant; `with_sd = false` ignores the mode.
struct KernelVariant
{
    Architecture arch = Architecture::standard;
    bool with_sd = true;
};

/// Second moments of two inputs at one layer.
struct KernelState
{
    std::size_t layer = 0;
    double q_xx = 0;
    double q_yy = 0;
    double q_xy = 0;
    double c = 0;  //!< q_xy / sqrt(q_xx q_yy)
};

/// ReLU correlation map f(g) = (sqrt(1 - g^2) + g asin g) / pi + g / 2.
///
/// Inputs within 1e-12 of [-1, 1] are clamped; anything further out is a
/// domain error.
double correlation_f(double gamma);

/// Coefficient in front of the branch term: 1, p_l, 1/L or p_l / L.
double branch_coefficient(KernelVariant variant, double p_l, std::size_t L);

KernelState kernel_step(KernelState const& state, double p_l, KernelVariant variant,
                        std::size_t L);

/// Q_0 = 2 <x, x'> / d followed by L recursion steps; returns L + 1 states.
std::vector<KernelState> kernel_forward(std::span<double const> x, std::span<double const> xp,
                                        SurvivalMode const& mode, KernelVariant variant);

/// Closed-form Q_l(x, x) for layer l given Q_0(x, x) = q0.
double diagonal_closed_form(KernelVariant variant, SurvivalMode const& mode, std::size_t l,
                            double q0);

/// Closed-form gradient growth E ||dy_l||^2 / ||dy_L||^2.
double theoretical_grad_growth(KernelVariant variant, SurvivalMode const& mode, std::size_t l);

/// Per-layer geometric-mean rate of `theoretical_grad_growth` (l < L).
double theoretical_grad_rate(KernelVariant variant, SurvivalMode const& mode, std::size_t l);

}  // namespace sdepth
