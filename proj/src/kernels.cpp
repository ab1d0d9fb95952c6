#include "sdepth/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "sdepth/error.hpp"

namespace sdepth {

double correlation_f(double gamma)
{
    constexpr double tol = 1e-12;
    SDEPTH_REQUIRE(gamma >= -1.0 - tol && gamma <= 1.0 + tol, invalid_argument,
                   "correlation outside [-1, 1]: " + std::to_string(gamma));
    double const g = std::clamp(gamma, -1.0, 1.0);
    return (std::sqrt(std::max(0.0, 1.0 - g * g)) + g * std::asin(g)) / std::numbers::pi
           + 0.5 * g;
}

double branch_coefficient(KernelVariant variant, double p_l, std::size_t L)
{
    double const keep = variant.with_sd ? p_l : 1.0;
    return variant.arch == Architecture::standard ? keep : keep / static_cast<double>(L);
}

KernelState kernel_step(KernelState const& state, double p_l, KernelVariant variant,
                        std::size_t L)
{
    double const coeff = branch_coefficient(variant, p_l, L);
    double const norm = std::sqrt(state.q_xx * state.q_yy);
    KernelState next;
    next.layer = state.layer + 1;
    // f(1) = 1 on the diagonal.
    next.q_xx = state.q_xx * (1.0 + coeff);
    next.q_yy = state.q_yy * (1.0 + coeff);
    // Q_xy * f(C) / C rewritten through Q_xy = C sqrt(q_xx q_yy).
    next.q_xy = state.q_xy + coeff * correlation_f(state.c) * norm;
    next.c = std::clamp(next.q_xy / std::sqrt(next.q_xx * next.q_yy), -1.0, 1.0);
    return next;
}

std::vector<KernelState> kernel_forward(std::span<double const> x, std::span<double const> xp,
                                        SurvivalMode const& mode, KernelVariant variant)
{
    SDEPTH_REQUIRE(x.size() == xp.size() && !x.empty(), dimension_mismatch,
                   "kernel inputs must have equal nonzero length");
    double xx = 0.0, yy = 0.0, xy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        xx += x[i] * x[i];
        yy += xp[i] * xp[i];
        xy += x[i] * xp[i];
    }
    SDEPTH_REQUIRE(xx > 0.0 && yy > 0.0, degenerate_input, "zero-norm input");
    double const d = static_cast<double>(x.size());
    std::size_t const L = mode.size();

    std::vector<KernelState> states;
    states.reserve(L + 1);
    KernelState s0;
    s0.q_xx = 2.0 * xx / d;
    s0.q_yy = 2.0 * yy / d;
    s0.q_xy = 2.0 * xy / d;
    s0.c = std::clamp(s0.q_xy / std::sqrt(s0.q_xx * s0.q_yy), -1.0, 1.0);
    states.push_back(s0);
    for (std::size_t l = 1; l <= L; ++l)
    {
        states.push_back(kernel_step(states.back(), mode[l - 1], variant, L));
    }
    return states;
}

double diagonal_closed_form(KernelVariant variant, SurvivalMode const& mode, std::size_t l,
                            double q0)
{
    std::size_t const L = mode.size();
    SDEPTH_REQUIRE(l <= L, out_of_range, "layer beyond depth");
    double const dl = static_cast<double>(l);
    if (!variant.with_sd)
    {
        return variant.arch == Architecture::standard
                   ? std::pow(2.0, dl) * q0
                   : std::pow(1.0 + 1.0 / static_cast<double>(L), dl) * q0;
    }
    double prod = 1.0;
    for (std::size_t k = 1; k <= l; ++k)
    {
        prod *= 1.0 + branch_coefficient(variant, mode[k - 1], L);
    }
    return prod * q0;
}

double theoretical_grad_growth(KernelVariant variant, SurvivalMode const& mode, std::size_t l)
{
    std::size_t const L = mode.size();
    SDEPTH_REQUIRE(l <= L, out_of_range, "layer beyond depth");
    double const steps = static_cast<double>(L - l);
    if (!variant.with_sd)
    {
        return variant.arch == Architecture::standard
                   ? std::pow(2.0, steps)
                   : std::pow(1.0 + 1.0 / static_cast<double>(L), steps);
    }
    double prod = 1.0;
    for (std::size_t k = l + 1; k <= L; ++k)
    {
        prod *= 1.0 + branch_coefficient(variant, mode[k - 1], L);
    }
    return prod;
}

double theoretical_grad_rate(KernelVariant variant, SurvivalMode const& mode, std::size_t l)
{
    std::size_t const L = mode.size();
    SDEPTH_REQUIRE(l < L, out_of_range, "rate undefined at l = L");
    double log_sum = 0.0;
    for (std::size_t k = l + 1; k <= L; ++k)
    {
        double const p = variant.with_sd ? mode[k - 1] : 1.0;
        log_sum += std::log1p(branch_coefficient({variant.arch, true}, p, L));
    }
    return std::exp(log_sum / static_cast<double>(L - l));
}

}  // namespace sdepth
