#include "sdepth/modes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <charconv>
#include <string>

#include "sdepth/error.hpp"

namespace sdepth {

std::string_view to_string(ModeKind kind)
{
    switch (kind)
    {
        case ModeKind::uniform: return "uniform";
        case ModeKind::linear: return "linear";
        case ModeKind::sense: return "sense";
        case ModeKind::custom: return "custom";
    }
    return "custom";
}

SurvivalMode::SurvivalMode(std::vector<double> probs, ModeKind kind)
    : probs_(std::move(probs)), kind_(kind)
{
    SDEPTH_REQUIRE(!probs_.empty(), invalid_argument, "mode needs at least one block");
    for (double p : probs_)
    {
        SDEPTH_REQUIRE(p >= 0.0 && p <= 1.0, invalid_argument,
                       "survival probability outside [0, 1]: " + std::to_string(p));
    }
}

double SurvivalMode::budget() const
{
    return std::accumulate(probs_.begin(), probs_.end(), 0.0);
}

double SurvivalMode::variance() const
{
    double v = 0.0;
    for (double p : probs_)
    {
        v += p * (1.0 - p);
    }
    return v;
}

Mask::Mask(std::vector<unsigned char> bits) : bits_(std::move(bits))
{
    for (auto& b : bits_)
    {
        b = b ? 1 : 0;
    }
}

Mask Mask::ones(std::size_t L)
{
    return Mask(std::vector<unsigned char>(L, 1));
}

Mask Mask::zeros(std::size_t L)
{
    return Mask(std::vector<unsigned char>(L, 0));
}

std::size_t Mask::realized_depth() const
{
    return std::accumulate(bits_.begin(), bits_.end(), std::size_t{0});
}

SurvivalMode make_uniform(std::size_t L, double p)
{
    SDEPTH_REQUIRE(L >= 1, invalid_argument, "L must be >= 1");
    SDEPTH_REQUIRE(p >= 0.0 && p <= 1.0, invalid_argument, "p outside [0, 1]");
    return SurvivalMode(std::vector<double>(L, p), ModeKind::uniform);
}

SurvivalMode make_linear(std::size_t L, double p_last)
{
    SDEPTH_REQUIRE(L >= 1, invalid_argument, "L must be >= 1");
    SDEPTH_REQUIRE(p_last >= 0.0 && p_last <= 1.0, invalid_argument, "p_L outside [0, 1]");
    std::vector<double> probs(L);
    double const drop = 1.0 - p_last;
    for (std::size_t l = 1; l <= L; ++l)
    {
        probs[l - 1] = 1.0 - (static_cast<double>(l) / static_cast<double>(L)) * drop;
    }
    probs[L - 1] = p_last;
    return SurvivalMode(std::move(probs), ModeKind::linear);
}

double linear_budget_floor(std::size_t L)
{
    return 0.5 * (static_cast<double>(L) - 1.0);
}

SurvivalMode make_linear_for_budget(std::size_t L, double budget)
{
    SDEPTH_REQUIRE(L >= 1, invalid_argument, "L must be >= 1");
    double const dL = static_cast<double>(L);
    // sum_l p_l = L - (1 - p_L)(L + 1) / 2
    double const floor = linear_budget_floor(L);
    if (!(budget >= floor - 1e-12) || budget > dL + 1e-12)
    {
        throw Error(ErrorKind::infeasible_budget,
                    "linear mode cannot reach budget " + std::to_string(budget)
                        + " (feasible range [" + std::to_string(floor) + ", "
                        + std::to_string(dL) + "])");
    }
    double p_last = 1.0 - 2.0 * (dL - budget) / (dL + 1.0);
    p_last = std::clamp(p_last, 0.0, 1.0);
    return make_linear(L, p_last);
}

SurvivalMode make_custom(std::vector<double> probs)
{
    return SurvivalMode(std::move(probs), ModeKind::custom);
}

Mask sample_mask(SurvivalMode const& mode, RngStream& rng)
{
    std::vector<unsigned char> bits(mode.size());
    for (std::size_t l = 0; l < mode.size(); ++l)
    {
        bits[l] = rng.bernoulli(mode[l]) ? 1 : 0;
    }
    return Mask(std::move(bits));
}

double bennett_u(double t)
{
    SDEPTH_REQUIRE(t >= 0.0, invalid_argument, "bennett_u needs t >= 0");
    if (t < 1e-3)
    {
        // Alternating series sum_{k>=2} (-1)^k t^k / (k (k - 1)).
        double term = t * t;
        double sum = 0.0;
        for (int k = 2; k < 12; ++k)
        {
            sum += ((k % 2 == 0) ? 1.0 : -1.0) * term / (k * (k - 1.0));
            term *= t;
        }
        return sum;
    }
    return (1.0 + t) * std::log1p(t) - t;
}

double bennett_u_inv(double y)
{
    SDEPTH_REQUIRE(y >= 0.0 && std::isfinite(y), invalid_argument,
                   "bennett_u_inv needs finite y >= 0");
    if (y == 0.0)
    {
        return 0.0;
    }
    double hi = 1.0;
    while (bennett_u(hi) < y)
    {
        hi *= 2.0;
    }
    // Newton from the right of the root: u is convex and increasing, so
    // iterates decrease monotonically towards the root.
    double t = hi;
    for (int iter = 0; iter < 200; ++iter)
    {
        // Stop on the step, not the residual: near 0 u(t) ~ t^2 / 2, so an
        // absolute residual test leaves t far off.
        double const step = (bennett_u(t) - y) / std::log1p(t);
        double const next = t - step;
        if (!(next > 0.0) || next >= t)
        {
            break;
        }
        t = next;
        if (step <= 1e-15 * t)
        {
            break;
        }
    }
    return t;
}

double depth_deviation_bound(SurvivalMode const& mode, double beta, bool strict)
{
    SDEPTH_REQUIRE(beta > 0.0 && beta < 1.0, invalid_argument, "beta must lie in (0, 1)");
    double const v = mode.variance();
    if (v <= 0.0)
    {
        SDEPTH_REQUIRE(!strict, degenerate_mode, "zero-variance mode has deterministic depth");
        return 0.0;
    }
    return v * bennett_u_inv(std::log(2.0 / beta) / v);
}

namespace {

double parse_number(std::string_view text)
{
    double value = 0.0;
    auto const* end = text.data() + text.size();
    auto const [ptr, ec] = std::from_chars(text.data(), end, value);
    SDEPTH_REQUIRE(ec == std::errc() && ptr == end, invalid_argument,
                   "not a number: '" + std::string(text) + "'");
    return value;
}

}  // namespace

SurvivalMode parse_mode_spec(std::string_view spec, std::size_t L)
{
    auto const colon = spec.find(':');
    SDEPTH_REQUIRE(colon != std::string_view::npos, invalid_argument,
                   "mode spec needs 'kind:value', got '" + std::string(spec) + "'");
    std::string_view const kind = spec.substr(0, colon);
    std::string_view const arg = spec.substr(colon + 1);
    if (kind == "uniform")
    {
        return make_uniform(L, parse_number(arg));
    }
    if (kind == "linear")
    {
        return make_linear(L, parse_number(arg));
    }
    if (kind == "budget-uniform")
    {
        double const budget = parse_number(arg);
        SDEPTH_REQUIRE(budget >= 0.0 && budget <= static_cast<double>(L), infeasible_budget,
                       "budget must lie in [0, L]");
        return make_uniform(L, budget / static_cast<double>(L));
    }
    if (kind == "budget-linear")
    {
        return make_linear_for_budget(L, parse_number(arg));
    }
    if (kind == "custom")
    {
        std::vector<double> probs;
        std::size_t start = 0;
        while (start <= arg.size())
        {
            auto const comma = std::min(arg.find(',', start), arg.size());
            probs.push_back(parse_number(arg.substr(start, comma - start)));
            start = comma + 1;
        }
        SDEPTH_REQUIRE(probs.size() == L, dimension_mismatch,
                       "custom mode has " + std::to_string(probs.size()) + " entries, depth is "
                           + std::to_string(L));
        return make_custom(std::move(probs));
    }
    throw Error(ErrorKind::invalid_argument, "unknown mode kind '" + std::string(kind) + "'");
}

}  // namespace sdepth
