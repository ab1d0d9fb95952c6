#include "sdepth/sensemode.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sdepth/error.hpp"
#include "sdepth/parallel.hpp"

namespace sdepth {

std::string_view to_string(SensitivityMethod method)
{
    return method == SensitivityMethod::gradient ? "gradient" : "leave-one-out";
}

SensitivityMethod parse_sensitivity_method(std::string_view text)
{
    if (text == "gradient")
    {
        return SensitivityMethod::gradient;
    }
    if (text == "leave-one-out" || text == "loo")
    {
        return SensitivityMethod::leave_one_out;
    }
    throw Error(ErrorKind::invalid_argument, "unknown sensitivity method: " + std::string(text));
}

std::string_view to_string(SenseMap map)
{
    return map == SenseMap::proportional ? "proportional" : "affine";
}

SenseMap parse_sense_map(std::string_view text)
{
    if (text == "proportional")
    {
        return SenseMap::proportional;
    }
    if (text == "affine")
    {
        return SenseMap::affine;
    }
    throw Error(ErrorKind::invalid_argument, "unknown sense map: " + std::string(text));
}

Sensitivities sensitivities(NetworkParams const& params, Dataset const& data,
                            SensitivityMethod method, unsigned threads)
{
    data.validate();
    SDEPTH_REQUIRE(data.input_dim() == params.input_dim()
                       && data.output_dim() == params.output_dim(),
                   dimension_mismatch, "dataset does not match the network");
    std::size_t const L = params.depth();
    double const n = static_cast<double>(data.size());
    Sensitivities out;
    out.n_inputs = data.size();
    out.seed = data.seed;
    out.method = method;
    out.s.resize(L);

    if (method == SensitivityMethod::gradient)
    {
        ForwardTrace const trace = forward(params, data.inputs, Mask::ones(L), true);
        BackwardTrace const grads = backward(params, trace, data.targets, false);
        for (std::size_t l = 0; l < L; ++l)
        {
            out.s[l] = grads.d_gate(static_cast<Eigen::Index>(l)) / n;
        }
    }
    else
    {
        double const full =
            quadratic_loss(forward(params, data.inputs, Mask::ones(L), false).y_out, data.targets)
            / n;
        parallel_for(L, threads, [&](std::size_t l) {
            std::vector<unsigned char> bits(L, 1);
            bits[l] = 0;
            double const dropped =
                quadratic_loss(forward(params, data.inputs, Mask(std::move(bits)), false).y_out,
                               data.targets)
                / n;
            out.s[l] = full - dropped;
        });
    }
    out.abs_s.resize(L);
    std::transform(out.s.begin(), out.s.end(), out.abs_s.begin(),
                   [](double v) { return std::fabs(v); });
    return out;
}

SurvivalMode sensemode(Sensitivities const& s, double budget, double p_min, SenseMap map)
{
    std::size_t const L = s.abs_s.size();
    SDEPTH_REQUIRE(L >= 1, invalid_argument, "no sensitivities");
    SDEPTH_REQUIRE(p_min >= 0.0 && p_min < 1.0, invalid_argument, "p_min must lie in [0, 1)");
    double const dL = static_cast<double>(L);
    double const tol = 1e-12 * dL;
    SDEPTH_REQUIRE(budget >= dL * p_min - tol && budget <= dL + tol, infeasible_budget,
                   "budget " + std::to_string(budget) + " outside [L p_min, L]");
    budget = std::clamp(budget, dL * p_min, dL);
    for (double v : s.abs_s)
    {
        SDEPTH_REQUIRE(std::isfinite(v), invalid_argument, "sensitivities must be finite");
    }

    // Both maps are p_l = clip(p_min + c w_l, p_min, 1) for a nonnegative weight w_l.
    double const lo_s = *std::min_element(s.abs_s.begin(), s.abs_s.end());
    double const hi_s = *std::max_element(s.abs_s.begin(), s.abs_s.end());
    if (hi_s <= 0.0 || (map == SenseMap::affine && hi_s - lo_s <= 1e-15 * hi_s))
    {
        return make_uniform(L, budget / dL);
    }
    std::vector<double> w(L);
    std::vector<double> base(L, p_min);
    for (std::size_t l = 0; l < L; ++l)
    {
        if (map == SenseMap::proportional)
        {
            // c |S| clipped below at p_min: same family with offset absorbed.
            w[l] = s.abs_s[l] / hi_s;
            base[l] = 0.0;
        }
        else
        {
            w[l] = (s.abs_s[l] - lo_s) / (hi_s - lo_s);
        }
    }
    auto p_of = [&](double c, std::size_t l) {
        return std::clamp(base[l] + c * w[l], p_min, 1.0);
    };
    auto total = [&](double c) {
        double t = 0.0;
        for (std::size_t l = 0; l < L; ++l)
        {
            t += p_of(c, l);
        }
        return t;
    };

    std::size_t zero_count = 0;
    for (double v : w)
    {
        zero_count += v <= 0.0 ? 1 : 0;
    }
    double const reachable = static_cast<double>(L - zero_count) + p_min * static_cast<double>(zero_count);
    std::vector<double> probs(L);
    if (budget >= reachable)
    {
        // Every weighted layer saturates; the rest share what is left.
        double const share = zero_count > 0
                                 ? (budget - static_cast<double>(L - zero_count))
                                       / static_cast<double>(zero_count)
                                 : 1.0;
        for (std::size_t l = 0; l < L; ++l)
        {
            probs[l] = w[l] > 0.0 ? 1.0 : std::clamp(share, p_min, 1.0);
        }
        return SurvivalMode(std::move(probs), ModeKind::sense);
    }

    double lo = 0.0, hi = 1.0;
    while (total(hi) < budget)
    {
        hi *= 2.0;
    }
    for (int iter = 0; iter < 200 && hi - lo > 1e-15 * hi; ++iter)
    {
        double const mid = 0.5 * (lo + hi);
        (total(mid) < budget ? lo : hi) = mid;
    }
    double c = 0.5 * (lo + hi);
    // Exact solve over the unclipped set.
    double fixed = 0.0, base_sum = 0.0, w_sum = 0.0;
    for (std::size_t l = 0; l < L; ++l)
    {
        double const raw = base[l] + c * w[l];
        if (raw <= p_min || w[l] <= 0.0)
        {
            fixed += p_min;
        }
        else if (raw >= 1.0)
        {
            fixed += 1.0;
        }
        else
        {
            base_sum += base[l];
            w_sum += w[l];
        }
    }
    if (w_sum > 0.0)
    {
        double const exact = (budget - fixed - base_sum) / w_sum;
        if (std::fabs(total(exact) - budget) <= std::fabs(total(c) - budget))
        {
            c = exact;
        }
    }
    for (std::size_t l = 0; l < L; ++l)
    {
        probs[l] = p_of(c, l);
    }
    return SurvivalMode(std::move(probs), ModeKind::sense);
}

}  // namespace sdepth
