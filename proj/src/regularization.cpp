#include "sdepth/regularization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sdepth/error.hpp"
#include "sdepth/parallel.hpp"

namespace sdepth {
namespace {

Matrix relu_grad_mask(Matrix const& m)
{
    return (m.array() > 0.0).cast<double>().matrix();
}

// Row k, column (k * n + i): zeta_l^k(x_i) for every block l, as an L x (o n)
// matrix, via batched reverse mode at delta = 1.
Matrix zeta_table(NetworkParams const& params, Matrix const& inputs)
{
    std::size_t const L = params.depth();
    auto const n = inputs.cols();
    auto const o = static_cast<Eigen::Index>(params.output_dim());
    double const scale = params.block_scale();
    ForwardTrace const trace = forward(params, inputs, Mask::ones(L), true);

    // Column block k carries the cotangent of output coordinate k.
    Matrix g(static_cast<Eigen::Index>(params.width()), o * n);
    for (Eigen::Index k = 0; k < o; ++k)
    {
        g.middleCols(k * n, n) = params.w_out.row(k).transpose().replicate(1, n);
    }
    Matrix table(static_cast<Eigen::Index>(L), o * n);
    for (std::size_t l = L; l >= 1; --l)
    {
        Matrix const& z = trace.z[l - 1];
        for (Eigen::Index k = 0; k < o; ++k)
        {
            table.row(static_cast<Eigen::Index>(l - 1)).segment(k * n, n) =
                (g.middleCols(k * n, n).array() * z.array()).colwise().sum();
        }
        Matrix const mask = relu_grad_mask(trace.y[l - 1]).replicate(1, o);
        Matrix const through = params.blocks[l - 1].transpose() * g;
        g += scale * mask.cwiseProduct(through);
    }
    return table;
}

}  // namespace

Vector discrepancy_zeta(NetworkParams const& params, Vector const& input, std::size_t layer)
{
    std::size_t const L = params.depth();
    SDEPTH_REQUIRE(layer >= 1 && layer <= L, out_of_range, "block index must lie in [1, L]");
    double const scale = params.block_scale();
    Matrix const x = input;
    ForwardTrace const trace = forward(params, x, Mask::ones(L), true);
    Vector tangent = trace.z[layer - 1].col(0);
    for (std::size_t k = layer + 1; k <= L; ++k)
    {
        Vector const act = relu_grad_mask(trace.y[k - 1]).col(0).cwiseProduct(tangent);
        tangent += scale * (params.blocks[k - 1] * act);
    }
    return params.w_out * tangent;
}

Matrix discrepancy_zeta_reverse(NetworkParams const& params, Vector const& input)
{
    Matrix const x = input;
    return zeta_table(params, x).transpose();
}

RegCoefficients reg_coefficients(NetworkParams const& params, Dataset const& data)
{
    data.validate();
    SDEPTH_REQUIRE(data.input_dim() == params.input_dim(), dimension_mismatch,
                   "dataset input dimension does not match the network");
    Matrix const table = zeta_table(params, data.inputs);
    RegCoefficients coeffs;
    coeffs.n_inputs = data.size();
    coeffs.shape = params.shape();
    coeffs.g.resize(params.depth());
    double const n = static_cast<double>(data.size());
    for (std::size_t l = 0; l < params.depth(); ++l)
    {
        coeffs.g[l] = 2.0 / n * table.row(static_cast<Eigen::Index>(l)).squaredNorm();
    }
    return coeffs;
}

double reg_objective(SurvivalMode const& mode, std::span<double const> g)
{
    SDEPTH_REQUIRE(mode.size() == g.size(), dimension_mismatch,
                   "mode and coefficients differ in length");
    double sum = 0.0;
    for (std::size_t l = 0; l < g.size(); ++l)
    {
        sum += mode[l] * (1.0 - mode[l]) * g[l];
    }
    return sum;
}

double penalty(SurvivalMode const& mode, std::span<double const> g)
{
    return reg_objective(mode, g) / (2.0 * static_cast<double>(g.size()));
}

MaxRegSolution max_reg_mode(std::span<double const> g, double budget)
{
    std::size_t const L = g.size();
    SDEPTH_REQUIRE(L >= 1, invalid_argument, "no coefficients");
    double const dL = static_cast<double>(L);
    SDEPTH_REQUIRE(budget >= 0.0 && budget <= dL, infeasible_budget,
                   "budget must lie in [0, L]");
    for (double v : g)
    {
        SDEPTH_REQUIRE(v >= 0.0 && std::isfinite(v), invalid_argument,
                       "coefficients must be finite and nonnegative");
    }

    double const half = 0.5 * dL;
    bool const at_half = std::fabs(budget - half) <= 1e-14 * dL;
    std::vector<double> probs(L, 0.0);
    std::vector<std::size_t> active;
    double zero_value = at_half ? 0.5 : (budget < half ? 0.0 : 1.0);
    double remaining = budget;
    for (std::size_t l = 0; l < L; ++l)
    {
        if (g[l] > 0.0)
        {
            active.push_back(l);
        }
        else
        {
            probs[l] = zero_value;
            remaining -= zero_value;
        }
    }
    double const n_active = static_cast<double>(active.size());
    if (remaining < -1e-12 || remaining > n_active + 1e-12)
    {
        throw Error(ErrorKind::zero_coefficient,
                    "zero-coefficient layers make budget " + std::to_string(budget)
                        + " unreachable");
    }
    if (active.empty())
    {
        return {make_custom(std::move(probs)), 0.0};
    }
    remaining = std::clamp(remaining, 0.0, n_active);

    auto p_of = [&](double c, double gl) { return std::clamp(0.5 - c / gl, 0.0, 1.0); };
    auto total = [&](double c) {
        double s = 0.0;
        for (auto l : active)
        {
            s += p_of(c, g[l]);
        }
        return s;
    };

    double c = 0.0;
    if (!(at_half && active.size() == L))
    {
        double const g_max = *std::max_element(g.begin(), g.end());
        double lo = -0.5 * g_max;  // total(lo) == n_active
        double hi = 0.5 * g_max;   // total(hi) == 0
        for (int iter = 0; iter < 200 && hi - lo > 1e-15 * g_max; ++iter)
        {
            double const mid = 0.5 * (lo + hi);
            (total(mid) > remaining ? lo : hi) = mid;
        }
        c = 0.5 * (lo + hi);
        // Exact solve on the unclipped set: sum_F (1/2 - c/g_l) = remaining - #ones.
        double ones = 0.0, free_count = 0.0, inv_sum = 0.0;
        for (auto l : active)
        {
            double const raw = 0.5 - c / g[l];
            if (raw >= 1.0)
            {
                ones += 1.0;
            }
            else if (raw > 0.0)
            {
                free_count += 1.0;
                inv_sum += 1.0 / g[l];
            }
        }
        if (inv_sum > 0.0)
        {
            double const exact = (0.5 * free_count + ones - remaining) / inv_sum;
            // Keep the refined value only if it does not move the active set.
            double const before = std::fabs(total(c) - remaining);
            if (std::fabs(total(exact) - remaining) <= before)
            {
                c = exact;
            }
        }
    }
    for (auto l : active)
    {
        probs[l] = p_of(c, g[l]);
    }
    return {make_custom(std::move(probs)), c};
}

LossDecomposition loss_decomposition(NetworkParams const& params, Dataset const& data,
                                     SurvivalMode const& mode, std::size_t n_mc,
                                     std::uint64_t seed, unsigned threads)
{
    data.validate();
    SDEPTH_REQUIRE(n_mc >= 1, invalid_argument, "n_mc must be >= 1");
    SDEPTH_REQUIRE(mode.size() == params.depth(), dimension_mismatch,
                   "mode length must equal depth");
    SDEPTH_REQUIRE(data.output_dim() == params.output_dim(), dimension_mismatch,
                   "target dimension does not match the network");
    std::size_t const L = params.depth();
    auto const n = static_cast<Eigen::Index>(data.size());
    double const dn = static_cast<double>(n);

    std::vector<double> draw_means(n_mc);
    parallel_for(n_mc, threads, [&](std::size_t m) {
        RngStream rng(seed, derive_stream(m, 0x10557));
        Matrix gates(static_cast<Eigen::Index>(L), n);
        for (Eigen::Index i = 0; i < n; ++i)
        {
            for (std::size_t l = 0; l < L; ++l)
            {
                gates(static_cast<Eigen::Index>(l), i) = rng.bernoulli(mode[l]) ? 1.0 : 0.0;
            }
        }
        Matrix const hidden = forward_columns(params, data.inputs, gates, L);
        draw_means[m] = quadratic_loss(params.w_out * hidden, data.targets) / dn;
    });

    LossDecomposition out;
    out.n_mc = n_mc;
    double sum = 0.0, sum_sq = 0.0;
    for (double v : draw_means)
    {
        sum += v;
        sum_sq += v * v;
    }
    double const dm = static_cast<double>(n_mc);
    out.sd_loss = sum / dm;
    out.sd_loss_se =
        n_mc > 1 ? std::sqrt(std::max(0.0, (sum_sq - dm * out.sd_loss * out.sd_loss) / (dm - 1.0))
                             / dm)
                 : 0.0;
    ForwardTrace const avg = forward_average(params, data.inputs, mode);
    out.avg_loss = quadratic_loss(avg.y_out, data.targets) / dn;
    RegCoefficients const coeffs = reg_coefficients(params, data);
    double const scale = params.block_scale();
    out.penalty = penalty(mode, coeffs.g) * static_cast<double>(L) * scale * scale;
    out.ratio_unpenalized = std::fabs((out.sd_loss - out.avg_loss) / out.sd_loss);
    out.ratio_penalized = std::fabs((out.sd_loss - out.avg_loss - out.penalty) / out.sd_loss);
    return out;
}

}  // namespace sdepth
