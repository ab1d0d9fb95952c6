#include "sdepth/noise.hpp"

#include <algorithm>
#include <cmath>

#include "sdepth/error.hpp"
#include "sdepth/parallel.hpp"
#include "sdepth/rng.hpp"

namespace sdepth {
namespace {

constexpr std::size_t kChunk = 128;  // masks per batched pass; fixed so streams do not depend on threads

Matrix relu(Matrix const& m)
{
    return m.cwiseMax(0.0);
}

Matrix relu_grad(Matrix const& m)
{
    return (m.array() > 0.0).cast<double>().matrix();
}

Matrix draw_gates(SurvivalMode const& mode, std::size_t cols, RngStream& rng)
{
    Matrix gates(static_cast<Eigen::Index>(mode.size()), static_cast<Eigen::Index>(cols));
    for (Eigen::Index c = 0; c < gates.cols(); ++c)
    {
        for (std::size_t l = 0; l < mode.size(); ++l)
        {
            gates(static_cast<Eigen::Index>(l), c) = rng.bernoulli(mode[l]) ? 1.0 : 0.0;
        }
    }
    return gates;
}

void check_common(NetworkParams const& params, Vector const& x, SurvivalMode const& mode,
                  std::size_t n)
{
    SDEPTH_REQUIRE(static_cast<std::size_t>(x.size()) == params.input_dim(), dimension_mismatch,
                   "input dimension mismatch");
    SDEPTH_REQUIRE(mode.size() == params.depth(), dimension_mismatch,
                   "mode length must equal depth");
    SDEPTH_REQUIRE(n >= 3, invalid_argument, "need at least 3 samples");
}

template<class Body>
std::vector<double> sample_chunks(std::size_t n, std::uint64_t seed, std::uint64_t tag,
                                  unsigned threads, Body&& body)
{
    std::vector<double> values(n);
    std::size_t const chunks = (n + kChunk - 1) / kChunk;
    parallel_for(chunks, threads, [&](std::size_t c) {
        std::size_t const begin = c * kChunk;
        std::size_t const count = std::min(kChunk, n - begin);
        RngStream rng(seed, derive_stream({tag, c}));
        body(rng, count, values.data() + begin);
    });
    return values;
}

}  // namespace

double NoiseSamples::mean() const
{
    double s = 0.0;
    for (double v : values)
    {
        s += v;
    }
    return values.empty() ? 0.0 : s / static_cast<double>(values.size());
}

double NoiseSamples::variance() const
{
    if (values.size() < 2)
    {
        return 0.0;
    }
    double const m = mean();
    double s = 0.0;
    for (double v : values)
    {
        s += (v - m) * (v - m);
    }
    return s / static_cast<double>(values.size() - 1);
}

std::vector<double> lindeberg_mu(NetworkParams const& params, Vector const& x, std::size_t layer,
                                 std::size_t neuron)
{
    SDEPTH_REQUIRE(layer >= 1 && layer <= params.depth(), out_of_range,
                   "layer must lie in [1, L]");
    SDEPTH_REQUIRE(neuron < params.width(), out_of_range, "neuron index beyond width");
    SDEPTH_REQUIRE(static_cast<std::size_t>(x.size()) == params.input_dim(), dimension_mismatch,
                   "input dimension mismatch");
    double const scale = params.block_scale();
    Matrix const input = x;
    ForwardTrace const trace = forward(params, input, Mask::ones(params.depth()), true);
    Vector g = Vector::Zero(static_cast<Eigen::Index>(params.width()));
    g(static_cast<Eigen::Index>(neuron)) = 1.0;
    std::vector<double> mu(layer);
    for (std::size_t k = layer; k >= 1; --k)
    {
        mu[k - 1] = trace.z[k - 1].col(0).dot(g);
        Vector const through = params.blocks[k - 1].transpose() * g;
        g += scale * relu_grad(trace.y[k - 1]).col(0).cwiseProduct(through);
    }
    return mu;
}

double lindeberg_ratio(std::span<double const> mu)
{
    double total = 0.0, peak = 0.0;
    for (double m : mu)
    {
        total += m * m;
        peak = std::max(peak, m * m);
    }
    SDEPTH_REQUIRE(total > 0.0, all_zero_discrepancy, "all discrepancies are zero");
    return peak / total;
}

double lindeberg_ratio(NetworkParams const& params, Vector const& x, std::size_t layer,
                       std::size_t neuron)
{
    return lindeberg_ratio(lindeberg_mu(params, x, layer, neuron));
}

NoiseSamples sample_preactivation(NetworkParams const& params, Vector const& x,
                                  std::size_t layer, std::size_t neuron,
                                  SurvivalMode const& mode, std::size_t n, std::uint64_t seed,
                                  bool linearized, unsigned threads)
{
    check_common(params, x, mode, n);
    SDEPTH_REQUIRE(layer <= params.depth(), out_of_range, "layer beyond depth");
    SDEPTH_REQUIRE(neuron < params.width(), out_of_range, "neuron index beyond width");
    auto const i = static_cast<Eigen::Index>(neuron);

    NoiseSamples out;
    out.layer = layer;
    out.neuron = neuron;
    if (linearized && layer >= 1)
    {
        std::vector<double> const mu = lindeberg_mu(params, x, layer, neuron);
        double const scale = params.block_scale();
        Matrix const input = x;
        double const centre = forward_columns(params, input,
                                              Matrix(Eigen::Map<Vector const>(
                                                  mode.probs().data(),
                                                  static_cast<Eigen::Index>(mode.size()))),
                                              layer)(i, 0);
        out.values = sample_chunks(n, seed, 0x9a11, threads,
                                   [&](RngStream& rng, std::size_t count, double* dst) {
            Matrix const gates = draw_gates(mode, count, rng);
            for (std::size_t c = 0; c < count; ++c)
            {
                double v = centre;
                for (std::size_t k = 0; k < layer; ++k)
                {
                    v += scale * (gates(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c))
                                  - mode[k]) * mu[k];
                }
                dst[c] = v;
            }
        });
        return out;
    }
    out.values = sample_chunks(n, seed, 0x9a11, threads,
                               [&](RngStream& rng, std::size_t count, double* dst) {
        Matrix const gates = draw_gates(mode, count, rng);
        Matrix const inputs = x.replicate(1, static_cast<Eigen::Index>(count));
        Matrix const y = forward_columns(params, inputs, gates, layer);
        for (std::size_t c = 0; c < count; ++c)
        {
            dst[c] = y(i, static_cast<Eigen::Index>(c));
        }
    });
    return out;
}

NoiseSamples sample_gradient_noise(NetworkParams const& params, Vector const& x,
                                   Vector const& target, WeightCoord const& coord,
                                   SurvivalMode const& mode, std::size_t n, std::uint64_t seed,
                                   unsigned threads)
{
    check_common(params, x, mode, n);
    SDEPTH_REQUIRE(static_cast<std::size_t>(target.size()) == params.output_dim(),
                   dimension_mismatch, "target dimension mismatch");
    std::size_t const L = params.depth();
    Matrix const* tensor = nullptr;
    switch (coord.tensor)
    {
    case WeightTensor::input: tensor = &params.w_in; break;
    case WeightTensor::output: tensor = &params.w_out; break;
    case WeightTensor::block:
        SDEPTH_REQUIRE(coord.block >= 1 && coord.block <= L, out_of_range,
                       "block index must lie in [1, L]");
        tensor = &params.blocks[coord.block - 1];
        break;
    }
    SDEPTH_REQUIRE(coord.row < static_cast<std::size_t>(tensor->rows())
                       && coord.col < static_cast<std::size_t>(tensor->cols()),
                   out_of_range, "weight coordinate out of range");
    auto const r = static_cast<Eigen::Index>(coord.row);
    auto const col = static_cast<Eigen::Index>(coord.col);
    double const scale = params.block_scale();
    // Backward only needs to reach the layer that owns the weight.
    std::size_t const stop = coord.tensor == WeightTensor::output ? L
                             : coord.tensor == WeightTensor::block ? coord.block
                                                                   : 0;

    NoiseSamples out;
    out.gradient = true;
    out.weight = coord;
    out.values = sample_chunks(n, seed, 0x96ad, threads,
                               [&](RngStream& rng, std::size_t count, double* dst) {
        auto const b = static_cast<Eigen::Index>(count);
        Matrix const gates = draw_gates(mode, count, rng);
        std::vector<Matrix> y(L + 1);
        y[0] = params.w_in * x.replicate(1, b);
        for (std::size_t l = 1; l <= L; ++l)
        {
            Matrix const branch = params.blocks[l - 1] * relu(y[l - 1]);
            y[l] = y[l - 1]
                   + scale * (branch * gates.row(static_cast<Eigen::Index>(l - 1)).asDiagonal());
        }
        Matrix const d_out = 2.0 * ((params.w_out * y[L]).colwise() - target);
        if (coord.tensor == WeightTensor::output)
        {
            for (Eigen::Index c = 0; c < b; ++c)
            {
                dst[c] = d_out(r, c) * y[L](col, c);
            }
            return;
        }
        Matrix dy = params.w_out.transpose() * d_out;
        for (std::size_t l = L; l > stop; --l)
        {
            Matrix const through = params.blocks[l - 1].transpose() * dy;
            Matrix const gated = relu_grad(y[l - 1]).cwiseProduct(through)
                                 * gates.row(static_cast<Eigen::Index>(l - 1)).asDiagonal();
            dy += scale * gated;
        }
        for (Eigen::Index c = 0; c < b; ++c)
        {
            if (coord.tensor == WeightTensor::input)
            {
                dst[c] = dy(r, c) * x(col);
            }
            else
            {
                double const gate = gates(static_cast<Eigen::Index>(coord.block - 1), c);
                double const act = std::max(0.0, y[coord.block - 1](col, c));
                dst[c] = scale * gate * dy(r, c) * act;
            }
        }
    });
    return out;
}

std::vector<LindebergPoint> lindeberg_profile(std::span<std::size_t const> depths,
                                              std::size_t width, std::size_t input_dim,
                                              Architecture arch, std::size_t n_seeds,
                                              std::uint64_t seed, unsigned threads)
{
    SDEPTH_REQUIRE(n_seeds >= 1, invalid_argument, "need at least one seed");
    RngStream x_rng(seed, derive_stream({0x11d, 0}));
    Vector x(static_cast<Eigen::Index>(input_dim));
    x_rng.fill_normal(x.data(), input_dim, 1.0);

    std::vector<LindebergPoint> points;
    for (std::size_t depth : depths)
    {
        LindebergPoint point;
        point.depth = depth;
        point.ratios.resize(n_seeds);
        NetworkShape const shape{depth, width, input_dim, 1};
        parallel_for(n_seeds, threads, [&](std::size_t s) {
            NetworkParams const params = init_he(shape, arch, seed, derive_stream({0x11d, depth, s}));
            point.ratios[s] = lindeberg_ratio(params, x, depth, 0);
        });
        double sum = 0.0, sum_sq = 0.0;
        for (double v : point.ratios)
        {
            sum += v;
            sum_sq += v * v;
        }
        double const k = static_cast<double>(n_seeds);
        point.mean_ratio = sum / k;
        point.se_ratio = n_seeds > 1
                             ? std::sqrt(std::max(0.0, (sum_sq - k * point.mean_ratio * point.mean_ratio)
                                                           / (k - 1.0)) / k)
                             : 0.0;
        points.push_back(std::move(point));
    }
    return points;
}

}  // namespace sdepth
