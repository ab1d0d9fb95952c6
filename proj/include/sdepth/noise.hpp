#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sdepth/modes.hpp"
#include "sdepth/network.hpp"

namespace sdepth {

enum class WeightTensor
{
    input,
    block,
    output
};

/// One scalar weight: W_in(row, col), W_block(row, col) or W_out(row, col).
struct WeightCoord
{
    WeightTensor tensor = WeightTensor::block;
    std::size_t block = 1;  //!< 1-based, used for WeightTensor::block
    std::size_t row = 0;
    std::size_t col = 0;
};

/// Samples of one scalar site across independent masks.
struct NoiseSamples
{
    std::vector<double> values;
    std::size_t layer = 0;   //!< preactivation site; 0 for gradient samples
    std::size_t neuron = 0;
    WeightCoord weight;      //!< gradient site
    bool gradient = false;

    std::size_t size() const { return values.size(); }
    double mean() const;
    double variance() const;  //!< unbiased
};

/// y_layer^neuron(x; delta) over n masks drawn from `mode`.
///
/// With `linearized` the first-order surrogate
/// y_layer(x; p) + s sum_{k <= layer} (delta_k - p_k) mu_k
/// is recorded instead, mu from `lindeberg_mu`.
NoiseSamples sample_preactivation(NetworkParams const& params, Vector const& x,
                                  std::size_t layer, std::size_t neuron,
                                  SurvivalMode const& mode, std::size_t n, std::uint64_t seed,
                                  bool linearized = false, unsigned threads = 1);

/// d loss / d w for the quadratic loss at (x, target) over n masks.
NoiseSamples sample_gradient_noise(NetworkParams const& params, Vector const& x,
                                   Vector const& target, WeightCoord const& coord,
                                   SurvivalMode const& mode, std::size_t n, std::uint64_t seed,
                                   unsigned threads = 1);

/// mu_k = <z_k, d y_layer^neuron / d y_k> at delta = 1 for k = 1..layer, from
/// one forward pass and one reverse sweep started at the chosen neuron.
std::vector<double> lindeberg_mu(NetworkParams const& params, Vector const& x,
                                 std::size_t layer, std::size_t neuron);

/// max_k mu_k^2 / sum_k mu_k^2. AllZeroDiscrepancy when the sum vanishes.
double lindeberg_ratio(std::span<double const> mu);
double lindeberg_ratio(NetworkParams const& params, Vector const& x, std::size_t layer,
                       std::size_t neuron);

struct LindebergPoint
{
    std::size_t depth = 0;
    double mean_ratio = 0;
    double se_ratio = 0;
    std::vector<double> ratios;  //!< one per seed
};

/// Ratio at the last layer for each depth, He init, averaged over seeds. The
/// input is a fixed standard normal vector and the neuron index 0.
std::vector<LindebergPoint> lindeberg_profile(std::span<std::size_t const> depths,
                                              std::size_t width, std::size_t input_dim,
                                              Architecture arch, std::size_t n_seeds,
                                              std::uint64_t seed, unsigned threads = 1);

}  // namespace sdepth
