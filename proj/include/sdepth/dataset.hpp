#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>

#include "sdepth/network.hpp"

namespace sdepth {

/// Supervised data stored column-wise: inputs d x n, targets o x n.
struct Dataset
{
    Matrix inputs;
    Matrix targets;
    Vector beta;            //!< generator direction for the toy task (empty otherwise)
    std::uint64_t seed = 0;

    std::size_t size() const { return static_cast<std::size_t>(inputs.cols()); }
    std::size_t input_dim() const { return static_cast<std::size_t>(inputs.rows()); }
    std::size_t output_dim() const { return static_cast<std::size_t>(targets.rows()); }

    void validate() const;
};

/// Toy regression task t = sin(beta^T x), with x and beta standard normal.
Dataset toy_dataset(std::size_t n, std::size_t d, std::uint64_t seed);

/// First `train_fraction` of the columns for training, the rest for test.
std::pair<Dataset, Dataset> split(Dataset const& data, double train_fraction);

/// Fixed probe input for initialization experiments: a standard normal
/// draw rescaled to ||x||^2 = d, so that Q_0(x, x) = 2.
Vector probe_input(std::size_t d, std::uint64_t seed);

/// Fixed standard normal regression target of length o.
Vector probe_target(std::size_t o, std::uint64_t seed);

/// Columns [begin, end).
Dataset slice(Dataset const& data, std::size_t begin, std::size_t end);

}  // namespace sdepth
