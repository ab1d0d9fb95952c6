#include "sdepth/dataset.hpp"

#include <cmath>

#include "sdepth/error.hpp"
#include "sdepth/rng.hpp"

namespace sdepth {

void Dataset::validate() const
{
    SDEPTH_REQUIRE(inputs.cols() >= 1, invalid_argument, "dataset is empty");
    SDEPTH_REQUIRE(inputs.cols() == targets.cols(), dimension_mismatch,
                   "inputs and targets disagree on the sample count");
}

Dataset toy_dataset(std::size_t n, std::size_t d, std::uint64_t seed)
{
    SDEPTH_REQUIRE(n >= 1 && d >= 1, invalid_argument, "toy dataset needs n, d >= 1");
    Dataset data;
    data.seed = seed;
    data.beta.resize(static_cast<Eigen::Index>(d));
    data.inputs.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n));
    RngStream beta_rng(seed, derive_stream({0x746f79, 0}));
    beta_rng.fill_normal(data.beta.data(), d, 1.0);
    RngStream x_rng(seed, derive_stream({0x746f79, 1}));
    x_rng.fill_normal(data.inputs.data(), n * d, 1.0);
    data.targets = (data.beta.transpose() * data.inputs).array().sin().matrix();
    return data;
}

Vector probe_input(std::size_t d, std::uint64_t seed)
{
    SDEPTH_REQUIRE(d >= 1, invalid_argument, "probe input needs d >= 1");
    Vector x(static_cast<Eigen::Index>(d));
    RngStream rng(seed, derive_stream({0x9b0be, 0}));
    rng.fill_normal(x.data(), d, 1.0);
    return x * std::sqrt(static_cast<double>(d)) / x.norm();
}

Vector probe_target(std::size_t o, std::uint64_t seed)
{
    SDEPTH_REQUIRE(o >= 1, invalid_argument, "probe target needs o >= 1");
    Vector t(static_cast<Eigen::Index>(o));
    RngStream rng(seed, derive_stream({0x9b0be, 1}));
    rng.fill_normal(t.data(), o, 1.0);
    return t;
}

Dataset slice(Dataset const& data, std::size_t begin, std::size_t end)
{
    SDEPTH_REQUIRE(begin <= end && end <= data.size(), out_of_range, "slice out of range");
    Dataset out;
    auto const b = static_cast<Eigen::Index>(begin);
    auto const len = static_cast<Eigen::Index>(end - begin);
    out.inputs = data.inputs.middleCols(b, len);
    out.targets = data.targets.middleCols(b, len);
    out.beta = data.beta;
    out.seed = data.seed;
    return out;
}

std::pair<Dataset, Dataset> split(Dataset const& data, double train_fraction)
{
    SDEPTH_REQUIRE(train_fraction > 0.0 && train_fraction < 1.0, invalid_argument,
                   "train fraction must lie in (0, 1)");
    auto const cut = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(data.size())));
    SDEPTH_REQUIRE(cut >= 1 && cut < data.size(), invalid_argument,
                   "split leaves an empty side");
    return {slice(data, 0, cut), slice(data, cut, data.size())};
}

}  // namespace sdepth
