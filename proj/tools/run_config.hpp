#pragma once

#include <string>

#include "json.hpp"
#include "sdepth/harness.hpp"

namespace sdepth::cli {

/// Everything a `train` run needs. JSON keys match the field names; missing
/// keys keep the defaults below.
//! Toy-task defaults for the CLI: the library's lr 0.05 diverges there.
TrainConfig toy_train_defaults();

struct TrainRun
{
    std::size_t depth = 50;
    std::size_t width = 128;
    std::size_t input_dim = 4;
    std::size_t n_samples = 4096;
    double train_fraction = 0.8;
    Architecture arch = Architecture::stable;
    std::string mode = "none";  //!< mode spec or "none" for plain training
    std::uint64_t data_seed = 0;
    std::uint64_t init_seed = 0;
    TrainConfig train = toy_train_defaults();
};

TrainRun train_run_from_json(nlohmann::json const& j);
nlohmann::json to_json(TrainRun const& run);

/// Sweep keys: depth, width, input_dim, n_samples, train_fraction, arch,
/// budgets (absolute) or budget_fractions (of L), kinds, repeats, seed,
/// p_min, sense_map, sense_method, threads, and a nested "train" object
/// with lr, momentum, batch_size, epochs.
SweepConfig sweep_from_json(nlohmann::json const& j);
nlohmann::json to_json(SweepConfig const& config);

nlohmann::json load_json(std::string const& path);

}  // namespace sdepth::cli
