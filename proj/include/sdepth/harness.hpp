#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sdepth/dataset.hpp"
#include "sdepth/modes.hpp"
#include "sdepth/network.hpp"
#include "sdepth/sensemode.hpp"

namespace sdepth {

struct TrainConfig
{
    double lr = 0.05;
    double momentum = 0.9;
    std::size_t batch_size = 256;
    std::size_t epochs = 20;
    std::uint64_t seed = 0;
    std::optional<SurvivalMode> mode;  //!< none: plain training, every block active
    double divergence_factor = 1e6;
    bool track_epochs = true;  //!< false: losses only at init and after the last epoch

    void validate(std::size_t depth) const;
};

struct RunReport
{
    std::vector<double> train_loss;  //!< average network, epoch 0 (init) .. epochs
    std::vector<double> test_loss;   //!< empty without a test set
    std::size_t iterations = 0;
    double depth_mean = 0;           //!< realized depth L_delta over iterations
    std::size_t depth_min = 0;
    std::size_t depth_max = 0;
    std::string params_digest;       //!< FNV-1a over all weights, hex
};

/// FNV-1a 64 over the raw bytes of every weight matrix.
std::string params_digest(NetworkParams const& params);

/// Minibatch SGD with momentum (v = m v + grad, w -= lr v) on the mean
/// quadratic loss. One fresh mask per iteration; dropped blocks keep both
/// their weights and their velocity. Reported losses use the average
/// network. Divergence when the mean minibatch loss of an epoch exceeds
/// divergence_factor times the initial loss or stops being finite.
RunReport train(NetworkParams& params, Dataset const& train_set, Dataset const* test_set,
                TrainConfig const& config);

enum class SweepKind
{
    uniform,
    linear,
    sense
};

std::string_view to_string(SweepKind kind);
SweepKind parse_sweep_kind(std::string_view text);

struct SweepConfig
{
    std::size_t depth = 50;
    std::size_t width = 128;
    std::size_t input_dim = 8;
    std::size_t n_samples = 4096;
    double train_fraction = 0.8;
    std::vector<double> budgets;  //!< absolute expected depths in (0, L]
    std::vector<SweepKind> kinds{SweepKind::uniform, SweepKind::linear, SweepKind::sense};
    std::size_t repeats = 4;
    std::uint64_t seed = 0;
    Architecture arch = Architecture::stable;
    TrainConfig train;            //!< mode and seed are set per run
    double p_min = 0.1;
    SenseMap sense_map = SenseMap::proportional;
    SensitivityMethod sense_method = SensitivityMethod::gradient;
    unsigned threads = 1;
};

struct SweepCell
{
    double budget = 0;
    SweepKind kind = SweepKind::uniform;
    bool feasible = true;
    std::vector<double> test_loss;   //!< final test loss per repeat
    std::vector<double> train_loss;
    double mean_test = 0;
    double sd_test = 0;              //!< sample sd over repeats
    std::vector<double> probs;       //!< mode of the first repeat
};

/// Trains `repeats` runs for every (budget, kind). Repeat r uses the same
/// initial weights for every cell, so the comparison is paired. Linear cells
/// below the feasibility floor are marked, not run.
std::vector<SweepCell> budget_sweep(SweepConfig const& config);

}  // namespace sdepth
