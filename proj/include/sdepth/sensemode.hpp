#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "sdepth/dataset.hpp"
#include "sdepth/modes.hpp"
#include "sdepth/network.hpp"

namespace sdepth {

enum class SensitivityMethod
{
    gradient,       //!< d loss / d delta_l at delta = 1, one backward pass
    leave_one_out   //!< loss(1) - loss(1 with block l dropped), L + 1 forward passes
};

enum class SenseMap
{
    proportional,  //!< p_l = clip(c |S_l|, p_min, 1)
    affine         //!< p_l = clip(p_min + c (|S_l| - min |S|), p_min, 1)
};

std::string_view to_string(SensitivityMethod method);
SensitivityMethod parse_sensitivity_method(std::string_view text);
std::string_view to_string(SenseMap map);
SenseMap parse_sense_map(std::string_view text);

struct Sensitivities
{
    std::vector<double> s;      //!< signed, per block
    std::vector<double> abs_s;
    std::size_t n_inputs = 0;
    std::uint64_t seed = 0;     //!< dataset seed, for provenance
    SensitivityMethod method = SensitivityMethod::gradient;
};

/// Loss is the mean over the dataset of ||y_out - t||^2.
Sensitivities sensitivities(NetworkParams const& params, Dataset const& data,
                            SensitivityMethod method, unsigned threads = 1);

/// Budget-exact survival mode from sensitivities.
///
/// InfeasibleBudget outside [L p_min, L]. All-zero sensitivities give the
/// uniform mode. Zero entries stay at p_min while the others can absorb the
/// budget; past that point the remainder is shared equally among them.
SurvivalMode sensemode(Sensitivities const& s, double budget, double p_min = 0.1,
                       SenseMap map = SenseMap::proportional);

}  // namespace sdepth
