#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sdepth/dataset.hpp"
#include "sdepth/modes.hpp"
#include "sdepth/network.hpp"

namespace sdepth {

/// Information discrepancy zeta_l = J_l z_l at delta = 1, by forward-mode
/// tangent propagation seeded with z_l at block l (1-based).
///
/// zeta_l does not include the branch scale; d y_out / d delta_l equals
/// block_scale() * zeta_l.
Vector discrepancy_zeta(NetworkParams const& params, Vector const& input, std::size_t layer);

/// All discrepancies at once by reverse mode (one backward sweep per output
/// coordinate). Column l - 1 holds zeta_l; shape o x L.
Matrix discrepancy_zeta_reverse(NetworkParams const& params, Vector const& input);

struct RegCoefficients
{
    std::vector<double> g;      //!< g_l = (2 / n) sum_i ||zeta_l(x_i)||^2
    std::size_t n_inputs = 0;
    NetworkShape shape;
};

RegCoefficients reg_coefficients(NetworkParams const& params, Dataset const& data);

//! sum_l p_l (1 - p_l) g_l
double reg_objective(SurvivalMode const& mode, std::span<double const> g);

//! (1 / 2L) sum_l p_l (1 - p_l) g_l
double penalty(SurvivalMode const& mode, std::span<double const> g);

struct MaxRegSolution
{
    SurvivalMode mode;
    double multiplier = 0;  //!< C in p_l = clip(1/2 - C / g_l, 0, 1)
};

/// Budget-constrained maximizer of sum_l p_l (1 - p_l) g_l.
///
/// Zero coefficients take p = 0 when budget < L/2, p = 1 when budget > L/2
/// and 1/2 at budget = L/2; the remaining budget goes to the other layers.
/// ZeroCoefficient when that assignment leaves the budget unreachable.
MaxRegSolution max_reg_mode(std::span<double const> g, double budget);

struct LossDecomposition
{
    double sd_loss = 0;      //!< Monte Carlo mean of the loss over masks
    double sd_loss_se = 0;
    double avg_loss = 0;     //!< loss of the average network (delta = p)
    double penalty = 0;
    double ratio_unpenalized = 0;  //!< |(sd - avg) / sd|
    double ratio_penalized = 0;    //!< |(sd - avg - pen) / sd|
    std::size_t n_mc = 0;
};

/// Second-order decomposition check for the quadratic loss.
///
/// Each Monte Carlo draw gives every input its own mask. The penalty uses
/// the branch scale: s^2 / 2 * sum p(1 - p) g, which is the (1 / 2L) form
/// for the stable network.
LossDecomposition loss_decomposition(NetworkParams const& params, Dataset const& data,
                                     SurvivalMode const& mode, std::size_t n_mc,
                                     std::uint64_t seed, unsigned threads = 1);

}  // namespace sdepth
