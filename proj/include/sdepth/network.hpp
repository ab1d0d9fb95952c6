#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "sdepth/modes.hpp"

namespace sdepth {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Residual branch scaling: 1 for the standard ResNet, 1/sqrt(L) for the
/// stable ResNet.
enum class Architecture
{
    standard,
    stable,
};

std::string_view to_string(Architecture arch);
Architecture parse_architecture(std::string_view name);

struct NetworkShape
{
    std::size_t depth = 1;       //!< L, number of residual blocks
    std::size_t width = 1;       //!< N
    std::size_t input_dim = 1;   //!< d
    std::size_t output_dim = 1;  //!< o
};

/// Weights of the vanilla residual MLP
///   y_0 = W_in x,  y_l = y_{l-1} + s * delta_l * W_l relu(y_{l-1}),  y_out = W_out y_L
/// with s = block_scale().
struct NetworkParams
{
    Matrix w_in;                //!< N x d
    std::vector<Matrix> blocks; //!< L matrices, N x N
    Matrix w_out;               //!< o x N
    Architecture arch = Architecture::stable;

    std::size_t depth() const { return blocks.size(); }
    std::size_t width() const { return static_cast<std::size_t>(w_in.rows()); }
    std::size_t input_dim() const { return static_cast<std::size_t>(w_in.cols()); }
    std::size_t output_dim() const { return static_cast<std::size_t>(w_out.rows()); }
    NetworkShape shape() const { return {depth(), width(), input_dim(), output_dim()}; }
    double block_scale() const;

    //! Throws DimensionMismatch when the matrices do not chain.
    void validate() const;
};

/// He initialization: entries N(0, 2 / fan_in).
///
/// Draws come from the Philox stream (seed, stream) in a fixed order
/// (W_in, W_1..W_L, W_out, each column-major).
NetworkParams init_he(NetworkShape const& shape, Architecture arch, std::uint64_t seed,
                      std::uint64_t stream = 0);

//! In-place variant reusing the storage of `params`; identical draws.
void init_he(NetworkParams& params, NetworkShape const& shape, Architecture arch,
             std::uint64_t seed, std::uint64_t stream = 0);

/// Activations of one forward pass over a batch (one column per input).
struct ForwardTrace
{
    Matrix input;               //!< d x B
    std::vector<Matrix> y;      //!< y_0..y_L, each N x B
    std::vector<Matrix> z;      //!< z_l = W_l relu(y_{l-1}); empty when skipped
    Matrix y_out;               //!< o x B
    std::vector<double> gates;  //!< multiplier used per block: delta_l or p_l

    std::size_t depth() const { return gates.size(); }
    std::size_t batch() const { return static_cast<std::size_t>(input.cols()); }
};

/// Forward pass with a binary mask shared by every column.
///
/// With `compute_inactive` the branch z_l of a dropped block is still
/// evaluated (needed by sensitivities and discrepancies); otherwise it is
/// left empty and the dropped block costs nothing.
ForwardTrace forward(NetworkParams const& params, Matrix const& inputs, Mask const& mask,
                     bool compute_inactive = true);

/// Average network: delta replaced by its mean p.
ForwardTrace forward_average(NetworkParams const& params, Matrix const& inputs,
                             SurvivalMode const& mode);

/// Forward with arbitrary real gates per block.
ForwardTrace forward_gated(NetworkParams const& params, Matrix const& inputs,
                           std::span<double const> gates, bool compute_inactive = true);

/// Output y_out only, for fixed real gates shared by every column (1 for
/// the full network, p_l for the average network). No trace is kept.
Matrix predict(NetworkParams const& params, Matrix const& inputs, std::span<double const> gates);

/// Hidden state y_layer for a batch in which every column carries its own
/// gates (gates is L x B). Used for Monte Carlo over masks at a fixed input.
Matrix forward_columns(NetworkParams const& params, Matrix const& inputs,
                       Matrix const& gates, std::size_t layer);

struct BackwardTrace
{
    double loss = 0;               //!< sum over columns of ||y_out - t||^2
    Matrix d_out;                  //!< dloss / dy_out
    std::vector<Matrix> dy;        //!< dloss / dy_l, l = 0..L
    Matrix dw_in;
    std::vector<Matrix> dw_blocks; //!< zero for dropped blocks
    Matrix dw_out;
    Vector d_gate;                 //!< dloss / d delta_l (zero where z_l was skipped)
};

//! Sum over columns of the quadratic loss ||y_out - t||^2.
double quadratic_loss(Matrix const& y_out, Matrix const& targets);

/// Reverse-mode gradients of the quadratic loss for the trace.
///
/// `weight_grads = false` skips the weight gradients and only propagates
/// dy and d_gate.
BackwardTrace backward(NetworkParams const& params, ForwardTrace const& trace,
                       Matrix const& targets, bool weight_grads = true);

/// One (architecture, mode) configuration profiled by
/// `grad_norm_profile`.
struct GrowthSetting
{
    Architecture arch;
    SurvivalMode mode;
};

struct GrowthRow
{
    std::size_t layer = 0;
    double q_tilde = 0;           //!< mean over samples of ||dy_l||^2 / ||dy_L||^2
    double q_tilde_se = 0;        //!< standard error of q_tilde
    double ratio_of_averages = 0; //!< mean ||dy_l||^2 / mean ||dy_L||^2
    double rate_empirical = 0;    //!< q_tilde^(1 / (L - l))
    double rate_se = 0;           //!< delta-method standard error of the rate
    double rate_theoretical = 0;  //!< closed-form growth^(1 / (L - l))
    double q_theoretical = 0;
    double forward_q = 0;         //!< mean ||y_l||^2 / N over the same samples
    double forward_q_se = 0;
};

struct GrowthReport
{
    GrowthSetting setting;
    std::size_t n_mc = 0;
    std::vector<GrowthRow> rows; //!< l = 0..L; rates are undefined (0) at l = L
};

struct ProfileConfig
{
    NetworkShape shape;
    std::size_t n_mc = 500;
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

/// Monte Carlo estimate of the gradient growth ratio at initialization,
/// drawing fresh He weights and a fresh mask per sample.
///
/// All settings share the weight draw of a sample; masks are drawn from
/// separate streams per setting. The per-sample ratio of norms is averaged
/// (q_tilde); the ratio of averaged norms is kept as a diagnostic. The
/// forward second moment ||y_l||^2 / N is collected from the same passes.
std::vector<GrowthReport> grad_norm_profile(ProfileConfig const& config, Vector const& input,
                                            Vector const& target,
                                            std::vector<GrowthSetting> const& settings);

}  // namespace sdepth
