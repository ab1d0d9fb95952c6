#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "sdepth/rng.hpp"

namespace sdepth {

enum class ModeKind
{
    uniform,
    linear,
    sense,
    custom,
};

std::string_view to_string(ModeKind kind);

/// Per-block survival probabilities p_1..p_L.
///
/// Index 0 of `probs()` corresponds to residual block 1; the input
/// embedding is never masked.
class SurvivalMode
{
  public:
    SurvivalMode(std::vector<double> probs, ModeKind kind);

    std::span<double const> probs() const { return probs_; }
    double operator[](std::size_t i) const { return probs_[i]; }
    std::size_t size() const { return probs_.size(); }
    ModeKind kind() const { return kind_; }

    //! Expected depth: sum of p_l.
    double budget() const;
    //! Variance of the realized depth: sum of p_l (1 - p_l).
    double variance() const;

  private:
    std::vector<double> probs_;
    ModeKind kind_;
};

/// Binary keep/drop vector for the residual blocks.
class Mask
{
  public:
    explicit Mask(std::vector<unsigned char> bits);
    static Mask ones(std::size_t L);
    static Mask zeros(std::size_t L);

    std::size_t size() const { return bits_.size(); }
    bool operator[](std::size_t i) const { return bits_[i] != 0; }
    std::span<unsigned char const> bits() const { return bits_; }
    std::size_t realized_depth() const;

  private:
    std::vector<unsigned char> bits_;
};

SurvivalMode make_uniform(std::size_t L, double p);

//! p_l = 1 - (l / L)(1 - p_L), l = 1..L.
SurvivalMode make_linear(std::size_t L, double p_last);

//! Smallest budget a linear mode can reach: (L - 1) / 2, at p_L = 0.
double linear_budget_floor(std::size_t L);

//! Linear mode whose budget equals `budget`; InfeasibleBudget below the floor.
SurvivalMode make_linear_for_budget(std::size_t L, double budget);

SurvivalMode make_custom(std::vector<double> probs);

/// Mode from a text spec for depth L:
///   uniform:p  linear:p_L  budget-uniform:Lbar  budget-linear:Lbar
///   custom:p_1,...,p_L
SurvivalMode parse_mode_spec(std::string_view spec, std::size_t L);

//! One independent Bernoulli(p_l) draw per block.
Mask sample_mask(SurvivalMode const& mode, RngStream& rng);

/// Bennett rate function u(t) = (1 + t) log(1 + t) - t.
double bennett_u(double t);

/// Inverse of `bennett_u` on [0, inf).
double bennett_u_inv(double y);

/// Half-width of the (1 - beta) concentration interval of the realized
/// depth: v_p * u^{-1}(log(2 / beta) / v_p).
///
/// Zero-variance modes return 0 unless `strict`, in which case they raise
/// DegenerateMode.
double depth_deviation_bound(SurvivalMode const& mode, double beta, bool strict = false);

}  // namespace sdepth
