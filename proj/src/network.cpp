#include "sdepth/network.hpp"

#include <cmath>
#include <string>

#include "sdepth/error.hpp"
#include "sdepth/kernels.hpp"
#include "sdepth/parallel.hpp"

namespace sdepth {
namespace {

Matrix relu(Matrix const& m)
{
    return m.cwiseMax(0.0);
}

Matrix relu_grad_mask(Matrix const& m)
{
    // Derivative at 0 taken as 0.
    return (m.array() > 0.0).cast<double>().matrix();
}

void fill_normal(Matrix& m, double stddev, RngStream& rng)
{
    rng.fill_normal(m.data(), static_cast<std::size_t>(m.size()), stddev);
}

void check_inputs(NetworkParams const& params, Matrix const& inputs, std::size_t gates)
{
    SDEPTH_REQUIRE(static_cast<std::size_t>(inputs.rows()) == params.input_dim(),
                   dimension_mismatch,
                   "input has " + std::to_string(inputs.rows()) + " rows, network expects "
                       + std::to_string(params.input_dim()));
    SDEPTH_REQUIRE(gates == params.depth(), dimension_mismatch,
                   "mask length " + std::to_string(gates) + " != depth "
                       + std::to_string(params.depth()));
}

}  // namespace

std::string_view to_string(Architecture arch)
{
    return arch == Architecture::standard ? "standard" : "stable";
}

Architecture parse_architecture(std::string_view name)
{
    if (name == "standard")
    {
        return Architecture::standard;
    }
    if (name == "stable")
    {
        return Architecture::stable;
    }
    throw Error(ErrorKind::invalid_argument, "unknown architecture '" + std::string(name) + "'");
}

double NetworkParams::block_scale() const
{
    return arch == Architecture::standard ? 1.0
                                          : 1.0 / std::sqrt(static_cast<double>(depth()));
}

void NetworkParams::validate() const
{
    SDEPTH_REQUIRE(!blocks.empty(), dimension_mismatch, "network needs at least one block");
    SDEPTH_REQUIRE(w_in.rows() >= 1 && w_in.cols() >= 1, dimension_mismatch, "empty W_in");
    for (auto const& w : blocks)
    {
        SDEPTH_REQUIRE(w.rows() == w_in.rows() && w.cols() == w_in.rows(), dimension_mismatch,
                       "block matrix must be N x N");
    }
    SDEPTH_REQUIRE(w_out.cols() == w_in.rows() && w_out.rows() >= 1, dimension_mismatch,
                   "W_out must be o x N");
}

void init_he(NetworkParams& params, NetworkShape const& shape, Architecture arch,
             std::uint64_t seed, std::uint64_t stream)
{
    SDEPTH_REQUIRE(shape.depth >= 1 && shape.width >= 1 && shape.input_dim >= 1
                       && shape.output_dim >= 1,
                   invalid_argument, "network dimensions must be positive");
    auto const N = static_cast<Eigen::Index>(shape.width);
    auto const d = static_cast<Eigen::Index>(shape.input_dim);
    auto const o = static_cast<Eigen::Index>(shape.output_dim);

    RngStream rng(seed, stream);
    params.arch = arch;
    params.w_in.resize(N, d);
    fill_normal(params.w_in, std::sqrt(2.0 / static_cast<double>(d)), rng);
    params.blocks.resize(shape.depth);
    double const block_std = std::sqrt(2.0 / static_cast<double>(N));
    for (auto& w : params.blocks)
    {
        w.resize(N, N);
        fill_normal(w, block_std, rng);
    }
    params.w_out.resize(o, N);
    fill_normal(params.w_out, block_std, rng);
}

NetworkParams init_he(NetworkShape const& shape, Architecture arch, std::uint64_t seed,
                      std::uint64_t stream)
{
    NetworkParams params;
    init_he(params, shape, arch, seed, stream);
    return params;
}

ForwardTrace forward_gated(NetworkParams const& params, Matrix const& inputs,
                           std::span<double const> gates, bool compute_inactive)
{
    check_inputs(params, inputs, gates.size());
    std::size_t const L = params.depth();
    double const scale = params.block_scale();

    ForwardTrace trace;
    trace.input = inputs;
    trace.gates.assign(gates.begin(), gates.end());
    trace.y.resize(L + 1);
    trace.z.resize(L);
    trace.y[0].noalias() = params.w_in * inputs;
    for (std::size_t l = 1; l <= L; ++l)
    {
        double const gate = gates[l - 1];
        Matrix const& prev = trace.y[l - 1];
        if (gate != 0.0 || compute_inactive)
        {
            trace.z[l - 1].noalias() = params.blocks[l - 1] * relu(prev);
        }
        if (gate != 0.0)
        {
            trace.y[l] = prev + (scale * gate) * trace.z[l - 1];
        }
        else
        {
            trace.y[l] = prev;
        }
    }
    trace.y_out.noalias() = params.w_out * trace.y[L];
    return trace;
}

ForwardTrace forward(NetworkParams const& params, Matrix const& inputs, Mask const& mask,
                     bool compute_inactive)
{
    std::vector<double> gates(mask.size());
    for (std::size_t l = 0; l < mask.size(); ++l)
    {
        gates[l] = mask[l] ? 1.0 : 0.0;
    }
    return forward_gated(params, inputs, gates, compute_inactive);
}

ForwardTrace forward_average(NetworkParams const& params, Matrix const& inputs,
                             SurvivalMode const& mode)
{
    return forward_gated(params, inputs, mode.probs(), true);
}

Matrix predict(NetworkParams const& params, Matrix const& inputs, std::span<double const> gates)
{
    check_inputs(params, inputs, gates.size());
    double const scale = params.block_scale();
    constexpr Eigen::Index chunk = 256;
    Matrix out(params.w_out.rows(), inputs.cols());
    Matrix y, branch;
    for (Eigen::Index begin = 0; begin < inputs.cols(); begin += chunk)
    {
        Eigen::Index const cols = std::min(chunk, inputs.cols() - begin);
        y.noalias() = params.w_in * inputs.middleCols(begin, cols);
        for (std::size_t l = 0; l < gates.size(); ++l)
        {
            if (gates[l] != 0.0)
            {
                branch.noalias() = params.blocks[l] * y.cwiseMax(0.0);
                y += (scale * gates[l]) * branch;
            }
        }
        out.middleCols(begin, cols).noalias() = params.w_out * y;
    }
    return out;
}

Matrix forward_columns(NetworkParams const& params, Matrix const& inputs, Matrix const& gates,
                       std::size_t layer)
{
    SDEPTH_REQUIRE(static_cast<std::size_t>(inputs.rows()) == params.input_dim(),
                   dimension_mismatch, "input dimension mismatch");
    SDEPTH_REQUIRE(static_cast<std::size_t>(gates.rows()) == params.depth()
                       && gates.cols() == inputs.cols(),
                   dimension_mismatch, "gates must be L x batch");
    SDEPTH_REQUIRE(layer <= params.depth(), out_of_range, "layer beyond depth");
    double const scale = params.block_scale();
    Matrix y = params.w_in * inputs;
    for (std::size_t l = 1; l <= layer; ++l)
    {
        Matrix branch = params.blocks[l - 1] * relu(y);
        y.noalias() += scale * (branch * gates.row(static_cast<Eigen::Index>(l - 1)).asDiagonal());
    }
    return y;
}

double quadratic_loss(Matrix const& y_out, Matrix const& targets)
{
    SDEPTH_REQUIRE(y_out.rows() == targets.rows() && y_out.cols() == targets.cols(),
                   dimension_mismatch, "target shape does not match output");
    return (y_out - targets).squaredNorm();
}

BackwardTrace backward(NetworkParams const& params, ForwardTrace const& trace,
                       Matrix const& targets, bool weight_grads)
{
    std::size_t const L = params.depth();
    SDEPTH_REQUIRE(trace.depth() == L && trace.y.size() == L + 1, dimension_mismatch,
                   "trace depth does not match params");
    SDEPTH_REQUIRE(trace.y[0].rows() == params.w_in.rows(), dimension_mismatch,
                   "trace width does not match params");
    SDEPTH_REQUIRE(trace.y_out.rows() == targets.rows() && trace.y_out.cols() == targets.cols(),
                   dimension_mismatch, "target shape does not match output");
    double const scale = params.block_scale();

    BackwardTrace grads;
    Matrix const residual = trace.y_out - targets;
    grads.loss = residual.squaredNorm();
    grads.d_out = 2.0 * residual;
    grads.dy.resize(L + 1);
    grads.d_gate = Vector::Zero(static_cast<Eigen::Index>(L));
    grads.dy[L].noalias() = params.w_out.transpose() * grads.d_out;
    if (weight_grads)
    {
        grads.dw_out.noalias() = grads.d_out * trace.y[L].transpose();
        grads.dw_blocks.resize(L);
    }
    for (std::size_t l = L; l >= 1; --l)
    {
        Matrix const& upstream = grads.dy[l];
        Matrix const& z = trace.z[l - 1];
        if (z.size() != 0)
        {
            grads.d_gate[static_cast<Eigen::Index>(l - 1)] =
                scale * (upstream.array() * z.array()).sum();
        }
        double const gate = trace.gates[l - 1];
        if (gate == 0.0)
        {
            grads.dy[l - 1] = upstream;
            if (weight_grads)
            {
                grads.dw_blocks[l - 1] = Matrix::Zero(params.blocks[l - 1].rows(),
                                                      params.blocks[l - 1].cols());
            }
            continue;
        }
        Matrix const& prev = trace.y[l - 1];
        double const factor = scale * gate;
        Matrix through = params.blocks[l - 1].transpose() * upstream;
        grads.dy[l - 1] = upstream + factor * relu_grad_mask(prev).cwiseProduct(through);
        if (weight_grads)
        {
            grads.dw_blocks[l - 1].noalias() = factor * upstream * relu(prev).transpose();
        }
    }
    if (weight_grads)
    {
        grads.dw_in.noalias() = grads.dy[0] * trace.input.transpose();
    }
    return grads;
}

std::vector<GrowthReport> grad_norm_profile(ProfileConfig const& config, Vector const& input,
                                            Vector const& target,
                                            std::vector<GrowthSetting> const& settings)
{
    auto const& shape = config.shape;
    SDEPTH_REQUIRE(config.n_mc >= 1, invalid_argument, "n_mc must be >= 1");
    SDEPTH_REQUIRE(static_cast<std::size_t>(input.size()) == shape.input_dim, dimension_mismatch,
                   "input length must equal d");
    SDEPTH_REQUIRE(static_cast<std::size_t>(target.size()) == shape.output_dim,
                   dimension_mismatch, "target length must equal o");
    SDEPTH_REQUIRE(!settings.empty(), invalid_argument, "no settings to profile");
    for (auto const& s : settings)
    {
        SDEPTH_REQUIRE(s.mode.size() == shape.depth, dimension_mismatch,
                       "mode length must equal L");
    }
    std::size_t const L = shape.depth;
    std::size_t const S = settings.size();
    std::size_t const n = config.n_mc;
    auto const cols = static_cast<Eigen::Index>(S);

    // Per sample, slot layout [s][l]: ||dy_l||^2 then ||y_l||^2.
    std::size_t const stride = 2 * S * (L + 1);
    std::vector<double> norms(n * stride);

    parallel_chunks(n, config.threads, [&](std::size_t begin, std::size_t end) {
      NetworkParams params;
      for (std::size_t i = begin; i < end; ++i)
      {
        init_he(params, shape, Architecture::standard, config.seed, derive_stream(i, 0));
        // Every setting is one column, so each weight matrix is read once.
        Matrix gates(static_cast<Eigen::Index>(L), cols);
        Vector scales(cols);
        for (std::size_t s = 0; s < S; ++s)
        {
            RngStream mask_rng(config.seed, derive_stream(i, 1 + s));
            Mask const mask = sample_mask(settings[s].mode, mask_rng);
            scales[static_cast<Eigen::Index>(s)] =
                settings[s].arch == Architecture::standard
                    ? 1.0
                    : 1.0 / std::sqrt(static_cast<double>(L));
            for (std::size_t l = 0; l < L; ++l)
            {
                gates(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(s)) =
                    mask[l] ? scales[static_cast<Eigen::Index>(s)] : 0.0;
            }
        }
        std::vector<Matrix> y(L + 1);
        y[0] = (params.w_in * input).replicate(1, cols);
        for (std::size_t l = 1; l <= L; ++l)
        {
            auto const row = gates.row(static_cast<Eigen::Index>(l - 1));
            Matrix branch = params.blocks[l - 1] * relu(y[l - 1]);
            y[l] = y[l - 1] + branch * row.asDiagonal();
        }
        Matrix const out = params.w_out * y[L];
        Matrix g = params.w_out.transpose() * (2.0 * (out.colwise() - target));
        double* slot = &norms[i * stride];
        for (std::size_t l = L + 1; l-- > 0;)
        {
            for (std::size_t s = 0; s < S; ++s)
            {
                auto const col = static_cast<Eigen::Index>(s);
                slot[s * (L + 1) + l] = g.col(col).squaredNorm();
                slot[(S + s) * (L + 1) + l] = y[l].col(col).squaredNorm();
            }
            if (l == 0)
            {
                break;
            }
            auto const row = gates.row(static_cast<Eigen::Index>(l - 1));
            Matrix through = params.blocks[l - 1].transpose() * g;
            g += relu_grad_mask(y[l - 1]).cwiseProduct(through * row.asDiagonal());
        }
      }
    });

    double const dn = static_cast<double>(n);
    double const width = static_cast<double>(shape.width);
    std::vector<GrowthReport> reports;
    reports.reserve(S);
    for (std::size_t s = 0; s < S; ++s)
    {
        GrowthReport report{settings[s], n, {}};
        KernelVariant const variant{settings[s].arch, true};
        auto grad_at = [&](std::size_t i, std::size_t l) {
            return norms[i * stride + s * (L + 1) + l];
        };
        auto fwd_at = [&](std::size_t i, std::size_t l) {
            return norms[i * stride + (S + s) * (L + 1) + l];
        };
        double top_mean = 0.0;
        for (std::size_t i = 0; i < n; ++i)
        {
            top_mean += grad_at(i, L);
        }
        top_mean /= dn;
        for (std::size_t l = 0; l <= L; ++l)
        {
            double sum = 0.0, sum_sq = 0.0, raw = 0.0, fwd = 0.0, fwd_sq = 0.0;
            for (std::size_t i = 0; i < n; ++i)
            {
                double const ratio = grad_at(i, l) / grad_at(i, L);
                sum += ratio;
                sum_sq += ratio * ratio;
                raw += grad_at(i, l);
                double const q = fwd_at(i, l) / width;
                fwd += q;
                fwd_sq += q * q;
            }
            double const mean = sum / dn;
            double const var =
                n > 1 ? std::max(0.0, (sum_sq - dn * mean * mean) / (dn - 1.0)) : 0.0;
            double const fmean = fwd / dn;
            double const fvar =
                n > 1 ? std::max(0.0, (fwd_sq - dn * fmean * fmean) / (dn - 1.0)) : 0.0;
            GrowthRow row;
            row.layer = l;
            row.q_tilde = mean;
            row.q_tilde_se = std::sqrt(var / dn);
            row.ratio_of_averages = (raw / dn) / top_mean;
            row.q_theoretical = theoretical_grad_growth(variant, settings[s].mode, l);
            row.forward_q = fmean;
            row.forward_q_se = std::sqrt(fvar / dn);
            if (l < L)
            {
                double const steps = static_cast<double>(L - l);
                row.rate_empirical = std::exp(std::log(mean) / steps);
                row.rate_se = row.rate_empirical * (row.q_tilde_se / mean) / steps;
                row.rate_theoretical = theoretical_grad_rate(variant, settings[s].mode, l);
            }
            report.rows.push_back(row);
        }
        reports.push_back(std::move(report));
    }
    return reports;
}

}  // namespace sdepth
