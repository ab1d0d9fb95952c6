#include "sdepth/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numeric>
#include <random>

#include "sdepth/error.hpp"
#include "sdepth/parallel.hpp"
#include "sdepth/rng.hpp"

namespace sdepth {
namespace {

double mean_loss(NetworkParams const& params, Dataset const& data,
                 std::optional<SurvivalMode> const& mode)
{
    std::vector<double> const ones(params.depth(), 1.0);
    Matrix const y_out = predict(params, data.inputs, mode ? mode->probs() : std::span<double const>(ones));
    return quadratic_loss(y_out, data.targets) / static_cast<double>(data.size());
}

void momentum_step(Matrix& w, Matrix& v, Matrix const& grad, double lr, double momentum)
{
    v = momentum * v + grad;
    w -= lr * v;
}

}  // namespace

void TrainConfig::validate(std::size_t depth) const
{
    SDEPTH_REQUIRE(lr > 0.0 && std::isfinite(lr), invalid_argument, "lr must be positive");
    SDEPTH_REQUIRE(momentum >= 0.0 && momentum < 1.0, invalid_argument,
                   "momentum must lie in [0, 1)");
    SDEPTH_REQUIRE(batch_size >= 1, invalid_argument, "batch size must be >= 1");
    SDEPTH_REQUIRE(divergence_factor > 1.0, invalid_argument, "divergence factor must exceed 1");
    if (mode)
    {
        SDEPTH_REQUIRE(mode->size() == depth, dimension_mismatch, "mode length must equal depth");
    }
}

std::string params_digest(NetworkParams const& params)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&h](Matrix const& m) {
        auto const* bytes = reinterpret_cast<unsigned char const*>(m.data());
        std::size_t const count = static_cast<std::size_t>(m.size()) * sizeof(double);
        for (std::size_t i = 0; i < count; ++i)
        {
            h ^= bytes[i];
            h *= 0x100000001b3ULL;
        }
    };
    feed(params.w_in);
    for (auto const& b : params.blocks)
    {
        feed(b);
    }
    feed(params.w_out);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

RunReport train(NetworkParams& params, Dataset const& train_set, Dataset const* test_set,
                TrainConfig const& config)
{
    params.validate();
    train_set.validate();
    config.validate(params.depth());
    SDEPTH_REQUIRE(train_set.input_dim() == params.input_dim()
                       && train_set.output_dim() == params.output_dim(),
                   dimension_mismatch, "training set does not match the network");
    if (test_set)
    {
        test_set->validate();
        SDEPTH_REQUIRE(test_set->input_dim() == params.input_dim()
                           && test_set->output_dim() == params.output_dim(),
                       dimension_mismatch, "test set does not match the network");
    }
    std::size_t const L = params.depth();
    std::size_t const n = train_set.size();

    Matrix v_in = Matrix::Zero(params.w_in.rows(), params.w_in.cols());
    Matrix v_out = Matrix::Zero(params.w_out.rows(), params.w_out.cols());
    std::vector<Matrix> v_blocks(L);
    for (std::size_t l = 0; l < L; ++l)
    {
        v_blocks[l] = Matrix::Zero(params.blocks[l].rows(), params.blocks[l].cols());
    }

    RunReport report;
    report.train_loss.push_back(mean_loss(params, train_set, config.mode));
    if (test_set)
    {
        report.test_loss.push_back(mean_loss(params, *test_set, config.mode));
    }
    double const initial = report.train_loss.front();
    report.depth_min = L;

    RngStream mask_rng(config.seed, derive_stream({0x7a1, 0}));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::size_t depth_total = 0;
    Matrix batch_x, batch_t;

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch)
    {
        RngStream shuffle_rng(config.seed, derive_stream({0x7a1, 1, epoch}));
        for (std::size_t i = n; i > 1; --i)
        {
            std::size_t const j = static_cast<std::size_t>(shuffle_rng.uniform() * static_cast<double>(i));
            std::swap(order[i - 1], order[std::min(j, i - 1)]);
        }
        double batch_loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t begin = 0; begin < n; begin += config.batch_size)
        {
            std::size_t const end = std::min(n, begin + config.batch_size);
            auto const b = static_cast<Eigen::Index>(end - begin);
            batch_x.resize(train_set.inputs.rows(), b);
            batch_t.resize(train_set.targets.rows(), b);
            for (Eigen::Index c = 0; c < b; ++c)
            {
                auto const src = static_cast<Eigen::Index>(order[begin + static_cast<std::size_t>(c)]);
                batch_x.col(c) = train_set.inputs.col(src);
                batch_t.col(c) = train_set.targets.col(src);
            }
            Mask const mask = config.mode ? sample_mask(*config.mode, mask_rng) : Mask::ones(L);
            std::size_t const depth = mask.realized_depth();
            depth_total += depth;
            report.depth_min = std::min(report.depth_min, depth);
            report.depth_max = std::max(report.depth_max, depth);

            ForwardTrace const trace = forward(params, batch_x, mask, false);
            BackwardTrace const grads = backward(params, trace, batch_t, true);
            double const inv_b = 1.0 / static_cast<double>(b);
            batch_loss_sum += grads.loss * inv_b;
            ++batches;
            momentum_step(params.w_in, v_in, inv_b * grads.dw_in, config.lr, config.momentum);
            momentum_step(params.w_out, v_out, inv_b * grads.dw_out, config.lr, config.momentum);
            for (std::size_t l = 0; l < L; ++l)
            {
                if (mask[l])
                {
                    momentum_step(params.blocks[l], v_blocks[l], inv_b * grads.dw_blocks[l], config.lr,
                                  config.momentum);
                }
            }
            ++report.iterations;
        }
        double const running = batch_loss_sum / static_cast<double>(batches);
        if (!std::isfinite(running) || running > config.divergence_factor * initial)
        {
            throw Error(ErrorKind::divergence,
                        "training diverged at epoch " + std::to_string(epoch));
        }
        if (!config.track_epochs && epoch < config.epochs)
        {
            continue;
        }
        report.train_loss.push_back(mean_loss(params, train_set, config.mode));
        if (test_set)
        {
            report.test_loss.push_back(mean_loss(params, *test_set, config.mode));
        }
    }
    report.depth_mean = report.iterations > 0
                            ? static_cast<double>(depth_total) / static_cast<double>(report.iterations)
                            : 0.0;
    if (report.iterations == 0)
    {
        report.depth_min = report.depth_max = 0;
    }
    report.params_digest = params_digest(params);
    return report;
}

std::string_view to_string(SweepKind kind)
{
    switch (kind)
    {
    case SweepKind::uniform: return "uniform";
    case SweepKind::linear: return "linear";
    case SweepKind::sense: return "sense";
    }
    return "?";
}

SweepKind parse_sweep_kind(std::string_view text)
{
    if (text == "uniform")
    {
        return SweepKind::uniform;
    }
    if (text == "linear")
    {
        return SweepKind::linear;
    }
    if (text == "sense")
    {
        return SweepKind::sense;
    }
    throw Error(ErrorKind::invalid_argument, "unknown mode kind: " + std::string(text));
}

std::vector<SweepCell> budget_sweep(SweepConfig const& config)
{
    std::size_t const L = config.depth;
    SDEPTH_REQUIRE(config.repeats >= 1, invalid_argument, "repeats must be >= 1");
    SDEPTH_REQUIRE(!config.budgets.empty() && !config.kinds.empty(), invalid_argument,
                   "sweep needs budgets and kinds");
    for (double b : config.budgets)
    {
        SDEPTH_REQUIRE(b > 0.0 && b <= static_cast<double>(L), infeasible_budget,
                       "sweep budgets must lie in (0, L]");
    }
    Dataset const data = toy_dataset(config.n_samples, config.input_dim, config.seed);
    auto const [train_set, test_set] = split(data, config.train_fraction);
    NetworkShape const shape{L, config.width, config.input_dim, 1};

    std::vector<NetworkParams> inits(config.repeats);
    std::vector<Sensitivities> sens(config.repeats);
    for (std::size_t r = 0; r < config.repeats; ++r)
    {
        inits[r] = init_he(shape, config.arch, config.seed, derive_stream({0x5ee9, r}));
        bool const need_sense =
            std::find(config.kinds.begin(), config.kinds.end(), SweepKind::sense) != config.kinds.end();
        if (need_sense)
        {
            sens[r] = sensitivities(inits[r], train_set, config.sense_method);
        }
    }

    std::vector<SweepCell> cells;
    std::vector<std::vector<SurvivalMode>> modes;
    for (double budget : config.budgets)
    {
        for (SweepKind kind : config.kinds)
        {
            SweepCell cell;
            cell.budget = budget;
            cell.kind = kind;
            std::vector<SurvivalMode> per_repeat;
            try
            {
                for (std::size_t r = 0; r < config.repeats; ++r)
                {
                    switch (kind)
                    {
                    case SweepKind::uniform:
                        per_repeat.push_back(make_uniform(L, budget / static_cast<double>(L)));
                        break;
                    case SweepKind::linear: per_repeat.push_back(make_linear_for_budget(L, budget)); break;
                    case SweepKind::sense:
                        per_repeat.push_back(sensemode(sens[r], budget, config.p_min, config.sense_map));
                        break;
                    }
                }
            }
            catch (Error const& e)
            {
                if (e.kind() != ErrorKind::infeasible_budget)
                {
                    throw;
                }
                cell.feasible = false;
                per_repeat.clear();
            }
            if (!per_repeat.empty())
            {
                auto const probs = per_repeat.front().probs();
                cell.probs.assign(probs.begin(), probs.end());
                cell.test_loss.resize(config.repeats);
                cell.train_loss.resize(config.repeats);
            }
            cells.push_back(std::move(cell));
            modes.push_back(std::move(per_repeat));
        }
    }

    struct Job
    {
        std::size_t cell;
        std::size_t repeat;
    };
    std::vector<Job> jobs;
    for (std::size_t c = 0; c < cells.size(); ++c)
    {
        for (std::size_t r = 0; r < modes[c].size(); ++r)
        {
            jobs.push_back({c, r});
        }
    }
    parallel_for(jobs.size(), config.threads, [&](std::size_t j) {
        auto const [c, r] = jobs[j];
        NetworkParams params = inits[r];
        TrainConfig tc = config.train;
        tc.mode = modes[c][r];
        tc.seed = derive_stream({config.seed, 0x7a1, r});
        RunReport const report = train(params, train_set, &test_set, tc);
        cells[c].test_loss[r] = report.test_loss.back();
        cells[c].train_loss[r] = report.train_loss.back();
    });

    for (auto& cell : cells)
    {
        if (!cell.feasible)
        {
            continue;
        }
        double const k = static_cast<double>(cell.test_loss.size());
        cell.mean_test = std::accumulate(cell.test_loss.begin(), cell.test_loss.end(), 0.0) / k;
        double ss = 0.0;
        for (double v : cell.test_loss)
        {
            ss += (v - cell.mean_test) * (v - cell.mean_test);
        }
        cell.sd_test = k > 1 ? std::sqrt(ss / (k - 1.0)) : 0.0;
    }
    return cells;
}

}  // namespace sdepth
