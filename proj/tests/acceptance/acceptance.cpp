// Acceptance checks: one PASS or FAIL line per criterion, indented info lines
// below it. Exit status is the number of failures. An optional argument
// names a file that receives a copy of the report.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "oracles.hpp"
#include "sdepth/dataset.hpp"
#include "sdepth/error.hpp"
#include "sdepth/harness.hpp"
#include "sdepth/kernels.hpp"
#include "sdepth/noise.hpp"
#include "sdepth/normality.hpp"
#include "sdepth/regularization.hpp"
#include "sdepth/runtime.hpp"

using namespace sdepth;

namespace {

struct Outcome
{
    bool pass = true;
    std::vector<std::string> info;

    void require(bool cond, std::string const& what)
    {
        pass = pass && cond;
        info.push_back((cond ? "ok   " : "FAIL ") + what);
    }
    void note(std::string const& what) { info.push_back("     " + what); }
};

std::string fmt(char const* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// Shared by criteria 1-4 and 6: one weight draw per sample, all settings.
struct GrowthRun
{
    std::vector<GrowthReport> standard;  // none, uniform 0.7, linear mean 0.7
    std::vector<GrowthReport> stable;    // none, uniform 0.7, linear mean 0.7, uniform 0.5
};

GrowthRun const& growth_run()
{
    static GrowthRun const run = [] {
        std::size_t const L = 50, d = 256;
        ProfileConfig const cfg{{L, 512, d, 1}, 500, 42, 1};
        Vector const x = probe_input(d, 1);
        Vector const t = probe_target(1, 1);
        std::vector<SurvivalMode> const modes{make_uniform(L, 1.0), make_uniform(L, 0.7),
                                              make_linear_for_budget(L, 35.0), make_uniform(L, 0.5)};
        std::vector<GrowthSetting> settings;
        for (std::size_t i = 0; i < 3; ++i)
        {
            settings.push_back({Architecture::standard, modes[i]});
        }
        for (auto const& m : modes)
        {
            settings.push_back({Architecture::stable, m});
        }
        auto const all = grad_norm_profile(cfg, x, t, settings);
        GrowthRun r;
        r.standard.assign(all.begin(), all.begin() + 3);
        r.stable.assign(all.begin() + 3, all.end());
        return r;
    }();
    return run;
}

constexpr std::size_t kRateLayers[] = {0, 10, 20, 30, 40};

Outcome rate_band(GrowthReport const& rep, double lo, double hi)
{
    Outcome o;
    for (std::size_t l : kRateLayers)
    {
        auto const& row = rep.rows[l];
        o.require(row.rate_empirical >= lo && row.rate_empirical <= hi,
                  fmt("l=%zu rate %.4f (se %.4f) in [%.2f, %.2f]", l, row.rate_empirical, row.rate_se,
                      lo, hi));
    }
    return o;
}

Outcome c1()
{
    return rate_band(growth_run().standard[0], 1.95, 2.05);
}

Outcome c2()
{
    return rate_band(growth_run().standard[1], 1.65, 1.75);
}

Outcome c3()
{
    Outcome o;
    auto const& rep = growth_run().standard[2];
    std::size_t const L = rep.setting.mode.size();
    o.note(fmt("mode budget %.3f", rep.setting.mode.budget()));
    for (std::size_t l : kRateLayers)
    {
        auto const& row = rep.rows[l];
        double const theory =
            std::pow(oracle::growth_product(rep.setting.mode.probs(), l), 1.0 / static_cast<double>(L - l));
        o.require(std::fabs(row.rate_empirical - theory) <= 3 * row.rate_se,
                  fmt("l=%zu rate %.4f vs closed form %.4f, |diff| %.4f <= 3 se (%.4f)", l,
                      row.rate_empirical, theory, std::fabs(row.rate_empirical - theory),
                      3 * row.rate_se));
    }
    return o;
}

Outcome c4()
{
    Outcome o;
    char const* names[] = {"no SD", "uniform 0.7", "linear mean 0.7", "uniform 0.5"};
    for (std::size_t i = 0; i < growth_run().stable.size(); ++i)
    {
        auto const& rep = growth_run().stable[i];
        double q_max = 0;
        for (auto const& row : rep.rows)
        {
            q_max = std::max(q_max, row.q_tilde);
        }
        double const p_bar = rep.setting.mode.budget() / static_cast<double>(rep.setting.mode.size());
        double const closed = std::pow(1 + p_bar / 50.0, 50.0);
        o.require(q_max <= std::exp(1.0) * 1.1,
                  fmt("%s: max q~ %.4f <= 1.1 e; closed form (1 + p/L)^L = %.4f", names[i], q_max, closed));
    }
    return o;
}

Outcome c5()
{
    Outcome o;
    o.require(std::fabs(correlation_f(1.0) - 1.0) <= 1e-12, fmt("f(1) = %.15g", correlation_f(1.0)));
    o.require(std::fabs(correlation_f(-1.0)) <= 1e-12, fmt("f(-1) = %.3g", correlation_f(-1.0)));
    o.require(std::fabs(correlation_f(0.0) - 1 / M_PI) <= 1e-12, fmt("f(0) - 1/pi = %.3g",
                                                                      correlation_f(0.0) - 1 / M_PI));
    RngStream rng(5, 0);
    double worst = 0;
    KernelVariant const variants[] = {{Architecture::standard, false},
                                      {Architecture::stable, false},
                                      {Architecture::standard, true},
                                      {Architecture::stable, true}};
    for (int c = 0; c < 100; ++c)
    {
        std::size_t const L = 1 + static_cast<std::size_t>(rng.uniform() * 200);
        std::vector<double> probs(L);
        for (auto& p : probs)
        {
            p = rng.uniform();
        }
        auto const mode = make_custom(probs);
        std::vector<double> x(6);
        rng.fill_normal(x.data(), 6, 1.0);
        double q0 = 0;
        for (double v : x)
        {
            q0 += 2 * v * v / 6;
        }
        for (auto const& v : variants)
        {
            auto const states = kernel_forward(x, x, mode, v);
            for (std::size_t l = 0; l <= L; ++l)
            {
                double const closed = diagonal_closed_form(v, mode, l, q0);
                worst = std::max(worst, std::fabs(closed - states[l].q_xx) / std::fabs(closed));
            }
        }
    }
    o.require(worst <= 1e-12, fmt("100 cases x 4 variants, max rel. gap closed form vs recursion %.3g", worst));
    return o;
}

Outcome c6()
{
    Outcome o;
    char const* names[] = {"no SD", "uniform 0.7", "linear mean 0.7", "uniform 0.5"};
    for (std::size_t i = 0; i < growth_run().stable.size(); ++i)
    {
        auto const& rep = growth_run().stable[i];
        KernelVariant const v{Architecture::stable, true};
        double worst = 0;
        std::size_t at = 0;
        for (auto const& row : rep.rows)
        {
            double const q = diagonal_closed_form(v, rep.setting.mode, row.layer, 2.0);
            double const gap = std::fabs(row.forward_q - q) / q;
            if (gap > worst)
            {
                worst = gap;
                at = row.layer;
            }
        }
        o.require(worst <= 0.05, fmt("stable, %s: max rel. gap %.4f at l=%zu", names[i], worst, at));
    }
    // Standard scaling carries a finite-width bias that compounds with depth.
    auto const& std_rep = growth_run().standard[1];
    double const q = diagonal_closed_form({Architecture::standard, true}, std_rep.setting.mode, 50, 2.0);
    o.note(fmt("standard, uniform 0.7 (not gated): l=50 MC %.4g vs recursion %.4g, rel. gap %.3f",
               std_rep.rows[50].forward_q, q, std::fabs(std_rep.rows[50].forward_q - q) / q));
    return o;
}

Outcome c7()
{
    Outcome o;
    RngStream rng(7, 0);
    double worst_gap = 0, worst_budget = 0, below = 0;
    for (int c = 0; c < 50; ++c)
    {
        std::size_t const L = 1 + static_cast<std::size_t>(rng.uniform() * 6);
        std::vector<double> g(L);
        for (auto& v : g)
        {
            v = 0.1 + 1.9 * rng.uniform();
        }
        double const budget = rng.uniform() * static_cast<double>(L);
        auto const sol = max_reg_mode(g, budget);
        double const obj = reg_objective(sol.mode, g);
        double const grid = oracle::grid_max_objective(g, budget);
        worst_gap = std::max(worst_gap, std::fabs(obj - grid));
        below = std::max(below, grid - obj);
        worst_budget = std::max(worst_budget, std::fabs(sol.mode.budget() - budget));
    }
    o.require(worst_gap <= 1e-4, fmt("max |objective - grid oracle| %.3g over 50 instances", worst_gap));
    o.require(below <= 1e-12, fmt("grid oracle never beats the solver (excess %.3g)", below));
    o.require(worst_budget <= 1e-9, fmt("max budget error %.3g", worst_budget));
    bool half = true;
    for (std::size_t L : {1u, 2u, 5u, 6u})
    {
        std::vector<double> g(L);
        for (auto& v : g)
        {
            v = 0.1 + rng.uniform();
        }
        auto const sol = max_reg_mode(g, 0.5 * static_cast<double>(L));
        for (std::size_t l = 0; l < L; ++l)
        {
            half = half && sol.mode[l] == 0.5;
        }
    }
    o.require(half, "budget L/2 returns exactly 1/2 everywhere");
    return o;
}

double mean_g_spread(Architecture arch, std::size_t N)
{
    std::size_t const L = 50, d = 64, o = 32, draws = 500;
    Dataset data;
    data.inputs.resize(d, 2);
    RngStream rng(7, 1);
    rng.fill_normal(data.inputs.data(), 2 * d, 1.0);
    data.targets = Matrix::Zero(o, 2);
    std::vector<double> mean(L, 0.0);
    NetworkParams p;
    for (std::size_t w = 0; w < draws; ++w)
    {
        init_he(p, {L, N, d, o}, arch, 1, w);
        auto const c = reg_coefficients(p, data);
        for (std::size_t l = 0; l < L; ++l)
        {
            mean[l] += c.g[l] / static_cast<double>(draws);
        }
    }
    return oracle::relative_spread(mean);
}

Outcome c8()
{
    Outcome o;
    std::vector<double> spread;
    for (std::size_t N : {128u, 256u, 512u})
    {
        spread.push_back(mean_g_spread(Architecture::standard, N));
        o.note(fmt("standard N=%zu: spread %.4f", N, spread.back()));
    }
    o.require(spread[2] < 0.05, fmt("standard N=512 spread %.4f < 0.05", spread[2]));
    o.require(spread[0] > spread[1] && spread[1] > spread[2], "spread shrinks over N = 128, 256, 512");
    std::vector<double> st;
    for (std::size_t N : {128u, 256u, 512u})
    {
        st.push_back(mean_g_spread(Architecture::stable, N));
    }
    o.note(fmt("stable (not gated): spread %.4f, %.4f, %.4f", st[0], st[1], st[2]));
    return o;
}

Outcome c9()
{
    Outcome o;
    std::size_t const L = 100, n = 100000;
    for (double frac : {0.3, 0.5, 0.7})
    {
        double const budget = frac * L;
        std::vector<std::pair<char const*, SurvivalMode>> modes{{"uniform", make_uniform(L, frac)}};
        try
        {
            modes.emplace_back("linear", make_linear_for_budget(L, budget));
        }
        catch (Error const& e)
        {
            o.note(fmt("linear at %.0f: infeasible (floor %.1f)", budget, linear_budget_floor(L)));
        }
        for (auto const& [name, mode] : modes)
        {
            RngStream rng(9, derive_stream({static_cast<std::uint64_t>(budget), name[0] == 'u'}));
            std::vector<std::size_t> depth(n);
            for (auto& v : depth)
            {
                v = sample_mask(mode, rng).realized_depth();
            }
            for (double beta : {0.01, 0.05})
            {
                double const bound = depth_deviation_bound(mode, beta);
                std::size_t exceed = 0;
                for (auto v : depth)
                {
                    exceed += std::fabs(static_cast<double>(v) - budget) > bound;
                }
                double const freq = static_cast<double>(exceed) / n;
                o.require(freq <= beta, fmt("%s budget %.0f beta %.2f: bound %.3f, exceedance %.5f", name,
                                            budget, beta, bound, freq));
            }
        }
        if (modes.size() == 2)
        {
            for (double beta : {0.01, 0.05})
            {
                double const bu = depth_deviation_bound(modes[0].second, beta);
                double const bl = depth_deviation_bound(modes[1].second, beta);
                o.require(bu >= bl, fmt("budget %.0f beta %.2f: uniform bound %.3f >= linear %.3f", budget,
                                        beta, bu, bl));
            }
        }
    }
    return o;
}

Outcome c10()
{
    Outcome o;
    std::vector<double> med_sw, med_k2;
    for (std::size_t L : {4u, 100u})
    {
        auto const p = init_he({L, 128, 32, 1}, Architecture::stable, 1);
        auto const mode = make_uniform(L, 0.7);
        std::vector<double> sw, k2;
        for (std::size_t i = 0; i < 100; ++i)
        {
            auto const s = sample_preactivation(p, probe_input(32, 1000 + i), L, 0, mode, 200, i);
            sw.push_back(shapiro_wilk(s.values).p_value);
            k2.push_back(dagostino_k2(s.values).p_value);
        }
        med_sw.push_back(oracle::median(sw));
        med_k2.push_back(oracle::median(k2));
    }
    o.require(med_sw[1] > 0.05, fmt("L=100 median Shapiro-Wilk p %.4f > 0.05", med_sw[1]));
    o.require(med_sw[0] < 0.05, fmt("L=4 median Shapiro-Wilk p %.3g < 0.05", med_sw[0]));
    o.require(med_k2[1] > 0.05, fmt("L=100 median K^2 p %.4f > 0.05", med_k2[1]));
    o.require(med_k2[0] < 0.05, fmt("L=4 median K^2 p %.3g < 0.05", med_k2[0]));

    std::ifstream in(SDEPTH_TEST_DATA "/normality_reference.json");
    auto const doc = nlohmann::json::parse(in);
    double worst = 0;
    for (auto const& c : doc["cases"])
    {
        auto const x = c["x"].get<std::vector<double>>();
        auto const sw = shapiro_wilk(x);
        worst = std::max({worst, std::fabs(sw.statistic - c["shapiro_w"].get<double>()),
                          std::fabs(sw.p_value - c["shapiro_p"].get<double>())});
        if (c.contains("k2"))
        {
            auto const k2 = dagostino_k2(x);
            worst = std::max({worst, std::fabs(k2.statistic - c["k2"].get<double>()),
                              std::fabs(k2.p_value - c["k2_p"].get<double>())});
        }
    }
    o.require(worst <= 1e-3, fmt("%zu pinned vectors vs reference, max abs. gap %.3g", doc["cases"].size(), worst));
    return o;
}

Outcome c11()
{
    Outcome o;
    std::vector<std::size_t> const depths{8, 16, 32, 64, 128};
    auto const prof = lindeberg_profile(depths, 128, 32, Architecture::stable, 20, 11);
    std::vector<double> ls, ratio;
    std::string row;
    for (auto const& pt : prof)
    {
        ls.push_back(static_cast<double>(pt.depth));
        ratio.push_back(pt.mean_ratio);
        row += fmt(" L=%zu: %.4f", pt.depth, pt.mean_ratio);
    }
    o.note("mean ratio over 20 seeds:" + row);
    double const rho = oracle::spearman(ls, ratio);
    o.require(rho < -0.8, fmt("Spearman rho %.3f < -0.8", rho));
    return o;
}

Outcome c12()
{
    Outcome o;
    auto const data = toy_dataset(256, 4, 1);
    auto const mode = make_uniform(50, 0.8);
    for (std::uint64_t seed : {1u, 2u, 3u})
    {
        auto const p = init_he({50, 128, 4, 1}, Architecture::stable, seed);
        auto const d = loss_decomposition(p, data, mode, 400, seed);
        double const factor = d.ratio_unpenalized / d.ratio_penalized;
        o.require(factor >= 2,
                  fmt("stable seed %llu: |(L-Lbar)/L| %.4f, |(L-Lbar-pen)/L| %.4f, factor %.2f (sd-loss se %.2g)",
                      static_cast<unsigned long long>(seed), d.ratio_unpenalized, d.ratio_penalized, factor,
                      d.sd_loss_se));
    }
    auto const ps = init_he({50, 128, 4, 1}, Architecture::standard, 1);
    auto const d = loss_decomposition(ps, data, mode, 400, 1);
    o.note(fmt("standard seed 1 (not gated): ratios %.4f / %.4g", d.ratio_unpenalized, d.ratio_penalized));
    return o;
}

Outcome c13()
{
    Outcome o;
    SweepConfig c;
    c.depth = 50;
    c.width = 128;
    c.input_dim = 4;
    c.n_samples = 4096;
    c.budgets = {5, 10, 40, 45};
    c.kinds = {SweepKind::uniform, SweepKind::sense};
    c.repeats = 4;
    c.seed = 1;
    c.train.lr = 0.003;
    c.train.epochs = 20;
    c.train.track_epochs = false;
    auto const cells = budget_sweep(c);
    auto cell = [&](double b, SweepKind k) -> SweepCell const& {
        return *std::find_if(cells.begin(), cells.end(),
                             [&](SweepCell const& x) { return x.budget == b && x.kind == k; });
    };
    for (auto const& x : cells)
    {
        o.note(fmt("budget %2.0f %-7s test %.5f +- %.5f", x.budget, std::string(to_string(x.kind)).c_str(),
                   x.mean_test, x.sd_test));
    }
    // better should have the lower loss; intervals are mean +- 1 sd
    auto ordering = [&](double b, SweepKind better, SweepKind worse, char const* label) {
        auto const& a = cell(b, better);
        auto const& w = cell(b, worse);
        bool const holds = a.mean_test <= w.mean_test;
        bool const separated = holds ? a.mean_test + a.sd_test < w.mean_test - w.sd_test
                                     : w.mean_test + w.sd_test < a.mean_test - a.sd_test;
        std::string const verdict = separated ? (holds ? "holds" : "reversed") : "inconclusive (intervals overlap)";
        o.require(holds || !separated, fmt("%s at budget %.0f: %s", label, b, verdict.c_str()));
    };
    ordering(10, SweepKind::sense, SweepKind::uniform, "sense <= uniform");
    ordering(40, SweepKind::uniform, SweepKind::sense, "uniform <= sense");
    double const hi = cell(45, SweepKind::uniform).mean_test;
    double const lo = cell(5, SweepKind::uniform).mean_test;
    o.require(hi < lo, fmt("uniform trade-off: 0.9L %.5f < 0.1L %.5f", hi, lo));
    return o;
}

Outcome c14()
{
    Outcome o;
    RngStream rng(14, 0);
    oracle::FdReport total;
    double zeta = 0;
    for (int c = 0; c < 100; ++c)
    {
        auto const r = oracle::backward_fd_case(rng, 1e-4, static_cast<std::uint64_t>(c));
        total.max_rel = std::max(total.max_rel, r.max_rel);
        total.checked += r.checked;
        total.skipped += r.skipped;
        zeta = std::max(zeta, oracle::zeta_dual_case(rng, 1000 + static_cast<std::uint64_t>(c)));
    }
    o.require(total.max_rel <= 1e-4, fmt("backward vs central differences: max rel. error %.3g over %zu "
                                         "coordinates (%zu skipped at ReLU kinks)",
                                         total.max_rel, total.checked, total.skipped));
    o.require(zeta <= 1e-10, fmt("zeta forward vs reverse mode: max rel. gap %.3g", zeta));
    return o;
}

}  // namespace

int main(int argc, char** argv)
{
    tune_allocator();
    std::FILE* copy = argc > 1 ? std::fopen(argv[1], "w") : nullptr;
    auto emit = [&](std::string const& line) {
        std::fputs(line.c_str(), stdout);
        std::fflush(stdout);
        if (copy)
        {
            std::fputs(line.c_str(), copy);
            std::fflush(copy);
        }
    };
    std::vector<std::pair<char const*, std::function<Outcome()>>> const criteria{
        {"gradient growth, standard, no SD", c1},
        {"gradient growth, standard, uniform 0.7", c2},
        {"gradient growth, standard, linear mode vs closed form", c3},
        {"stable variant stays bounded", c4},
        {"kernel closed forms vs recursion", c5},
        {"kernel recursion vs network Monte Carlo", c6},
        {"maximal-regularization mode vs grid oracle", c7},
        {"penalty coefficients flatten with width", c8},
        {"realized-depth bound coverage", c9},
        {"normality onset with depth", c10},
        {"dominant-term ratio falls with depth", c11},
        {"loss decomposition at init", c12},
        {"budget ordering on the toy task", c13},
        {"autodiff correctness", c14},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i)
    {
        auto const t0 = std::chrono::steady_clock::now();
        Outcome out;
        try
        {
            out = criteria[i].second();
        }
        catch (std::exception const& e)
        {
            out.require(false, std::string("exception: ") + e.what());
        }
        double const secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        emit(fmt("%s %2zu  %s  (%.1fs)\n", out.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, secs));
        for (auto const& line : out.info)
        {
            emit("        " + line + "\n");
        }
        failures += !out.pass;
    }
    emit(fmt("%d of %zu criteria failed\n", failures, criteria.size()));
    if (copy)
    {
        std::fclose(copy);
    }
    return failures;
}
