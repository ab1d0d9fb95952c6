// sdepth command-line front end. Every tabular result is CSV with a JSON
// metadata sidecar; see --help of each subcommand.

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "output.hpp"
#include "run_config.hpp"
#include "sdepth/dataset.hpp"
#include "sdepth/error.hpp"
#include "sdepth/harness.hpp"
#include "sdepth/kernels.hpp"
#include "sdepth/modes.hpp"
#include "sdepth/network.hpp"
#include "sdepth/noise.hpp"
#include "sdepth/normality.hpp"
#include "sdepth/regularization.hpp"
#include "sdepth/runtime.hpp"
#include "sdepth/sensemode.hpp"

using nlohmann::json;
using namespace sdepth;
using sdepth::cli::Output;

namespace {

json mode_json(SurvivalMode const& mode)
{
    auto const p = mode.probs();
    return {{"kind", std::string(to_string(mode.kind()))},
            {"probs", std::vector<double>(p.begin(), p.end())},
            {"budget", mode.budget()},
            {"variance", mode.variance()}};
}

std::vector<std::vector<double>> read_csv_rows(std::string const& path)
{
    std::ifstream in(path);
    SDEPTH_REQUIRE(in.good(), invalid_argument, "cannot read " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line))
    {
        if (line.empty() || line[0] == '#')
        {
            continue;
        }
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        bool numeric = true;
        while (std::getline(ss, cell, ','))
        {
            try
            {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
            }
            catch (std::exception const&)
            {
                numeric = false;
                break;
            }
        }
        if (numeric && !row.empty())
        {
            rows.push_back(std::move(row));  // non-numeric lines are headers
        }
    }
    return rows;
}

KernelVariant parse_variant(std::string const& text)
{
    if (text == "standard" || text == "standard-sd")
    {
        return {Architecture::standard, text == "standard-sd"};
    }
    if (text == "stable" || text == "stable-sd")
    {
        return {Architecture::stable, text == "stable-sd"};
    }
    throw Error(ErrorKind::invalid_argument, "unknown kernel variant '" + text + "'");
}

// Shared network/data options.
struct NetOpts
{
    std::size_t L = 50;
    std::size_t N = 128;
    std::size_t d = 8;
    std::size_t o = 1;
    std::size_t n = 64;
    std::string arch = "stable";
    std::uint64_t seed = 0;
    unsigned threads = 1;

    void add(CLI::App* app, bool with_data)
    {
        app->add_option("--L", L, "depth (number of blocks)")->capture_default_str();
        app->add_option("--N", N, "width")->capture_default_str();
        app->add_option("--d", d, "input dimension")->capture_default_str();
        app->add_option("--o", o, "output dimension")->capture_default_str();
        if (with_data)
        {
            app->add_option("--n", n, "number of toy-task inputs")->capture_default_str();
        }
        app->add_option("--arch,--variant", arch, "standard | stable")->capture_default_str();
        app->add_option("--seed", seed, "seed")->capture_default_str();
        app->add_option("--threads", threads, "worker threads")->capture_default_str();
    }

    json to_json() const
    {
        return {{"L", L}, {"N", N}, {"d", d}, {"o", o}, {"n", n}, {"arch", arch}, {"seed", seed}};
    }

    NetworkParams params() const { return init_he({L, N, d, o}, parse_architecture(arch), seed, 0); }

    //! Toy inputs with o-dimensional targets (sin of o random directions when o > 1).
    Dataset data() const
    {
        Dataset base = toy_dataset(n, d, seed);
        if (o == 1)
        {
            return base;
        }
        Matrix dirs(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(d));
        RngStream rng(seed, derive_stream({0xda7a, o}));
        rng.fill_normal(dirs.data(), o * d, 1.0);
        base.targets = (dirs * base.inputs).array().sin().matrix();
        return base;
    }
};

void add_out(CLI::App* app, std::string& out)
{
    app->add_option("--out", out, "output path, - for stdout")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv)
{
    tune_allocator();
    CLI::App app{"Stochastic depth analysis toolkit"};
    app.require_subcommand(1);
    std::string out = "-";

    // modes ---------------------------------------------------------------
    auto* modes = app.add_subcommand("modes", "survival modes and realized-depth bounds");
    modes->require_subcommand(1);
    std::size_t m_L = 50;
    double m_p = 0.7, m_beta = 0.05, m_budget = 35;
    std::string m_spec, m_kind = "uniform";
    auto* m_bound = modes->add_subcommand("bound", "concentration bound of a mode");
    m_bound->add_option("--L", m_L)->capture_default_str();
    m_bound->add_option("--p", m_p, "uniform survival probability")->capture_default_str();
    m_bound->add_option("--mode-spec", m_spec, "mode spec, overrides --p");
    m_bound->add_option("--beta", m_beta)->capture_default_str();
    add_out(m_bound, out);
    auto* m_plan = modes->add_subcommand("plan", "mode for a budget");
    m_plan->add_option("--L", m_L)->capture_default_str();
    m_plan->add_option("--budget", m_budget)->capture_default_str();
    m_plan->add_option("--kind", m_kind, "uniform | linear")->capture_default_str();
    m_plan->add_option("--beta", m_beta)->capture_default_str();
    add_out(m_plan, out);

    // gradnorm ------------------------------------------------------------
    auto* gradnorm = app.add_subcommand("gradnorm", "gradient growth profile at initialization");
    NetOpts g_net;
    g_net.N = 512;
    g_net.d = 64;
    g_net.arch = "standard";
    std::size_t g_mc = 500;
    std::vector<std::string> g_specs;
    g_net.add(gradnorm, false);
    gradnorm->add_option("--mode-spec", g_specs, "mode spec, repeatable; none for no SD");
    gradnorm->add_option("--mc", g_mc, "Monte Carlo samples")->capture_default_str();
    add_out(gradnorm, out);

    // kernel --------------------------------------------------------------
    auto* kernel = app.add_subcommand("kernel", "infinite-width kernel recursion");
    std::string k_variant = "standard-sd", k_spec = "uniform:1", k_inputs;
    std::size_t k_L = 50, k_d = 16;
    std::uint64_t k_seed = 0;
    kernel->add_option("--variant", k_variant, "standard | stable | standard-sd | stable-sd")
        ->capture_default_str();
    kernel->add_option("--L", k_L)->capture_default_str();
    kernel->add_option("--mode-spec", k_spec)->capture_default_str();
    kernel->add_option("--inputs", k_inputs, "CSV with the two inputs as rows");
    kernel->add_option("--d", k_d, "random input dimension when --inputs is absent")
        ->capture_default_str();
    kernel->add_option("--seed", k_seed)->capture_default_str();
    add_out(kernel, out);

    // reg -----------------------------------------------------------------
    auto* reg = app.add_subcommand("reg", "explicit regularization");
    reg->require_subcommand(1);
    NetOpts r_net;
    r_net.N = 256;
    auto* r_coeffs = reg->add_subcommand("coeffs", "penalty coefficients g_l");
    r_net.add(r_coeffs, true);
    add_out(r_coeffs, out);
    auto* r_max = reg->add_subcommand("maxmode", "budget-constrained maximal-penalty mode");
    std::string r_file;
    double r_budget = 25;
    r_max->add_option("--coeffs", r_file, "CSV (l, g_l) as written by reg coeffs")->required();
    r_max->add_option("--budget", r_budget)->required();
    add_out(r_max, out);
    auto* r_dec = reg->add_subcommand("decompose", "second-order loss decomposition");
    std::string r_spec = "uniform:0.8";
    std::size_t r_mc = 2000;
    r_net.add(r_dec, true);
    r_dec->add_option("--mode-spec", r_spec)->capture_default_str();
    r_dec->add_option("--mc", r_mc)->capture_default_str();
    add_out(r_dec, out);

    // noise ---------------------------------------------------------------
    auto* noise = app.add_subcommand("noise", "noise-injection diagnostics");
    noise->require_subcommand(1);
    std::vector<std::size_t> n_depths{4, 8, 16, 32, 64, 100};
    NetOpts n_net;
    std::string n_spec_p = "0.7";
    std::size_t n_inputs = 20, n_masks = 200, n_seeds = 20;
    auto* n_norm = noise->add_subcommand("normality", "normality of sampled preactivations");
    n_net.add(n_norm, false);
    n_norm->add_option("--depths", n_depths)->delimiter(',')->capture_default_str();
    n_norm->add_option("--p", n_spec_p, "uniform survival probability")->capture_default_str();
    n_norm->add_option("--inputs", n_inputs)->capture_default_str();
    n_norm->add_option("--masks", n_masks)->capture_default_str();
    add_out(n_norm, out);
    auto* n_lind = noise->add_subcommand("lindeberg", "dominant-term ratio vs depth");
    n_net.add(n_lind, false);
    n_lind->add_option("--depths", n_depths)->delimiter(',')->capture_default_str();
    n_lind->add_option("--seeds", n_seeds)->capture_default_str();
    add_out(n_lind, out);

    // sense ---------------------------------------------------------------
    auto* sense = app.add_subcommand("sense", "sensitivity-based mode");
    NetOpts s_net;
    s_net.n = 512;
    double s_budget = 25, s_pmin = 0.1;
    std::string s_method = "gradient", s_map = "proportional", s_csv;
    s_net.add(sense, true);
    sense->add_option("--budget", s_budget)->capture_default_str();
    sense->add_option("--p-min", s_pmin)->capture_default_str();
    sense->add_option("--method", s_method, "gradient | leave-one-out")->capture_default_str();
    sense->add_option("--map", s_map, "proportional | affine")->capture_default_str();
    sense->add_option("--csv", s_csv, "also write (l, S_l, p_l) to this CSV path");
    add_out(sense, out);

    // train / sweep ---------------------------------------------------------
    auto* train_cmd = app.add_subcommand("train", "train on the toy task from a JSON run config");
    std::string t_config;
    train_cmd->add_option("--config", t_config, "run config JSON (defaults when absent)");
    add_out(train_cmd, out);
    auto* sweep = app.add_subcommand("sweep", "budget sweep from a JSON config");
    std::string w_config;
    sweep->add_option("--config", w_config, "sweep config JSON")->required();
    add_out(sweep, out);

    try
    {
        app.parse(argc, argv);
    }
    catch (CLI::ParseError const& e)
    {
        int const code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try
    {
        if (m_bound->parsed() || m_plan->parsed())
        {
            SurvivalMode mode = make_uniform(1, 1.0);
            json config{{"L", m_L}, {"beta", m_beta}};
            if (m_bound->parsed())
            {
                mode = m_spec.empty() ? make_uniform(m_L, m_p) : parse_mode_spec(m_spec, m_L);
                config["mode"] = m_spec.empty() ? "uniform:" + std::to_string(m_p) : m_spec;
            }
            else
            {
                SDEPTH_REQUIRE(m_kind == "uniform" || m_kind == "linear", invalid_argument,
                               "plan kind must be uniform or linear");
                mode = parse_mode_spec("budget-" + m_kind + ":" + std::to_string(m_budget), m_L);
                config["budget"] = m_budget;
                config["kind"] = m_kind;
            }
            json doc = mode_json(mode);
            doc["beta"] = m_beta;
            doc["bound"] = depth_deviation_bound(mode, m_beta);
            cli::write_json(out, "modes", config, doc);
        }
        else if (gradnorm->parsed())
        {
            if (g_specs.empty())
            {
                g_specs = {"none"};
            }
            Architecture const arch = parse_architecture(g_net.arch);
            std::vector<GrowthSetting> settings;
            for (auto const& s : g_specs)
            {
                settings.push_back({arch, s == "none" ? make_uniform(g_net.L, 1.0)
                                                      : parse_mode_spec(s, g_net.L)});
            }
            ProfileConfig pc{{g_net.L, g_net.N, g_net.d, g_net.o}, g_mc, g_net.seed, g_net.threads};
            auto const reports = grad_norm_profile(pc, probe_input(g_net.d, g_net.seed),
                                                   probe_target(g_net.o, g_net.seed), settings);
            json config = g_net.to_json();
            config["mc"] = g_mc;
            config["modes"] = g_specs;
            Output csv(out, "gradnorm", config);
            csv.header({"mode", "l", "q_tilde", "q_tilde_se", "rate_empirical", "rate_se",
                        "rate_theoretical", "q_theoretical", "forward_q"});
            for (std::size_t s = 0; s < reports.size(); ++s)
            {
                for (auto const& r : reports[s].rows)
                {
                    csv.row(g_specs[s], r.layer, r.q_tilde, r.q_tilde_se, r.rate_empirical, r.rate_se,
                            r.rate_theoretical, r.q_theoretical, r.forward_q);
                }
            }
        }
        else if (kernel->parsed())
        {
            KernelVariant const variant = parse_variant(k_variant);
            SurvivalMode const mode = parse_mode_spec(k_spec, k_L);
            std::vector<double> x, xp;
            if (!k_inputs.empty())
            {
                auto rows = read_csv_rows(k_inputs);
                SDEPTH_REQUIRE(rows.size() == 2 && rows[0].size() == rows[1].size(), invalid_argument,
                               "inputs CSV must hold two rows of equal length");
                x = rows[0];
                xp = rows[1];
            }
            else
            {
                Vector const a = probe_input(k_d, k_seed);
                Vector const b = probe_input(k_d, k_seed + 1);
                x.assign(a.data(), a.data() + a.size());
                xp.assign(b.data(), b.data() + b.size());
            }
            auto const states = kernel_forward(x, xp, mode, variant);
            json config{{"variant", k_variant}, {"L", k_L}, {"mode", k_spec}, {"seed", k_seed},
                        {"inputs", k_inputs.empty() ? json("random") : json(k_inputs)}};
            Output csv(out, "kernel", config);
            csv.header({"l", "q_xx", "q_yy", "q_xy", "c", "closed_form_diag"});
            for (auto const& s : states)
            {
                csv.row(s.layer, s.q_xx, s.q_yy, s.q_xy, s.c,
                        diagonal_closed_form(variant, mode, s.layer, states.front().q_xx));
            }
        }
        else if (r_coeffs->parsed())
        {
            auto const coeffs = reg_coefficients(r_net.params(), r_net.data());
            Output csv(out, "reg coeffs", r_net.to_json());
            csv.header({"l", "g"});
            for (std::size_t l = 0; l < coeffs.g.size(); ++l)
            {
                csv.row(l + 1, coeffs.g[l]);
            }
        }
        else if (r_max->parsed())
        {
            std::vector<double> g;
            for (auto const& row : read_csv_rows(r_file))
            {
                g.push_back(row.back());
            }
            auto const sol = max_reg_mode(g, r_budget);
            json doc = mode_json(sol.mode);
            doc["multiplier"] = sol.multiplier;
            doc["penalty"] = penalty(sol.mode, g);
            cli::write_json(out, "reg maxmode", {{"coeffs", r_file}, {"budget", r_budget}}, doc);
        }
        else if (r_dec->parsed())
        {
            auto const d = loss_decomposition(r_net.params(), r_net.data(),
                                              parse_mode_spec(r_spec, r_net.L), r_mc, r_net.seed,
                                              r_net.threads);
            json config = r_net.to_json();
            config["mode"] = r_spec;
            config["mc"] = r_mc;
            json doc{{"sd_loss", d.sd_loss},
                     {"sd_loss_se", d.sd_loss_se},
                     {"avg_loss", d.avg_loss},
                     {"penalty", d.penalty},
                     {"ratio_unpenalized", d.ratio_unpenalized},
                     {"ratio_penalized", d.ratio_penalized},
                     {"n_mc", d.n_mc}};
            cli::write_json(out, "reg decompose", config, doc);
        }
        else if (n_norm->parsed())
        {
            json config = n_net.to_json();
            config["depths"] = n_depths;
            config["p"] = n_spec_p;
            config["inputs"] = n_inputs;
            config["masks"] = n_masks;
            Output csv(out, "noise normality", config);
            csv.header({"L", "input", "test", "statistic", "p_value"});
            Architecture const arch = parse_architecture(n_net.arch);
            for (std::size_t depth : n_depths)
            {
                NetworkParams const params = init_he({depth, n_net.N, n_net.d, 1}, arch, n_net.seed, depth);
                SurvivalMode const mode = parse_mode_spec("uniform:" + n_spec_p, depth);
                for (std::size_t i = 0; i < n_inputs; ++i)
                {
                    Vector const x = probe_input(n_net.d, derive_stream({n_net.seed, i}));
                    auto const s = sample_preactivation(params, x, depth, 0, mode, n_masks,
                                                        derive_stream({n_net.seed, depth, i}), false,
                                                        n_net.threads);
                    for (auto const& r : {shapiro_wilk(s.values), dagostino_k2(s.values)})
                    {
                        csv.row(depth, i, std::string(to_string(r.test)), r.statistic, r.p_value);
                    }
                }
            }
        }
        else if (n_lind->parsed())
        {
            json config = n_net.to_json();
            config["depths"] = n_depths;
            config["seeds"] = n_seeds;
            auto const points = lindeberg_profile(n_depths, n_net.N, n_net.d,
                                                  parse_architecture(n_net.arch), n_seeds, n_net.seed,
                                                  n_net.threads);
            Output csv(out, "noise lindeberg", config);
            csv.header({"L", "statistic", "se"});
            for (auto const& p : points)
            {
                csv.row(p.depth, p.mean_ratio, p.se_ratio);
            }
        }
        else if (sense->parsed())
        {
            auto const s = sensitivities(s_net.params(), s_net.data(),
                                         parse_sensitivity_method(s_method), s_net.threads);
            SurvivalMode const mode = sensemode(s, s_budget, s_pmin, parse_sense_map(s_map));
            json config = s_net.to_json();
            config["budget"] = s_budget;
            config["p_min"] = s_pmin;
            config["method"] = s_method;
            config["map"] = s_map;
            json doc = mode_json(mode);
            doc["sensitivities"] = s.s;
            cli::write_json(out, "sense", config, doc);
            if (!s_csv.empty())
            {
                Output csv(s_csv, "sense", config);
                csv.header({"l", "S", "p"});
                for (std::size_t l = 0; l < s.s.size(); ++l)
                {
                    csv.row(l + 1, s.s[l], mode[l]);
                }
            }
        }
        else if (train_cmd->parsed())
        {
            cli::TrainRun run = t_config.empty() ? cli::TrainRun{}
                                                 : cli::train_run_from_json(cli::load_json(t_config));
            if (run.mode != "none")
            {
                run.train.mode = parse_mode_spec(run.mode, run.depth);
            }
            Dataset const data = toy_dataset(run.n_samples, run.input_dim, run.data_seed);
            auto const [train_set, test_set] = split(data, run.train_fraction);
            NetworkParams params =
                init_he({run.depth, run.width, run.input_dim, 1}, run.arch, run.init_seed, 0);
            RunReport const report = train(params, train_set, &test_set, run.train);
            Output csv(out, "train", cli::to_json(run));
            csv.meta() = {{"iterations", report.iterations},
                          {"depth_mean", report.depth_mean},
                          {"depth_min", report.depth_min},
                          {"depth_max", report.depth_max},
                          {"params_digest", report.params_digest}};
            csv.header({"epoch", "train_loss", "test_loss"});
            for (std::size_t e = 0; e < report.train_loss.size(); ++e)
            {
                csv.row(e, report.train_loss[e], report.test_loss[e]);
            }
        }
        else if (sweep->parsed())
        {
            SweepConfig const config = cli::sweep_from_json(cli::load_json(w_config));
            auto const cells = budget_sweep(config);
            Output csv(out, "sweep", cli::to_json(config));
            csv.header({"budget", "kind", "feasible", "repeats", "mean_test", "sd_test"});
            for (auto const& c : cells)
            {
                if (c.feasible)
                {
                    csv.row(c.budget, std::string(to_string(c.kind)), "yes", c.test_loss.size(),
                            c.mean_test, c.sd_test);
                }
                else
                {
                    csv.row(c.budget, std::string(to_string(c.kind)), "no", std::size_t{0}, "", "");
                }
            }
        }
    }
    catch (Error const& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        bool const infeasible = e.kind() == ErrorKind::infeasible_budget
                                || e.kind() == ErrorKind::zero_coefficient;
        return infeasible ? 2 : 1;
    }
    catch (std::exception const& e)
    {
        std::cerr << "internal error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
