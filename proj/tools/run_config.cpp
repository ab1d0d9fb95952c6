#include "run_config.hpp"

#include <fstream>

#include "sdepth/error.hpp"

namespace sdepth::cli {
namespace {

template<class T>
void read(nlohmann::json const& j, char const* key, T& field)
{
    if (j.contains(key))
    {
        field = j.at(key).get<T>();
    }
}

void read_train(nlohmann::json const& j, TrainConfig& t)
{
    read(j, "lr", t.lr);
    read(j, "momentum", t.momentum);
    read(j, "batch_size", t.batch_size);
    read(j, "epochs", t.epochs);
    read(j, "seed", t.seed);
    read(j, "divergence_factor", t.divergence_factor);
}

nlohmann::json train_json(TrainConfig const& t)
{
    return {{"lr", t.lr},
            {"momentum", t.momentum},
            {"batch_size", t.batch_size},
            {"epochs", t.epochs},
            {"seed", t.seed},
            {"divergence_factor", t.divergence_factor}};
}

}  // namespace

TrainConfig toy_train_defaults()
{
    TrainConfig t;
    t.lr = 0.003;
    return t;
}

nlohmann::json load_json(std::string const& path)
{
    std::ifstream in(path);
    SDEPTH_REQUIRE(in.good(), invalid_argument, "cannot read " + path);
    try
    {
        return nlohmann::json::parse(in);
    }
    catch (nlohmann::json::exception const& e)
    {
        throw Error(ErrorKind::invalid_argument, path + ": " + e.what());
    }
}

TrainRun train_run_from_json(nlohmann::json const& j)
{
    TrainRun run;
    read(j, "depth", run.depth);
    read(j, "width", run.width);
    read(j, "input_dim", run.input_dim);
    read(j, "n_samples", run.n_samples);
    read(j, "train_fraction", run.train_fraction);
    if (j.contains("arch"))
    {
        run.arch = parse_architecture(j.at("arch").get<std::string>());
    }
    read(j, "mode", run.mode);
    read(j, "data_seed", run.data_seed);
    read(j, "init_seed", run.init_seed);
    read_train(j.value("train", nlohmann::json::object()), run.train);
    return run;
}

nlohmann::json to_json(TrainRun const& run)
{
    return {{"depth", run.depth},
            {"width", run.width},
            {"input_dim", run.input_dim},
            {"n_samples", run.n_samples},
            {"train_fraction", run.train_fraction},
            {"arch", std::string(to_string(run.arch))},
            {"mode", run.mode},
            {"data_seed", run.data_seed},
            {"init_seed", run.init_seed},
            {"seed", run.train.seed},
            {"train", train_json(run.train)}};
}

SweepConfig sweep_from_json(nlohmann::json const& j)
{
    SweepConfig c;
    c.input_dim = 4;
    c.train = toy_train_defaults();
    read(j, "depth", c.depth);
    read(j, "width", c.width);
    read(j, "input_dim", c.input_dim);
    read(j, "n_samples", c.n_samples);
    read(j, "train_fraction", c.train_fraction);
    if (j.contains("arch"))
    {
        c.arch = parse_architecture(j.at("arch").get<std::string>());
    }
    read(j, "budgets", c.budgets);
    if (j.contains("budget_fractions"))
    {
        SDEPTH_REQUIRE(!j.contains("budgets"), invalid_argument,
                       "give either budgets or budget_fractions");
        for (double f : j.at("budget_fractions").get<std::vector<double>>())
        {
            c.budgets.push_back(f * static_cast<double>(c.depth));
        }
    }
    if (j.contains("kinds"))
    {
        c.kinds.clear();
        for (auto const& k : j.at("kinds").get<std::vector<std::string>>())
        {
            c.kinds.push_back(parse_sweep_kind(k));
        }
    }
    read(j, "repeats", c.repeats);
    read(j, "seed", c.seed);
    read(j, "p_min", c.p_min);
    if (j.contains("sense_map"))
    {
        c.sense_map = parse_sense_map(j.at("sense_map").get<std::string>());
    }
    if (j.contains("sense_method"))
    {
        c.sense_method = parse_sensitivity_method(j.at("sense_method").get<std::string>());
    }
    read(j, "threads", c.threads);
    read_train(j.value("train", nlohmann::json::object()), c.train);
    c.train.track_epochs = false;
    return c;
}

nlohmann::json to_json(SweepConfig const& c)
{
    std::vector<std::string> kinds;
    for (auto k : c.kinds)
    {
        kinds.emplace_back(to_string(k));
    }
    return {{"depth", c.depth},
            {"width", c.width},
            {"input_dim", c.input_dim},
            {"n_samples", c.n_samples},
            {"train_fraction", c.train_fraction},
            {"arch", std::string(to_string(c.arch))},
            {"budgets", c.budgets},
            {"kinds", kinds},
            {"repeats", c.repeats},
            {"seed", c.seed},
            {"p_min", c.p_min},
            {"sense_map", std::string(to_string(c.sense_map))},
            {"sense_method", std::string(to_string(c.sense_method))},
            {"threads", c.threads},
            {"train", train_json(c.train)}};
}

}  // namespace sdepth::cli
