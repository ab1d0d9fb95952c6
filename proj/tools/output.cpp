#include "output.hpp"

#include <cstdio>
#include <iostream>

#include "sdepth/error.hpp"

#ifndef SDEPTH_VERSION
#define SDEPTH_VERSION "unknown"
#endif

namespace sdepth::cli {
namespace {

nlohmann::json sidecar(std::string const& command, nlohmann::json const& config,
                       nlohmann::json const& extra)
{
    nlohmann::json meta = {{"command", command},
                           {"version", SDEPTH_VERSION},
                           {"seed", config.value("seed", nlohmann::json())},
                           {"config", config},
                           {"config_hash", config_hash(config)}};
    for (auto const& [key, value] : extra.items())
    {
        meta[key] = value;
    }
    return meta;
}

void emit_sidecar(std::string const& path, nlohmann::json const& meta)
{
    if (path == "-")
    {
        std::cerr << meta.dump() << '\n';
        return;
    }
    std::ofstream out(path + ".meta.json");
    SDEPTH_REQUIRE(out.good(), invalid_argument, "cannot write " + path + ".meta.json");
    out << meta.dump(2) << '\n';
}

}  // namespace

std::string config_hash(nlohmann::json const& config)
{
    std::string const text = config.dump();  // object keys are kept sorted
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text)
    {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Output::Output(std::string path, std::string command, nlohmann::json config)
    : path_(std::move(path)), command_(std::move(command)), config_(std::move(config))
{
    if (path_ != "-")
    {
        file_ = std::make_unique<std::ofstream>(path_);
        SDEPTH_REQUIRE(file_->good(), invalid_argument, "cannot write " + path_);
    }
    stream().precision(17);
}

Output::~Output()
{
    stream().flush();
    try
    {
        emit_sidecar(path_, sidecar(command_, config_, extra_));
    }
    catch (...)
    {
        std::cerr << "warning: metadata sidecar not written\n";
    }
}

std::ostream& Output::stream()
{
    return file_ ? static_cast<std::ostream&>(*file_) : std::cout;
}

void Output::separator(std::size_t i)
{
    if (i > 0)
    {
        stream() << ',';
    }
}

void Output::header(std::vector<std::string> const& columns)
{
    for (std::size_t i = 0; i < columns.size(); ++i)
    {
        write_cell(columns[i], i);
    }
    stream() << '\n';
}

void Output::write_cell(double v, std::size_t i)
{
    separator(i);
    stream() << v;
}

void Output::write_cell(std::string const& v, std::size_t i)
{
    separator(i);
    if (v.find_first_of(",\"\n") != std::string::npos)
    {
        stream() << '"';
        for (char c : v)
        {
            stream() << (c == '"' ? "\"\"" : std::string(1, c));
        }
        stream() << '"';
    }
    else
    {
        stream() << v;
    }
}

void write_json(std::string const& path, std::string const& command, nlohmann::json const& config,
                nlohmann::json const& document)
{
    if (path == "-")
    {
        std::cout << document.dump(2) << '\n';
    }
    else
    {
        std::ofstream out(path);
        SDEPTH_REQUIRE(out.good(), invalid_argument, "cannot write " + path);
        out << document.dump(2) << '\n';
    }
    emit_sidecar(path, sidecar(command, config, nlohmann::json::object()));
}

}  // namespace sdepth::cli
