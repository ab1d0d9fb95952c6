#pragma once

#include <fstream>
#include <iosfwd>
#include <memory>
#include <string>
#include <type_traits>
#include <vector>

#include "json.hpp"

namespace sdepth::cli {

/// CSV table written to a file or stdout ("-"), with a JSON metadata
/// sidecar: <path>.meta.json for files, one line on stderr for stdout.
class Output
{
  public:
    Output(std::string path, std::string command, nlohmann::json config);
    ~Output();

    Output(Output const&) = delete;
    Output& operator=(Output const&) = delete;

    void header(std::vector<std::string> const& columns);
    template<class... T>
    void row(T const&... values)
    {
        std::size_t i = 0;
        ((write_cell(values, i++)), ...);
        stream() << '\n';
    }

    //! Extra fields for the sidecar.
    nlohmann::json& meta() { return extra_; }

  private:
    std::ostream& stream();
    void write_cell(double v, std::size_t i);
    void write_cell(std::string const& v, std::size_t i);
    void write_cell(char const* v, std::size_t i) { write_cell(std::string(v), i); }
    template<class I>
        requires std::is_integral_v<I>
    void write_cell(I v, std::size_t i)
    {
        separator(i);
        stream() << v;
    }
    void separator(std::size_t i);

    std::string path_;
    std::string command_;
    nlohmann::json config_;
    nlohmann::json extra_ = nlohmann::json::object();
    std::unique_ptr<std::ofstream> file_;
};

//! FNV-1a 64 of the canonical (sorted-key) dump, hex.
std::string config_hash(nlohmann::json const& config);

//! Write a JSON document to path or stdout, plus the same sidecar.
void write_json(std::string const& path, std::string const& command, nlohmann::json const& config,
                nlohmann::json const& document);

}  // namespace sdepth::cli
