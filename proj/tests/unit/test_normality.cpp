#include <algorithm>
#include <cmath>
#include <fstream>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include "json.hpp"

#include "doctest.h"
#include "sdepth/error.hpp"
#include "sdepth/normality.hpp"
#include "sdepth/rng.hpp"

using namespace sdepth;

namespace {

std::vector<double> normal_sample(RngStream& rng, std::size_t n)
{
    std::vector<double> x(n);
    rng.fill_normal(x.data(), n, 1.0);
    return x;
}

// One-sample KS distance to U(0, 1).
double ks_uniform(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    double const n = static_cast<double>(v.size());
    double d = 0;
    for (std::size_t i = 0; i < v.size(); ++i)
    {
        d = std::max({d, (static_cast<double>(i) + 1) / n - v[i], v[i] - static_cast<double>(i) / n});
    }
    return d;
}

}  // namespace

TEST_SUITE("normality")
{
    TEST_CASE("matches pinned reference values")
    {
        std::ifstream in(SDEPTH_TEST_DATA "/normality_reference.json");
        REQUIRE(in.good());
        auto const doc = nlohmann::json::parse(in);
        REQUIRE(doc["cases"].size() >= 10);
        for (auto const& c : doc["cases"])
        {
            auto const x = c["x"].get<std::vector<double>>();
            CAPTURE(c["name"].get<std::string>());
            auto const sw = shapiro_wilk(x);
            CHECK(sw.n == x.size());
            CHECK(sw.statistic == doctest::Approx(c["shapiro_w"].get<double>()).epsilon(1e-6));
            CHECK(std::fabs(sw.p_value - c["shapiro_p"].get<double>()) < 1e-3);
            if (c.contains("k2"))
            {
                auto const k2 = dagostino_k2(x);
                CHECK(k2.statistic == doctest::Approx(c["k2"].get<double>()).epsilon(1e-6));
                CHECK(std::fabs(k2.p_value - c["k2_p"].get<double>()) < 1e-3);
            }
        }
    }

    TEST_CASE("normal scores give W near one")
    {
        boost::math::normal_distribution<> z;
        std::vector<double> x(500);
        for (std::size_t i = 0; i < x.size(); ++i)
        {
            x[i] = quantile(z, (static_cast<double>(i) + 0.5) / 500.0);
        }
        auto const r = shapiro_wilk(x);
        CHECK(r.statistic > 0.999);
        CHECK(r.p_value > 0.5);
        CHECK(dagostino_k2(x).p_value > 0.5);
    }

    TEST_CASE("non-normal samples are rejected")
    {
        RngStream rng(5, 0);
        std::vector<double> u(300), e(300);
        for (std::size_t i = 0; i < 300; ++i)
        {
            u[i] = rng.uniform();
            e[i] = -std::log1p(-rng.uniform());
        }
        CHECK(shapiro_wilk(u).p_value < 0.01);
        CHECK(shapiro_wilk(e).p_value < 0.01);
        CHECK(dagostino_k2(u).p_value < 0.01);
        CHECK(dagostino_k2(e).p_value < 0.01);
    }

    TEST_CASE("size limits and degenerate samples")
    {
        auto kind_of = [](auto&& fn) {
            try
            {
                fn();
            }
            catch (Error const& err)
            {
                return err.kind();
            }
            return ErrorKind::invalid_argument;
        };
        std::vector<double> const two{1.0, 2.0};
        CHECK_THROWS_AS(shapiro_wilk(two), Error);
        CHECK_THROWS_AS(shapiro_wilk(std::vector<double>(5001, 1.0)), Error);
        CHECK_THROWS_AS(dagostino_k2(std::vector<double>(19, 1.0)), Error);
        std::vector<double> flat(50, 3.25);
        CHECK(kind_of([&] { shapiro_wilk(flat); }) == ErrorKind::degenerate_sample);
        CHECK(kind_of([&] { dagostino_k2(flat); }) == ErrorKind::degenerate_sample);
        RngStream rng(6, 0);
        CHECK_NOTHROW(shapiro_wilk(normal_sample(rng, 3)));
        CHECK_NOTHROW(shapiro_wilk(normal_sample(rng, 5000)));
        CHECK_NOTHROW(dagostino_k2(normal_sample(rng, 20)));
    }

    TEST_CASE("statistics are invariant to location and scale")
    {
        RngStream rng(7, 0);
        auto x = normal_sample(rng, 80);
        auto const a = shapiro_wilk(x);
        auto const b = dagostino_k2(x);
        for (auto& v : x)
        {
            v = 5 - 40 * v;
        }
        CHECK(shapiro_wilk(x).statistic == doctest::Approx(a.statistic).epsilon(1e-12));
        CHECK(dagostino_k2(x).statistic == doctest::Approx(b.statistic).epsilon(1e-9));
    }

    TEST_CASE("p-values are uniform under the null")
    {
        RngStream rng(8, 0);
        std::vector<double> sw, k2;
        std::size_t agree = 0;
        for (int rep = 0; rep < 2000; ++rep)
        {
            auto const x = normal_sample(rng, 200);
            double const ps = shapiro_wilk(x).p_value;
            double const pk = dagostino_k2(x).p_value;
            sw.push_back(ps);
            k2.push_back(pk);
            agree += (ps < 0.05) == (pk < 0.05);
        }
        // 1% critical value of the KS distance, asymptotic form.
        double const crit = 1.628 / std::sqrt(2000.0);
        CHECK(ks_uniform(sw) < crit);
        CHECK(ks_uniform(k2) < crit);
        CHECK(static_cast<double>(agree) / 2000 >= 0.9);
    }
}
