#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "sdepth/error.hpp"
#include "sdepth/rng.hpp"
#include "sdepth/sensemode.hpp"

using namespace sdepth;

namespace {

Sensitivities from_abs(std::vector<double> v)
{
    Sensitivities s;
    s.s = v;
    s.abs_s = v;
    for (auto& a : s.abs_s)
    {
        a = std::fabs(a);
    }
    return s;
}

Dataset make_data(std::size_t n, std::size_t d, std::size_t o, std::uint64_t seed)
{
    RngStream rng(seed, 3);
    Dataset data;
    data.inputs.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n));
    data.targets.resize(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(n));
    rng.fill_normal(data.inputs.data(), n * d, 1.0);
    rng.fill_normal(data.targets.data(), n * o, 1.0);
    return data;
}

// Independent bisection on c for p = clip(c |S|, p_min, 1).
std::vector<double> proportional_oracle(std::vector<double> const& a, double budget, double p_min)
{
    auto total = [&](double c) {
        double t = 0;
        for (double v : a)
        {
            t += std::clamp(c * v, p_min, 1.0);
        }
        return t;
    };
    double lo = 0, hi = 1;
    while (total(hi) < budget)
    {
        hi *= 2;
    }
    for (int i = 0; i < 200; ++i)
    {
        double const mid = 0.5 * (lo + hi);
        (total(mid) < budget ? lo : hi) = mid;
    }
    std::vector<double> p;
    for (double v : a)
    {
        p.push_back(std::clamp(0.5 * (lo + hi) * v, p_min, 1.0));
    }
    return p;
}

double sum(SurvivalMode const& m)
{
    return std::accumulate(m.probs().begin(), m.probs().end(), 0.0);
}

}  // namespace

TEST_SUITE("sensemode")
{
    TEST_CASE("closed-form example")
    {
        auto const m = sensemode(from_abs({1, 2, 3, 4}), 2.0, 0.1);
        std::vector<double> const want{0.2, 0.4, 0.6, 0.8};
        for (std::size_t l = 0; l < 4; ++l)
        {
            CHECK(m[l] == doctest::Approx(want[l]).epsilon(1e-12));
        }
        CHECK(m.kind() == ModeKind::sense);
    }

    TEST_CASE("equal sensitivities and full budget")
    {
        for (auto map : {SenseMap::proportional, SenseMap::affine})
        {
            auto const u = sensemode(from_abs(std::vector<double>(7, 0.3)), 4.2, 0.1, map);
            for (std::size_t l = 0; l < 7; ++l)
            {
                CHECK(u[l] == doctest::Approx(0.6));
            }
            auto const full = sensemode(from_abs({0.1, 5, 0, 2}), 4.0, 0.1, map);
            for (std::size_t l = 0; l < 4; ++l)
            {
                CHECK(full[l] == 1.0);
            }
            auto const floor = sensemode(from_abs({0.1, 5, 0, 2}), 0.4, 0.1, map);
            for (std::size_t l = 0; l < 4; ++l)
            {
                CHECK(floor[l] == doctest::Approx(0.1));
            }
        }
    }

    TEST_CASE("matches a bisection oracle")
    {
        RngStream rng(1, 1);
        for (int trial = 0; trial < 200; ++trial)
        {
            std::size_t const L = 2 + static_cast<std::size_t>(rng.uniform() * 60);
            std::vector<double> a(L);
            for (auto& v : a)
            {
                v = rng.uniform() < 0.1 ? 0.0 : std::exp(2 * rng.normal());
            }
            double const p_min = 0.05 + 0.2 * rng.uniform();
            double const dL = static_cast<double>(L);
            double const budget = dL * p_min + rng.uniform() * dL * (1 - p_min);
            auto const m = sensemode(from_abs(a), budget, p_min);
            CHECK(std::fabs(sum(m) - budget) <= 1e-9);
            for (std::size_t l = 0; l < L; ++l)
            {
                CHECK(m[l] >= p_min - 1e-15);
                CHECK(m[l] <= 1.0);
            }
            std::size_t zeros = 0;
            for (double v : a)
            {
                zeros += v == 0.0;
            }
            double const reachable = dL - static_cast<double>(zeros) * (1 - p_min);
            if (budget <= reachable - 1e-9)
            {
                auto const want = proportional_oracle(a, budget, p_min);
                for (std::size_t l = 0; l < L; ++l)
                {
                    CHECK(m[l] == doctest::Approx(want[l]).epsilon(1e-7));
                }
            }
        }
    }

    TEST_CASE("monotone in sensitivity and scale invariant")
    {
        RngStream rng(2, 2);
        std::vector<double> a(30);
        for (auto& v : a)
        {
            v = rng.uniform();
        }
        for (auto map : {SenseMap::proportional, SenseMap::affine})
        {
            auto const m = sensemode(from_abs(a), 15.0, 0.1, map);
            std::vector<double> scaled = a;
            for (auto& v : scaled)
            {
                v *= -1e-6;
            }
            auto const ms = sensemode(from_abs(scaled), 15.0, 0.1, map);
            for (std::size_t i = 0; i < 30; ++i)
            {
                CHECK(ms[i] == doctest::Approx(m[i]).epsilon(1e-9));
                for (std::size_t j = 0; j < 30; ++j)
                {
                    if (a[i] < a[j])
                    {
                        CHECK(m[i] <= m[j] + 1e-15);
                    }
                }
            }
        }
    }

    TEST_CASE("affine map reaches p_min at the least sensitive layer")
    {
        auto const m = sensemode(from_abs({0.5, 1.0, 2.0, 3.0}), 2.0, 0.1, SenseMap::affine);
        CHECK(m[0] == doctest::Approx(0.1));
        CHECK(sum(m) == doctest::Approx(2.0).epsilon(1e-12));
        // p_min + c (|S| - 0.5) with equal gaps: differences are proportional.
        CHECK((m[2] - m[1]) == doctest::Approx(2 * (m[1] - m[0])).epsilon(1e-9));
    }

    TEST_CASE("budget validation and zero handling")
    {
        auto const s = from_abs({0, 1, 2});
        try
        {
            sensemode(s, 0.2, 0.1);
            FAIL("expected InfeasibleBudget");
        }
        catch (Error const& e)
        {
            CHECK(e.kind() == ErrorKind::infeasible_budget);
        }
        CHECK_THROWS_AS(sensemode(s, 3.01, 0.1), Error);
        CHECK_THROWS_AS(sensemode(s, 2.0, 1.0), Error);
        auto const low = sensemode(s, 1.5, 0.1);
        CHECK(low[0] == doctest::Approx(0.1));
        auto const high = sensemode(s, 2.8, 0.1);
        CHECK(high[1] == 1.0);
        CHECK(high[2] == 1.0);
        CHECK(high[0] == doctest::Approx(0.8));
        auto const all_zero = sensemode(from_abs(std::vector<double>(5, 0.0)), 2.0, 0.1);
        for (std::size_t l = 0; l < 5; ++l)
        {
            CHECK(all_zero[l] == doctest::Approx(0.4));
        }
    }

    TEST_CASE("parsers")
    {
        CHECK(parse_sensitivity_method("gradient") == SensitivityMethod::gradient);
        CHECK(parse_sensitivity_method("loo") == SensitivityMethod::leave_one_out);
        CHECK(parse_sensitivity_method(to_string(SensitivityMethod::leave_one_out))
              == SensitivityMethod::leave_one_out);
        CHECK(parse_sense_map("affine") == SenseMap::affine);
        CHECK_THROWS_AS(parse_sense_map("log"), Error);
    }

    TEST_CASE("zero block has zero sensitivity")
    {
        auto p = init_he({6, 16, 3, 1}, Architecture::stable, 4);
        p.blocks[2].setZero();
        auto const data = make_data(32, 3, 1, 5);
        for (auto method : {SensitivityMethod::gradient, SensitivityMethod::leave_one_out})
        {
            auto const s = sensitivities(p, data, method);
            CHECK(s.s[2] == 0.0);
            CHECK(s.n_inputs == 32);
            auto const m = sensemode(s, 3.0, 0.1);
            CHECK(m[2] == doctest::Approx(0.1));
        }
    }

    TEST_CASE("gradient sensitivity matches finite differences")
    {
        auto const p = init_he({5, 12, 3, 2}, Architecture::standard, 6);
        auto const data = make_data(10, 3, 2, 7);
        auto const s = sensitivities(p, data, SensitivityMethod::gradient);
        double const h = 1e-6;
        for (std::size_t l = 0; l < 5; ++l)
        {
            std::vector<double> gates(5, 1.0);
            gates[l] = 1 + h;
            double const up = quadratic_loss(predict(p, data.inputs, gates), data.targets);
            gates[l] = 1 - h;
            double const down = quadratic_loss(predict(p, data.inputs, gates), data.targets);
            CHECK(s.s[l] == doctest::Approx((up - down) / (2 * h) / 10).epsilon(1e-5));
        }
    }

    // The two methods differ by the second-order term of dropping one block,
    // O(1/sqrt(L)) relative to the first-order term; about 15% at L = 50.
    TEST_CASE("gradient and leave-one-out converge with depth")
    {
        auto const data = make_data(64, 4, 1, 9);
        auto gap = [&](std::size_t L, std::uint64_t seed, double& sign_agree) {
            auto const p = init_he({L, 32, 4, 1}, Architecture::stable, seed);
            auto const g = sensitivities(p, data, SensitivityMethod::gradient);
            auto const loo = sensitivities(p, data, SensitivityMethod::leave_one_out, 2);
            double diff = 0, norm = 0, agree = 0;
            for (std::size_t l = 0; l < L; ++l)
            {
                diff += (g.s[l] - loo.s[l]) * (g.s[l] - loo.s[l]);
                norm += g.s[l] * g.s[l];
                agree += (g.s[l] > 0) == (loo.s[l] > 0);
            }
            sign_agree = agree / static_cast<double>(L);
            return std::sqrt(diff / norm);
        };
        double shallow = 0, deep = 0;
        for (std::uint64_t seed = 1; seed <= 3; ++seed)
        {
            double agree = 0;
            double const a = gap(50, seed, agree);
            CHECK(a < 0.35);
            CHECK(agree >= 0.85);  // small |S| layers can flip sign
            double const b = gap(400, seed, agree);
            CHECK(agree >= 0.95);
            shallow += a;
            deep += b;
        }
        CHECK(deep < 0.8 * shallow);
    }
}
