#include "sdepth/normality.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "sdepth/error.hpp"

namespace sdepth {
namespace {

double poly(std::span<double const> c, double x)
{
    double r = 0.0;
    for (std::size_t j = c.size(); j-- > 0;)
    {
        r = r * x + c[j];
    }
    return r;
}

double normal_upper(double z)
{
    return 0.5 * std::erfc(z / std::numbers::sqrt2);
}

void require_spread(std::span<double const> x)
{
    auto const [lo, hi] = std::minmax_element(x.begin(), x.end());
    for (double v : x)
    {
        SDEPTH_REQUIRE(std::isfinite(v), invalid_argument, "samples must be finite");
    }
    SDEPTH_REQUIRE(*hi - *lo >= 1e-12, degenerate_sample, "sample range below 1e-12");
}

}  // namespace

std::string_view to_string(NormalityTest test)
{
    return test == NormalityTest::shapiro_wilk ? "shapiro-wilk" : "dagostino-k2";
}

NormalityReport shapiro_wilk(std::span<double const> samples)
{
    std::size_t const n = samples.size();
    SDEPTH_REQUIRE(n >= 3 && n <= 5000, out_of_range, "Shapiro-Wilk needs 3 <= n <= 5000");
    require_spread(samples);

    static constexpr double c1[] = {0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056};
    static constexpr double c2[] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
    static constexpr double c3[] = {0.544, -0.39978, 0.025054, -6.714e-4};
    static constexpr double c4[] = {1.3822, -0.77857, 0.062767, -0.0020322};
    static constexpr double c5[] = {-1.5861, -0.31082, -0.083751, 0.0038915};
    static constexpr double c6[] = {-0.4803, -0.082676, 0.0030302};
    static constexpr double gam[] = {-2.273, 0.459};

    std::vector<double> x(samples.begin(), samples.end());
    std::sort(x.begin(), x.end());
    std::size_t const half = n / 2;
    double const an = static_cast<double>(n);

    // Antisymmetric coefficients; a[i] weights x[n-1-i] - x[i].
    std::vector<double> a(half);
    if (n == 3)
    {
        a[0] = std::numbers::sqrt2 / 2.0;
    }
    else
    {
        boost::math::normal_distribution<double> const std_normal;
        std::vector<double> m(half);
        double summ2 = 0.0;
        for (std::size_t i = 0; i < half; ++i)
        {
            m[i] = boost::math::quantile(std_normal,
                                         (static_cast<double>(i + 1) - 0.375) / (an + 0.25));
            summ2 += m[i] * m[i];
        }
        summ2 *= 2.0;
        double const ssumm2 = std::sqrt(summ2);
        double const rsn = 1.0 / std::sqrt(an);
        double const a1 = poly(c1, rsn) - m[0] / ssumm2;
        std::size_t first;
        double fac;
        if (n > 5)
        {
            double const a2 = -m[1] / ssumm2 + poly(c2, rsn);
            fac = std::sqrt((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1])
                            / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
            a[1] = a2;
            first = 2;
        }
        else
        {
            fac = std::sqrt((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1));
            first = 1;
        }
        a[0] = a1;
        for (std::size_t i = first; i < half; ++i)
        {
            a[i] = -m[i] / fac;
        }
    }

    double const range = x.back() - x.front();
    double mean = 0.0;
    for (double& v : x)
    {
        v /= range;
        mean += v;
    }
    mean /= an;
    double ssx = 0.0;
    for (double v : x)
    {
        ssx += (v - mean) * (v - mean);
    }
    double sax = 0.0, ssa = 0.0;
    for (std::size_t i = 0; i < half; ++i)
    {
        sax += a[i] * (x[n - 1 - i] - x[i]);
        ssa += 2.0 * a[i] * a[i];
    }
    double const root = std::sqrt(ssa * ssx);
    double const w1 = (root - sax) * (root + sax) / (ssa * ssx);
    double const w = 1.0 - w1;

    NormalityReport report{NormalityTest::shapiro_wilk, w, 0.0, n};
    if (n == 3)
    {
        double const p = 6.0 / std::numbers::pi * (std::asin(std::sqrt(w)) - std::numbers::pi / 3.0);
        report.p_value = std::clamp(p, 0.0, 1.0);
        return report;
    }
    double y = std::log(w1);
    double mu, sigma;
    if (n <= 11)
    {
        double const gamma = poly(gam, an);
        if (y >= gamma)
        {
            report.p_value = 1e-19;
            return report;
        }
        y = -std::log(gamma - y);
        mu = poly(c3, an);
        sigma = std::exp(poly(c4, an));
    }
    else
    {
        double const ln = std::log(an);
        mu = poly(c5, ln);
        sigma = std::exp(poly(c6, ln));
    }
    report.p_value = std::clamp(normal_upper((y - mu) / sigma), 0.0, 1.0);
    return report;
}

NormalityReport dagostino_k2(std::span<double const> samples)
{
    std::size_t const count = samples.size();
    SDEPTH_REQUIRE(count >= 20, out_of_range, "D'Agostino K^2 needs n >= 20");
    require_spread(samples);
    double const n = static_cast<double>(count);

    double mean = 0.0;
    for (double v : samples)
    {
        mean += v;
    }
    mean /= n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : samples)
    {
        double const d = v - mean;
        double const d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;

    // Skewness.
    double const b1 = m3 / std::pow(m2, 1.5);
    double y = b1 * std::sqrt((n + 1.0) * (n + 3.0) / (6.0 * (n - 2.0)));
    double const beta2 = 3.0 * (n * n + 27.0 * n - 70.0) * (n + 1.0) * (n + 3.0)
                         / ((n - 2.0) * (n + 5.0) * (n + 7.0) * (n + 9.0));
    double const w2 = -1.0 + std::sqrt(2.0 * (beta2 - 1.0));
    double const delta = 1.0 / std::sqrt(0.5 * std::log(w2));
    double const alpha = std::sqrt(2.0 / (w2 - 1.0));
    if (y == 0.0)
    {
        y = 1.0;
    }
    double const z_skew = delta * std::asinh(y / alpha);

    // Kurtosis.
    double const b2 = m4 / (m2 * m2);
    double const expected = 3.0 * (n - 1.0) / (n + 1.0);
    double const var_b2 = 24.0 * n * (n - 2.0) * (n - 3.0)
                          / ((n + 1.0) * (n + 1.0) * (n + 3.0) * (n + 5.0));
    double const xk = (b2 - expected) / std::sqrt(var_b2);
    double const sqrt_beta1 = 6.0 * (n * n - 5.0 * n + 2.0) / ((n + 7.0) * (n + 9.0))
                              * std::sqrt(6.0 * (n + 3.0) * (n + 5.0)
                                          / (n * (n - 2.0) * (n - 3.0)));
    double const A = 6.0 + 8.0 / sqrt_beta1
                               * (2.0 / sqrt_beta1 + std::sqrt(1.0 + 4.0 / (sqrt_beta1 * sqrt_beta1)));
    double const term1 = 1.0 - 2.0 / (9.0 * A);
    double const denom = 1.0 + xk * std::sqrt(2.0 / (A - 4.0));
    SDEPTH_REQUIRE(denom != 0.0, degenerate_sample, "kurtosis transform undefined");
    double const term2 = std::copysign(std::cbrt((1.0 - 2.0 / A) / std::fabs(denom)), denom);
    double const z_kurt = (term1 - term2) / std::sqrt(2.0 / (9.0 * A));

    double const k2 = z_skew * z_skew + z_kurt * z_kurt;
    return {NormalityTest::dagostino_k2, k2, std::exp(-0.5 * k2), count};
}

}  // namespace sdepth
