#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "ivrand/stats.hpp"

using namespace ivrand;
using Catch::Approx;

TEST_CASE("student t two-sided p matches classical critical value", "[stats]") {
    // t = 2.228 is the 97.5% quantile at 10 df.
    REQUIRE(stats::student_t_two_sided_p(2.228, 10) == Approx(0.05).epsilon(1e-3));
    REQUIRE(stats::student_t_two_sided_p(0.0, 5) == Approx(1.0));
    REQUIRE(stats::student_t_two_sided_p(-2.228, 10) ==
            Approx(stats::student_t_two_sided_p(2.228, 10)));
}

TEST_CASE("fisher exact matches enumeration-derived references", "[stats]") {
    // Balanced 4+4 table (3,1;1,3): p = 0.485714...
    REQUIRE(stats::fisher_exact_two_sided(3, 1, 1, 3) == Approx(0.4857142857).epsilon(1e-9));
    // Perfect separation 10/10: p = 2 / C(20,10).
    REQUIRE(stats::fisher_exact_two_sided(10, 0, 0, 10) ==
            Approx(2.0 / 184756.0).epsilon(1e-9));
    // Independence-like tables give p = 1.
    REQUIRE(stats::fisher_exact_two_sided(5, 5, 5, 5) == Approx(1.0));
    // Empty margins are defined.
    REQUIRE(stats::fisher_exact_two_sided(0, 0, 3, 4) == Approx(1.0));
}

TEST_CASE("fisher exact agrees with a brute-force hypergeometric oracle", "[stats]") {
    // Oracle: enumerate all tables with the observed margins directly.
    auto choose = [](long n, long k) {
        double r = 1.0;
        for (long i = 0; i < k; ++i) r = r * static_cast<double>(n - i) / static_cast<double>(i + 1);
        return r;
    };
    const long a = 7, b = 2, c = 3, d = 8;
    const long r1 = a + b, r2 = c + d, c1 = a + c, n = a + b + c + d;
    const double denom = choose(n, c1);
    const double p_obs = choose(r1, a) * choose(r2, c1 - a) / denom;
    double expected = 0.0;
    for (long aa = std::max(0L, c1 - r2); aa <= std::min(r1, c1); ++aa) {
        const double p = choose(r1, aa) * choose(r2, c1 - aa) / denom;
        if (p <= p_obs * (1.0 + 1e-7)) expected += p;
    }
    REQUIRE(stats::fisher_exact_two_sided(a, b, c, d) == Approx(expected).epsilon(1e-10));
}

TEST_CASE("quantile interpolation", "[stats]") {
    const std::vector<double> v = {1.0, 2.0, 3.0, 4.0};
    REQUIRE(stats::quantile_sorted(v, 0.0) == 1.0);
    REQUIRE(stats::quantile_sorted(v, 1.0) == 4.0);
    REQUIRE(stats::quantile_sorted(v, 0.5) == Approx(2.5));
    REQUIRE(stats::quantile_sorted(v, 0.25) == Approx(1.75));
}

TEST_CASE("pava produces the closest non-increasing fit", "[stats]") {
    const std::vector<double> v = {0.5, 0.2, 0.25, 0.0};
    const auto out = stats::pava_non_increasing(v);
    REQUIRE(out.size() == v.size());
    for (std::size_t i = 0; i + 1 < out.size(); ++i) REQUIRE(out[i] >= out[i + 1]);
    REQUIRE(out[0] == Approx(0.5));
    REQUIRE(out[1] == Approx(0.225));
    REQUIRE(out[2] == Approx(0.225));
    REQUIRE(out[3] == Approx(0.0));

    // Already monotone input is untouched.
    const std::vector<double> mono = {0.9, 0.5, 0.5, 0.1};
    REQUIRE(stats::pava_non_increasing(mono) == mono);
}
