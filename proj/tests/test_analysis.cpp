#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "srps/analysis.hpp"
#include "srps/validation.hpp"

using namespace srps::analysis;
using doctest::Approx;

namespace {

const double kPi = std::acos(-1.0);

// Composite Simpson on the closed form, independent of the library quadrature.
template <class F>
double simpson(F f, double a, double b, int n = 2000) {
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4 : 2);
    return s * h / 3;
}

// P[at least k of n Bernoulli(p)] by enumerating every outcome.
double enumerate_tail(int n, int k, double p) {
    double total = 0;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        int ones = __builtin_popcount(mask);
        if (ones >= k) total += std::pow(p, ones) * std::pow(1 - p, n - ones);
    }
    return total;
}

}  // namespace

TEST_CASE("coverage area endpoints and midpoint") {
    const double r = 30;
    CHECK(area(0, r) == Approx(kPi * r * r).epsilon(1e-12));
    CHECK(std::abs(area(2 * r, r)) < 1e-9);
    CHECK(area(r, r) / (r * r) == Approx(0.3623442948243185).epsilon(1e-12));
    CHECK(lens_area(r, r) / (r * r) == Approx(2 * kPi / 3 - std::sqrt(3.0) / 2).epsilon(1e-12));
    CHECK_THROWS(area(-1, r));
    CHECK_THROWS(area(61, r));
}

TEST_CASE("expected area against Simpson") {
    const double r = 30;
    auto e = expected_area(r);
    const double oracle = simpson([&](double x) { return area(x, r) / r; }, 0, r);
    CHECK(e.quadrature == Approx(oracle).epsilon(1e-9));
    CHECK(e.quadrature / (r * r) == Approx(1.6956776281576516).epsilon(1e-9));
    CHECK(e.closed_form == Approx(std::sqrt(3.0) * r * r));
    CHECK(e.relative_gap == Approx((std::sqrt(3.0) - 1.6956776281576516) / 1.6956776281576516).epsilon(1e-6));
    CHECK(expected_lens_area(r) / (r * r) == Approx(2.162985557706546).epsilon(1e-9));
}

TEST_CASE("binomial tail against enumeration") {
    for (int n = 1; n <= 7; ++n)
        for (int k = 0; k <= n; ++k)
            for (double p : {0.05, 0.3, 0.5, 0.75, 0.95})
                CHECK(binomial_tail(n, k, p) == Approx(enumerate_tail(n, k, p)).epsilon(1e-12));
    CHECK(binomial_tail(8, 3, 0.5) == Approx(0.85546875));
    CHECK(binomial_coefficient(30, 15) == Approx(155117520.0));
}

TEST_CASE("alert probability is the 5-of-7 enumeration") {
    for (double a : {0.1, 0.5, 0.75, 0.9}) CHECK(p_alert(a, 5, 7) == Approx(enumerate_tail(7, 5, a)).epsilon(1e-12));
}

TEST_CASE("incomplete Beta agrees with the binomial sum") {
    auto d = p_detect(3, 8, 0.4);
    CHECK(d.binomial_sum == Approx(0.68460544).epsilon(1e-10));
    CHECK(d.incomplete_beta == Approx(0.68460544).epsilon(1e-10));
    CHECK(srps::app::check_beta_identity().status == srps::app::Status::Pass);
}

TEST_CASE("detection curve at NB 15") {
    const double expect[] = {0.9996796544813003, 0.9963327618291266, 0.9755469734861609, 0.8948659803345783,
                             0.6944391102513785, 0.3832526656333509, 0.10716478159775543};
    CHECK(pc_linear(15) == Approx(0.25));
    CHECK(guards_for_nb(15) == 8);
    for (std::uint32_t g = 2; g <= 8; ++g) {
        auto c = coverage_at(15, 0.25, 7, 5, g);
        CHECK(c.p_alert == Approx(0.75640869140625));
        CHECK(c.p_detect == Approx(expect[g - 2]).epsilon(1e-9));
    }
}

TEST_CASE("collision law saturates") {
    CHECK(pc_linear(3) == Approx(0.05));
    CHECK(pc_linear(60) == Approx(0.95));
    CHECK(pc_linear(100) == Approx(0.95));
}

TEST_CASE("false alarm stays below 1e-6") {
    CHECK(worst_false_alarm({}) < 1e-6);
    auto m = p_misdetection(0.2);
    CHECK(m.heard == Approx(0.8));
    CHECK(m.collided == Approx(0.2));
}

TEST_CASE("cost tables") {
    CHECK(memory_cost({20, 10, 20, 10}) == 1420);
    CHECK(memory_cost({1, 0, 0, 0}) == 12);
    CHECK(memory_cost({0, 1, 0, 0}) == 64);
    CHECK(memory_cost({0, 0, 1, 0}) == 12);
    CHECK(memory_cost({0, 0, 0, 1}) == 30);
    auto p = packet_sizes();
    CHECK(p.rdp == 47);
    CHECK(p.key_disclosure == 12);
    CHECK(p.rrp == 18);
}

TEST_CASE("mutated memory coefficient fails the cost check") {
    using namespace srps::app;
    CHECK(check_costs().status == Status::Pass);
    auto mutated = [](const CostParams& c) { return 13 * c.nn + 64 * c.lc + 12 * c.rte + 30 * c.nbe; };
    auto r = check_costs(mutated);
    CHECK(r.status == Status::Fail);
    CHECK(r.detail.find("1440") != std::string::npos);
}

TEST_CASE("figure CSVs have one header and stable rows") {
    auto csv = fig9a_csv({});
    CHECK(csv.rfind("nb,", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 59);
    CHECK(fig12_csv({}) == fig12_csv({}));
}
