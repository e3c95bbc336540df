#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "dynkin/driver.hpp"
#include "dynkin/errors.hpp"

using namespace dynkin;

namespace {

const MarkSpace kMarks = make_mark_space({ { 1.0, 2.0 }, { -0.5, 0.8 } });

double norm_nu(const MarkSpace& marks, const std::vector<double>& a) {
    double s = 0.0;
    for (int i = 0; i < marks.size(); ++i) s += a[i] * a[i] * marks.atoms[i].nu;
    return std::sqrt(s);
}

} // namespace

TEST_CASE("linear driver evaluates its closed form") {
    const DriverSpec g = linear_driver(kMarks, 0.5, { 0.75, 0.0 }, 1.0, 0.25);
    const std::vector<double> k{ 1.5, -2.0 };
    // 0.5*2 + 0.25*4 + 0.75*1.5*2.0 + 1
    CHECK(eval_driver(g, kMarks, 0, 0.0, 2.0, 4.0, k) ==
          doctest::Approx(5.25).epsilon(1e-15));
    CHECK(linear_y_coeff(g).has_value());
    CHECK(*linear_y_coeff(g) == 0.5);
    CHECK(g.lipschitz_C ==
          doctest::Approx(std::max({ 0.5, 0.25,
                                     norm_nu(kMarks, { 0.75, 0.0 }) }))
              .epsilon(1e-15));
    CHECK(!depends_on_node(g));
}

TEST_CASE("process driver reads per-node values and offsets add") {
    const std::vector<double> k0{ 0.0, 0.0 };
    DriverSpec g = process_driver({ 0.1, 0.2, 0.3 });
    CHECK(eval_driver(g, kMarks, 1, 0.0, 9.0, 9.0, k0) == 0.2);
    CHECK(depends_on_node(g));
    g.offset = { 1.0, 2.0, 3.0 };
    CHECK(eval_driver(g, kMarks, 2, 0.0, 0.0, 0.0, k0) ==
          doctest::Approx(3.3).epsilon(1e-15));
    CHECK(*linear_y_coeff(g) == 0.0);
}

TEST_CASE("catalog entries evaluate their formulas") {
    const DriverSpec kp = catalog_driver(
        "kplus", { { "mark", 0.0 }, { "scale", 2.0 } }, {}, 0.0);
    const std::vector<double> kpos{ 0.7, 9.0 };
    const std::vector<double> kneg{ -0.7, 9.0 };
    CHECK(eval_driver(kp, kMarks, 0, 0.0, 0.0, 0.0, kpos) ==
          doctest::Approx(1.4).epsilon(1e-15));
    CHECK(eval_driver(kp, kMarks, 0, 0.0, 0.0, 0.0, kneg) == 0.0);
    CHECK(*linear_y_coeff(kp) == 0.0); // no y dependence

    const DriverSpec tm = catalog_driver(
        "tanh_mix", { { "a", 0.5 }, { "b", 0.3 }, { "c", 0.1 } },
        { { "gamma", { 0.2, -0.4 } } }, 0.0);
    const std::vector<double> k{ 1.0, 2.0 };
    const double want = 0.5 * std::tanh(0.7) + 0.3 * 1.5 +
                        (0.2 * 1.0 * 2.0 + (-0.4) * 2.0 * 0.8) + 0.1;
    CHECK(eval_driver(tm, kMarks, 0, 0.0, 0.7, 1.5, k) ==
          doctest::Approx(want).epsilon(1e-14));
    CHECK(!linear_y_coeff(tm).has_value());

    const DriverSpec sk = catalog_driver(
        "smooth_k", { { "c", 0.25 } }, { { "s", { 0.6, -0.2 } } }, 0.0);
    const double want_sk =
        0.6 * std::sin(1.0) * 2.0 + (-0.2) * std::sin(2.0) * 0.8 + 0.25;
    CHECK(eval_driver(sk, kMarks, 0, 0.0, 9.0, 9.0, k) ==
          doctest::Approx(want_sk).epsilon(1e-14));

    CHECK_THROWS_AS(eval_driver(catalog_driver("nope", {}, {}, 0.0), kMarks, 0,
                                0.0, 0.0, 0.0, k),
                    UnknownCatalogId);
}

TEST_CASE("sup-inf driver takes the max of row minima") {
    std::vector<DriverSpec> fam;
    for (const double c : { 1.0, 3.0, 0.0, 4.0 })
        fam.push_back(linear_driver(kMarks, 0.0, { 0.0, 0.0 }, c));
    const DriverSpec g = supinf_driver(2, 2, std::move(fam));
    const std::vector<double> k0{ 0.0, 0.0 };
    // rows (1,3) and (0,4): row minima 1 and 0, maximum 1
    CHECK(eval_driver(g, kMarks, 0, 0.0, 0.0, 0.0, k0) == 1.0);
    CHECK(*linear_y_coeff(g) == 0.0);
}

TEST_CASE("jump monotonicity: analytic forms") {
    const auto ok = check_monotonicity(
        linear_driver(kMarks, 0.3, { -0.5, 0.2 }, 0.0), kMarks);
    CHECK(ok.ok);
    CHECK(ok.strict);
    REQUIRE(ok.gamma.size() == 2);
    CHECK(ok.gamma[0] == -0.5);

    const auto edge = check_monotonicity(
        linear_driver(kMarks, 0.0, { -1.0, 0.0 }, 0.0), kMarks);
    CHECK(edge.ok);
    CHECK(!edge.strict);

    const auto bad = check_monotonicity(
        linear_driver(kMarks, 0.0, { -1.5, 0.0 }, 0.0), kMarks);
    CHECK(!bad.ok);
    CHECK(!bad.detail.empty());
}

TEST_CASE("jump monotonicity: sampled forms") {
    const DriverSpec kp = catalog_driver(
        "kplus", { { "mark", 0.0 }, { "scale", 1.5 } }, {}, 0.0,
        { 0.75, 0.0 });
    const auto r = check_monotonicity(kp, kMarks);
    CHECK(r.ok);
    CHECK(r.strict);
    CHECK(r.worst_quotient >= -1e-12);

    const DriverSpec sk = catalog_driver(
        "smooth_k", {}, { { "s", { 0.5, 0.5 } } }, 0.0, { 0.5, 0.5 });
    CHECK(check_monotonicity(sk, kMarks).ok);
}

TEST_CASE("analytic and numeric jump gradients agree") {
    const DriverSpec sk = catalog_driver(
        "smooth_k", { { "c", 0.1 } }, { { "s", { 0.6, -0.2 } } }, 0.0);
    const std::vector<double> k{ 0.3, -0.8 };
    const auto ana = analytic_gamma(sk, kMarks, k);
    REQUIRE(ana.has_value());
    const auto numer = numeric_gradient_k(sk, kMarks, 0.0, 0.0, 0.0, k);
    for (int i = 0; i < kMarks.size(); ++i)
        CHECK(std::abs((*ana)[i] - numer[i]) <= 1e-6);
}

TEST_CASE("declared Lipschitz constants are never exceeded") {
    std::vector<DriverSpec> specs;
    specs.push_back(linear_driver(kMarks, -0.4, { 0.3, -0.6 }, 0.2, 0.5));
    specs.push_back(catalog_driver("kplus",
                                   { { "mark", 1.0 }, { "scale", 0.8 } }, {},
                                   0.8 / std::sqrt(0.8)));
    specs.push_back(catalog_driver(
        "tanh_mix", { { "a", 0.7 }, { "b", -0.4 }, { "c", 0.3 } },
        { { "gamma", { 0.5, -0.3 } } },
        std::max({ 0.7, 0.4, norm_nu(kMarks, { 0.5, -0.3 }) })));
    specs.push_back(catalog_driver("smooth_k", {},
                                   { { "s", { 0.6, -0.2 } } },
                                   norm_nu(kMarks, { 0.6, -0.2 })));

    std::mt19937_64 gen(20240901);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (const auto& spec : specs) {
        CHECK(implied_lipschitz(spec, kMarks) <= spec.lipschitz_C + 1e-12);
        for (int it = 0; it < 10000; ++it) {
            const double y1 = u(gen), z1 = u(gen), y2 = u(gen), z2 = u(gen);
            const std::vector<double> k1{ u(gen), u(gen) };
            const std::vector<double> k2{ u(gen), u(gen) };
            const double g1 = eval_driver(spec, kMarks, 0, 0.0, y1, z1, k1);
            const double g2 = eval_driver(spec, kMarks, 0, 0.0, y2, z2, k2);
            const double dist = std::abs(y1 - y2) + std::abs(z1 - z2) +
                                norm_nu(kMarks, { k1[0] - k2[0], k1[1] - k2[1] });
            CHECK(std::abs(g1 - g2) <= spec.lipschitz_C * dist + 1e-9);
        }
    }
}
