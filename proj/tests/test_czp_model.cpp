#include <doctest.h>

#include "czp/czp_model.hpp"

using namespace czp;

namespace {

CZPModel random_model(std::uint64_t seed, int k, double min_pole_im = 0.05) {
    Rng rng(seed);
    CZPModel m;
    m.log_c0 = rng.uniform(-3.0, 1.0);
    for (int i = 0; i < k; ++i) {
        m.zeros.emplace_back(rng.uniform(0.3, 6.8), rng.uniform(0.1, 1.2));
        m.poles.emplace_back(rng.uniform(0.3, 6.8), rng.uniform(min_pole_im, 1.2));
    }
    return m;
}

}  // namespace

TEST_CASE("eval_log_s11") {
    const FrequencyGrid& grid = canonical_antenna_grid();
    SUBCASE("degree zero is the constant") {
        CZPModel m;
        m.log_c0 = -2.3;
        const FrequencyResponse r = eval_log_s11(m, grid);
        for (int i = 0; i < grid.count(); ++i) CHECK(r.log_mag[i] == -2.3);
    }
    SUBCASE("identical zeros and poles cancel") {
        CZPModel m;
        m.log_c0 = 0.7;
        m.zeros = {cplx(2.0, 0.5), cplx(4.5, 0.3)};
        m.poles = m.zeros;
        const FrequencyResponse r = eval_log_s11(m, grid);
        for (int i = 0; i < grid.count(); ++i)
            CHECK(std::abs(r.log_mag[i] - 0.7) < 1e-12);
    }
    SUBCASE("hand-evaluated notch") {
        CZPModel m;
        m.log_c0 = 0.0;
        m.zeros = {cplx(2.45, 0.01)};
        m.poles = {cplx(2.45, 1.0)};
        const FrequencyResponse r = eval_log_s11(m, make_grid({2.45, 3.0}));
        CHECK(r.log_mag[0] == doctest::Approx(std::log(0.01 / 1.0)).epsilon(1e-12));
    }
    SUBCASE("pole on the real axis is rejected") {
        CZPModel m;
        m.zeros = {cplx(1.0, 0.1)};
        m.poles = {cplx(1.0, 1e-5)};
        try {
            eval_log_s11(m, grid);
            FAIL("expected singular-pole");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::singular_pole);
        }
    }
    SUBCASE("unequal counts are rejected") {
        CZPModel m;
        m.zeros = {cplx(1.0, 0.1)};
        CHECK_THROWS_AS(eval_log_s11(m, grid), Error);
    }
}

TEST_CASE("evaluation is bit-identical under root permutations") {
    const CZPModel m = random_model(77, 6);
    CZPModel shuffled = m;
    std::swap(shuffled.zeros[0], shuffled.zeros[5]);
    std::swap(shuffled.zeros[2], shuffled.zeros[3]);
    std::reverse(shuffled.poles.begin(), shuffled.poles.end());
    const FrequencyGrid& grid = canonical_antenna_grid();
    const FrequencyResponse a = eval_log_s11(m, grid);
    const FrequencyResponse b = eval_log_s11(shuffled, grid);
    for (int i = 0; i < grid.count(); ++i) CHECK(a.log_mag[i] == b.log_mag[i]);
}

TEST_CASE("appending a shared root leaves the response unchanged") {
    const FrequencyGrid& grid = canonical_antenna_grid();
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const CZPModel m = random_model(seed, 4);
        CZPModel extended = m;
        const cplx shared(3.3, 0.4);
        extended.zeros.push_back(shared);
        extended.poles.push_back(shared);
        const FrequencyResponse a = eval_log_s11(m, grid);
        const FrequencyResponse b = eval_log_s11(extended, grid);
        for (int i = 0; i < grid.count(); ++i) CHECK(std::abs(a.log_mag[i] - b.log_mag[i]) <= 1e-12);
    }
}

TEST_CASE("eval_rational") {
    SUBCASE("degenerate form is the constant") {
        RationalFunction rf;
        rf.c0 = cplx(2.0, -1.0);
        CHECK(eval_rational(rf, 0.7) == rf.c0);
    }
    SUBCASE("hand complex arithmetic") {
        RationalFunction rf;
        rf.c0 = cplx(1.0, 0.0);
        rf.zeros = {cplx(0.0, 0.0)};
        rf.poles = {cplx(0.0, 1.0)};
        const cplx v = eval_rational(rf, 1.0);
        CHECK(std::abs(v - cplx(0.5, 0.5)) < 1e-14);  // (1-0)/(1-i) = (1+i)/2
    }
    SUBCASE("pole proximity") {
        RationalFunction rf;
        rf.c0 = cplx(1.0, 0.0);
        rf.zeros = {cplx(0.0, 1.0)};
        rf.poles = {cplx(2.0, 0.0)};
        try {
            eval_rational(rf, 2.0);
            FAIL("expected singular-pole");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::singular_pole);
        }
    }
}

TEST_CASE("impedance to S11") {
    const FrequencyGrid grid = make_grid({1.0, 2.0, 3.0}, FrequencyUnit::gigahertz);
    SUBCASE("matched load floors out") {
        ComplexSpectrum z{grid, Eigen::Vector3cd::Constant(cplx(50.0, 0.0))};
        const S11Result r = s11_from_impedance(z, 50.0);
        for (int i = 0; i < 3; ++i) {
            CHECK(std::abs(r.s11.values[i]) == 0.0);
            CHECK(r.response.log_mag[i] == kLogMagFloor);
        }
    }
    SUBCASE("short circuit reflects fully") {
        ComplexSpectrum z{grid, Eigen::Vector3cd::Constant(cplx(0.0, 0.0))};
        const S11Result r = s11_from_impedance(z, 50.0);
        for (int i = 0; i < 3; ++i) {
            CHECK(r.s11.values[i] == cplx(-1.0, 0.0));
            CHECK(r.response.log_mag[i] == 0.0);
        }
    }
    SUBCASE("purely reactive load has unit magnitude") {
        ComplexSpectrum z{grid, Eigen::Vector3cd::Constant(cplx(0.0, 50.0))};
        const S11Result r = s11_from_impedance(z, 50.0);
        for (int i = 0; i < 3; ++i) CHECK(std::abs(r.s11.values[i]) == doctest::Approx(1.0).epsilon(1e-15));
    }
    SUBCASE("Z = -Z0 is degenerate") {
        ComplexSpectrum z{grid, Eigen::Vector3cd::Constant(cplx(-50.0, 0.0))};
        try {
            s11_from_impedance(z, 50.0);
            FAIL("expected degenerate-impedance");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::degenerate_impedance);
        }
    }
}

TEST_CASE("passivity implication of the impedance map") {
    Rng rng(99);
    const FrequencyGrid grid = linspace_grid(1.0, 5.0, 40, FrequencyUnit::gigahertz);
    ComplexSpectrum z;
    z.grid = grid;
    z.values.resize(40);
    for (int i = 0; i < 40; ++i) z.values[i] = cplx(rng.uniform(-80.0, 80.0), rng.uniform(-80.0, 80.0));
    const S11Result r = s11_from_impedance(z, 50.0);
    for (int i = 0; i < 40; ++i) {
        if (z.values[i].real() >= 0.0) CHECK(std::abs(r.s11.values[i]) <= 1.0 + 1e-9);
    }
}

TEST_CASE("shrinkage loss") {
    const FrequencyGrid g1 = make_grid({1.0});
    SUBCASE("zero residual") {
        FrequencyResponse p{g1, Eigen::VectorXd::Constant(1, 0.4)};
        CHECK(shrinkage_loss(p, p, 10.0, 0.2) == 0.0);
    }
    SUBCASE("residual at the knee halves the square") {
        FrequencyResponse p{g1, Eigen::VectorXd::Constant(1, 0.2)};
        FrequencyResponse t{g1, Eigen::VectorXd::Constant(1, 0.0)};
        CHECK(shrinkage_loss(p, t, 10.0, 0.2) == doctest::Approx(0.2 * 0.2 / 2.0).epsilon(1e-15));
    }
    SUBCASE("hand sigmoid evaluation") {
        FrequencyResponse p{g1, Eigen::VectorXd::Constant(1, 1.0)};
        FrequencyResponse t{g1, Eigen::VectorXd::Constant(1, 0.0)};
        CHECK(shrinkage_loss(p, t, 10.0, 0.2) ==
              doctest::Approx(1.0 / (1.0 + std::exp(-8.0))).epsilon(1e-15));
    }
    SUBCASE("reduces to half MSE as a -> 0 with c = 0") {
        const FrequencyGrid g = linspace_grid(0.0, 1.0, 9);
        Rng rng(4);
        FrequencyResponse p{g, Eigen::VectorXd::Zero(9)}, t{g, Eigen::VectorXd::Zero(9)};
        for (int i = 0; i < 9; ++i) p.log_mag[i] = rng.normal();
        const double s = shrinkage_loss(p, t, 1e-9, 0.0);
        CHECK(s == doctest::Approx(0.5 * mse_loss(p, t)).epsilon(1e-6));
    }
    SUBCASE("grid mismatch") {
        FrequencyResponse p{make_grid({1.0, 2.0}), Eigen::VectorXd::Zero(2)};
        FrequencyResponse t{make_grid({1.0, 3.0}), Eigen::VectorXd::Zero(2)};
        CHECK_THROWS_AS(shrinkage_loss(p, t, 10.0, 0.2), Error);
    }
}

TEST_CASE("zero/pole set matching") {
    const CZPModel m = random_model(123, 5);
    SUBCASE("identical models match at zero cost") {
        CHECK(match_zero_pole_sets(m, m) == 0.0);
    }
    SUBCASE("permutation costs nothing") {
        CZPModel r = m;
        std::reverse(r.zeros.begin(), r.zeros.end());
        CHECK(match_zero_pole_sets(m, r) == 0.0);
    }
    SUBCASE("a displaced root costs its displacement") {
        CZPModel r = m;
        r.zeros[2] += cplx(0.1, 0.0);
        CHECK(match_zero_pole_sets(m, r) == doctest::Approx(0.1).epsilon(1e-12));
    }
    SUBCASE("unequal degree is rejected") {
        CZPModel r = m;
        r.zeros.pop_back();
        r.poles.pop_back();
        CHECK_THROWS_AS(match_zero_pole_sets(m, r), Error);
    }
    SUBCASE("assignment beats the identity pairing") {
        // two clusters swapped: optimal matching crosses them
        CZPModel a, b;
        a.zeros = {cplx(0.0, 1.0), cplx(5.0, 1.0)};
        a.poles = {cplx(1.0, 1.0), cplx(2.0, 1.0)};
        b.zeros = {cplx(5.0, 1.0), cplx(0.0, 1.0)};
        b.poles = {cplx(2.0, 1.0), cplx(1.0, 1.0)};
        CHECK(match_zero_pole_sets(a, b) == 0.0);
    }
}

TEST_CASE("first-difference smoothness bound holds for randomized models") {
    const FrequencyGrid& grid = canonical_antenna_grid();
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const CZPModel m = random_model(seed, 1 + static_cast<int>(seed % 8), kDefaultEpsPole);
        const FrequencyResponse r = eval_log_s11(m, grid);
        CHECK(satisfies_smoothness_bound(m, grid, r.log_mag));
    }
}

TEST_CASE("dB conversion") {
    Eigen::VectorXd nat(1);
    nat << std::log(std::pow(10.0, -6.0 / 20.0));  // -6 dB in natural log
    CHECK(to_db(nat)[0] == doctest::Approx(-6.0).epsilon(1e-12));
}

TEST_CASE("model JSON round trip") {
    const CZPModel m = random_model(7, 3);
    const CZPModel back = czp_model_from_json(czp_model_to_json(m));
    CHECK(back.log_c0 == m.log_c0);
    REQUIRE(back.degree() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(back.zeros[static_cast<size_t>(i)] == m.zeros[static_cast<size_t>(i)]);
        CHECK(back.poles[static_cast<size_t>(i)] == m.poles[static_cast<size_t>(i)]);
    }
    CHECK(back.unit == m.unit);
}

TEST_CASE("response CSV round trips losslessly") {
    Rng rng(31);
    FrequencyResponse r;
    r.grid = canonical_antenna_grid();
    r.log_mag.resize(69);
    for (int i = 0; i < 69; ++i) r.log_mag[i] = rng.normal() * std::pow(10.0, rng.uniform(-3, 3));
    const FrequencyResponse back = response_from_csv(response_to_csv(r));
    REQUIRE(back.grid.count() == 69);
    CHECK(back.grid.unit == FrequencyUnit::gigahertz);
    for (int i = 0; i < 69; ++i) {
        CHECK(back.grid.values[i] == r.grid.values[i]);
        CHECK(back.log_mag[i] == r.log_mag[i]);
    }
}
