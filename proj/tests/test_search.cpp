#include <doctest.h>

#include "czp/search.hpp"

using namespace czp;

TEST_CASE("placement environment") {
    const DesignSpace& space = five_patch_space();
    PlacementEnv env(space);
    SUBCASE("five in-range actions assemble the design") {
        const DesignVector want = sample_design(space, 17);
        std::optional<DesignVector> got;
        for (int m = 0; m < 5; ++m) {
            auto step = env.step(want.locations[static_cast<size_t>(m)].x(),
                                 want.locations[static_cast<size_t>(m)].y());
            CHECK(!step.clamped);
            CHECK(step.state.next_patch == m + 1);
            if (step.terminal) got = step.terminal;
        }
        REQUIRE(got.has_value());
        for (int m = 0; m < 5; ++m)
            CHECK(got->locations[static_cast<size_t>(m)] == want.locations[static_cast<size_t>(m)]);
    }
    SUBCASE("out-of-range actions clamp to the boundary") {
        env.reset();
        env.step(5.0, 0.5);  // patch 1
        auto step = env.step(99.0, 99.0);  // patch 2 ranges: x [0, 12.36], y [1, 4.7]
        CHECK(step.clamped);
        CHECK(step.state.placed.back().x == 12.36);
        CHECK(step.state.placed.back().y == 4.7);
    }
    SUBCASE("a sixth step is invalid") {
        env.reset();
        for (int m = 0; m < 5; ++m) env.step(5.0, 1.5);
        try {
            env.step(1.0, 1.0);
            FAIL("expected invalid-state");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::invalid_state);
        }
    }
}

TEST_CASE("reward examples") {
    const FrequencyGrid& grid = canonical_antenna_grid();
    SUBCASE("exactly on target everywhere") {
        const RewardBreakdown r = reward(grid, Eigen::VectorXd::Constant(69, -6.0));
        CHECK(r.r_low == 0.0);
        CHECK(r.r_high == 0.0);
        CHECK(r.total == 0.0);
    }
    SUBCASE("uniformly below target, high band clamped") {
        const RewardBreakdown r = reward(grid, Eigen::VectorXd::Constant(69, -10.0));
        CHECK(r.r_low == 4.0);
        CHECK(r.r_high == 4.0);
        CHECK(r.r_high_clamped == 1.0);
        CHECK(r.total == 5.0);
    }
    SUBCASE("a violation at 2.45 GHz dominates the low band") {
        // 0.05-step grid so 2.45 GHz is a grid point
        std::vector<double> freqs;
        for (int i = 0; i <= 100; ++i) freqs.push_back(2.0 + 0.05 * i);
        const FrequencyGrid fine = make_grid(std::move(freqs), FrequencyUnit::gigahertz);
        Eigen::VectorXd resp = Eigen::VectorXd::Constant(fine.count(), -10.0);
        resp[9] = -3.0;  // 2.45 GHz
        const RewardBreakdown r = reward(fine, resp);
        CHECK(r.r_low == -3.0);
        CHECK(r.total == -2.0);
    }
    SUBCASE("grid without band points is rejected") {
        const FrequencyGrid off = make_grid({1.0, 2.0}, FrequencyUnit::gigahertz);
        CHECK_THROWS_AS(reward(off, Eigen::VectorXd::Zero(2)), Error);
    }
}

TEST_CASE("reward properties") {
    const FrequencyGrid& grid = canonical_antenna_grid();
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::VectorXd resp(69);
        for (int i = 0; i < 69; ++i) resp[i] = rng.uniform(-30.0, 5.0);
        const RewardBreakdown base = reward(grid, resp);
        CHECK(base.r_high_clamped <= 1.0);

        // perturbing outside both bands never changes the reward
        Eigen::VectorXd out = resp;
        for (int i = 0; i < 69; ++i) {
            const double f = grid.values[i];
            const bool in_band = (f >= 2.4 - 1e-9 && f <= 2.5 + 1e-9) || (f >= 5.1 - 1e-9);
            if (!in_band) out[i] += rng.uniform(-20.0, 20.0);
        }
        const RewardBreakdown moved = reward(grid, out);
        CHECK(moved.total == base.total);

        // raising any in-band value never raises the total
        Eigen::VectorXd worse = resp;
        worse[22] += 2.0;  // 2.4 GHz
        CHECK(reward(grid, worse).total <= base.total);
    }
}

TEST_CASE("CEM converges on a convex stub objective and beats random search") {
    const DesignSpace& space = five_patch_space();
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        const DesignVector target = sample_design(space, 500 + seed);
        Objective stub = [&](const DesignVector& d) {
            double dist2 = 0.0;
            for (int m = 0; m < 5; ++m)
                dist2 += (d.locations[static_cast<size_t>(m)] - target.locations[static_cast<size_t>(m)]).squaredNorm();
            return -std::sqrt(dist2);
        };
        SearchConfig cfg;
        cfg.method = SearchMethod::cem;
        cfg.population = 64;
        cfg.episodes = 64 * 50;
        cfg.seed = seed;
        const SearchResult cem = search(stub, space, cfg);
        REQUIRE(cem.iterations <= 50);
        for (int m = 0; m < 5; ++m) {
            CHECK(std::abs(cem.final_mean[2 * m] - target.locations[static_cast<size_t>(m)].x()) <= 0.1);
            CHECK(std::abs(cem.final_mean[2 * m + 1] - target.locations[static_cast<size_t>(m)].y()) <= 0.1);
        }

        SearchConfig rnd = cfg;
        rnd.method = SearchMethod::random;
        const SearchResult random_result = search(stub, space, rnd);
        CHECK(random_result.top[0].reward <= cem.top[0].reward);
    }
}

TEST_CASE("search is deterministic and scale-invariant in the rewards") {
    const DesignSpace& space = five_patch_space();
    const DesignVector target = sample_design(space, 321);
    auto stub_scaled = [&](double scale) {
        return Objective([&, scale](const DesignVector& d) {
            double dist = 0.0;
            for (int m = 0; m < 5; ++m)
                dist += (d.locations[static_cast<size_t>(m)] - target.locations[static_cast<size_t>(m)]).norm();
            return -scale * dist;
        });
    };
    SearchConfig cfg;
    cfg.population = 32;
    cfg.episodes = 32 * 10;
    cfg.seed = 7;

    const SearchResult a = search(stub_scaled(1.0), space, cfg);
    const SearchResult b = search(stub_scaled(1.0), space, cfg);
    const SearchResult c = search(stub_scaled(3.7), space, cfg);

    REQUIRE(a.top.size() == b.top.size());
    for (size_t i = 0; i < a.top.size(); ++i)
        for (int m = 0; m < 5; ++m)
            CHECK(a.top[i].design.locations[static_cast<size_t>(m)] ==
                  b.top[i].design.locations[static_cast<size_t>(m)]);
    // positive scaling preserves elite selection, hence the whole trajectory
    CHECK(a.final_mean == c.final_mean);
    for (size_t i = 0; i < a.top.size(); ++i)
        for (int m = 0; m < 5; ++m)
            CHECK(a.top[i].design.locations[static_cast<size_t>(m)] ==
                  c.top[i].design.locations[static_cast<size_t>(m)]);
}

TEST_CASE("verification flags designs against the oracle") {
    OracleConfig cfg;
    cfg.raster_res = 0.5;
    cfg.freq_scale = 0.28;
    cfg.impedance_scale = 150.0;
    cfg.damping = 0.2;
    std::vector<DesignVector> designs;
    for (std::uint64_t seed = 0; seed < 3; ++seed)
        designs.push_back(sample_design(five_patch_space(), seed));
    const std::vector<VerifyRow> rows = verify(designs, five_patch_space(), cfg);
    REQUIRE(rows.size() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(rows[static_cast<size_t>(i)].index == i);
        CHECK(rows[static_cast<size_t>(i)].success ==
              (rows[static_cast<size_t>(i)].r_low >= 0.0 && rows[static_cast<size_t>(i)].r_high >= 0.0));
    }
    // an impossible target fails everything and reports the gap
    RewardTargets brutal;
    brutal.low_db = -200.0;
    brutal.high_db = -200.0;
    const std::vector<VerifyRow> failed = verify(designs, five_patch_space(), cfg, brutal);
    for (const VerifyRow& r : failed) {
        CHECK(!r.success);
        CHECK(r.r_low < 0.0);
    }
    const std::string csv = verify_table_to_csv(failed);
    CHECK(csv.find("design,r_low_db,r_high_db,success") == 0);
}
