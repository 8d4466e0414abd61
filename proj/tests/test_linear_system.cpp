#include <doctest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include "czp/linear_system.hpp"

using namespace czp;

namespace {

LinearSystem ad_hoc(const Eigen::MatrixXd& a) {
    LinearSystem sys;
    sys.a_matrix = a;
    return sys;
}

}  // namespace

TEST_CASE("1D wave builder block structure") {
    const LinearSystem sys = build_wave_system_1d(2, 1.0, 0.0, 1.0);
    REQUIRE(sys.state_dim() == 4);
    Eigen::MatrixXd expected(4, 4);
    expected << 0, 0, 1, 0,
                0, 0, 0, 1,
               -2, 1, 0, 0,
                1, -2, 0, 0;
    CHECK((sys.a_matrix - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("1D wave builder rejects degenerate inputs") {
    CHECK_THROWS_AS(build_wave_system_1d(1, 1.0, 0.0, 1.0), Error);
    CHECK_THROWS_AS(build_wave_system_1d(4, 1.0, 0.0, 0.0), Error);
    CHECK_THROWS_AS(build_wave_system_1d(4, -1.0, 0.0, 1.0), Error);
    try {
        build_wave_system_1d(1, 1.0, 0.0, 1.0);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::invalid_argument);
    }
}

TEST_CASE("uniform damping splits evenly over all modes") {
    const LinearSystem sys = build_wave_system_1d(8, 1.0, 0.1, 1.0);
    const SpectralDecomposition dec = eigendecompose(sys);
    REQUIRE(dec.eigenvalues.size() == 16);
    for (int i = 0; i < 16; ++i) {
        CHECK(dec.eigenvalues[i].real() == doctest::Approx(-0.05).epsilon(1e-10));
        CHECK(dec.eigenvalues[i].real() < 0.0);
    }
}

TEST_CASE("2D field builder") {
    SUBCASE("1x2 grid five-point stencil") {
        Eigen::MatrixXd speeds = Eigen::MatrixXd::Ones(1, 2);
        const LinearSystem sys = build_field_2d(speeds, 0.2, 1.0);
        REQUIRE(sys.state_dim() == 4);
        Eigen::MatrixXd bl = sys.a_matrix.bottomLeftCorner(2, 2);
        CHECK(bl(0, 0) == -4.0);
        CHECK(bl(0, 1) == 1.0);
        CHECK(bl(1, 0) == 1.0);
        CHECK(bl(1, 1) == -4.0);
        CHECK(sys.a_matrix.bottomRightCorner(2, 2)(0, 0) == -0.2);
    }
    SUBCASE("6x30 grid doubles the cell count") {
        const LinearSystem sys = build_field_2d(Eigen::MatrixXd::Ones(6, 30), 0.2, 1.0);
        CHECK(sys.state_dim() == 360);
    }
    SUBCASE("capacity cap") {
        try {
            build_field_2d(Eigen::MatrixXd::Ones(40, 60), 0.2, 1.0, 2000);
            FAIL("expected capacity error");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::capacity);
            CHECK(std::string(e.what()).find("2000") != std::string::npos);
        }
    }
}

TEST_CASE("RK4 integration") {
    SUBCASE("scalar exponential decay") {
        const LinearSystem sys = ad_hoc(Eigen::MatrixXd::Constant(1, 1, -1.0));
        const Trajectory traj = integrate(sys, Eigen::VectorXd::Ones(1), 0.01, 1.0);
        CHECK(traj.states(0, 0) == 1.0);
        CHECK(traj.states(0, traj.steps()) == doctest::Approx(std::exp(-1.0)).epsilon(1e-8));
    }
    SUBCASE("rotation returns to start") {
        Eigen::MatrixXd a(2, 2);
        a << 0, 1, -1, 0;
        const double period = 2.0 * 3.14159265358979323846;
        const double dt = period / 4096.0;
        Eigen::VectorXd x0(2);
        x0 << 1, 0;
        const Trajectory traj = integrate(ad_hoc(a), x0, dt, period);
        REQUIRE(traj.steps() == 4096);
        CHECK((traj.states.col(4096) - x0).norm() < 1e-6);
    }
    SUBCASE("unstable step reports divergence") {
        const LinearSystem sys = build_wave_system_1d(8, 1.0, 0.1, 1.0);
        Rng rng(7);
        Eigen::VectorXd x0(16);
        for (int i = 0; i < 16; ++i) x0[i] = rng.normal();
        x0.normalize();
        try {
            integrate(sys, x0, 10.0, 200.0);
            FAIL("expected instability");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::instability);
            CHECK(std::string(e.what()).find("step") != std::string::npos);
        }
    }
}

TEST_CASE("integration is linear in the initial state") {
    Rng rng(42);
    for (int trial = 0; trial < 4; ++trial) {
        const int n = 2 + 2 * trial;
        Eigen::MatrixXd a(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) a(i, j) = 0.5 * rng.normal() - (i == j ? 1.0 : 0.0);
        Eigen::VectorXd u(n), v(n);
        for (int i = 0; i < n; ++i) {
            u[i] = rng.normal();
            v[i] = rng.normal();
        }
        const double alpha = 0.7, beta = -1.3;
        const LinearSystem sys = ad_hoc(a);
        const Trajectory tu = integrate(sys, u, 0.05, 2.0);
        const Trajectory tv = integrate(sys, v, 0.05, 2.0);
        const Trajectory tc = integrate(sys, alpha * u + beta * v, 0.05, 2.0);
        const double err =
            (tc.states - (alpha * tu.states + beta * tv.states)).cwiseAbs().maxCoeff();
        CHECK(err < 1e-9);
    }
}

TEST_CASE("RK4 order: halving dt gains at least 8x") {
    Eigen::MatrixXd a(2, 2);
    a << 0, 1, -1, -0.2;
    Eigen::VectorXd x0(2);
    x0 << 1, 0.5;
    const Eigen::MatrixXd reference = (a * 1.0).exp();
    const Eigen::VectorXd exact = reference * x0;
    auto final_error = [&](double dt) {
        const Trajectory t = integrate(ad_hoc(a), x0, dt, 1.0);
        return (t.states.col(t.steps()) - exact).norm();
    };
    const double e1 = final_error(0.02);
    const double e2 = final_error(0.01);
    CHECK(e1 / e2 >= 8.0);
}

TEST_CASE("eigendecompose") {
    SUBCASE("diagonal system") {
        Eigen::MatrixXd a = Eigen::Vector2d(-1.0, -2.0).asDiagonal();
        const SpectralDecomposition dec = eigendecompose(ad_hoc(a));
        std::vector<double> re = {dec.eigenvalues[0].real(), dec.eigenvalues[1].real()};
        std::sort(re.begin(), re.end());
        CHECK(re[0] == doctest::Approx(-2.0).epsilon(1e-14));
        CHECK(re[1] == doctest::Approx(-1.0).epsilon(1e-14));
        // eigenvector columns are a permutation of the identity
        for (int c = 0; c < 2; ++c) {
            Eigen::VectorXd col = dec.right_vectors.col(c).cwiseAbs();
            CHECK(col.maxCoeff() == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(col.minCoeff() == doctest::Approx(0.0).epsilon(1e-12));
        }
    }
    SUBCASE("damped oscillator has the hand-computed pair") {
        Eigen::MatrixXd a(2, 2);
        a << 0, 1, -1, -0.2;
        const SpectralDecomposition dec = eigendecompose(ad_hoc(a));
        // characteristic polynomial: l^2 + 0.2 l + 1 = 0
        const double im = std::sqrt(1.0 - 0.01);
        for (int i = 0; i < 2; ++i) {
            CHECK(dec.eigenvalues[i].real() == doctest::Approx(-0.1).epsilon(1e-12));
            CHECK(std::abs(dec.eigenvalues[i].imag()) == doctest::Approx(im).epsilon(1e-12));
        }
        CHECK(dec.conj_pair[0] == 1);
        CHECK(dec.conj_pair[1] == 0);
        CHECK(dec.condition_estimate > 0.0);
    }
    SUBCASE("Jordan block is rejected") {
        Eigen::MatrixXd a(2, 2);
        a << 0, 1, 0, 0;
        try {
            eigendecompose(ad_hoc(a));
            FAIL("expected not-diagonalizable");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::not_diagonalizable);
        }
    }
}

TEST_CASE("reconstruction residual stays below 1e-8 on builder outputs") {
    SUBCASE("1D up to N = 720") {
        const LinearSystem sys = build_wave_system_1d(360, 1.3, 0.1, 1.0);
        const SpectralDecomposition dec = eigendecompose(sys);
        CHECK(reconstruction_residual(sys, dec) <= 1e-8);
    }
    SUBCASE("2D mixed speeds") {
        Eigen::MatrixXd speeds = Eigen::MatrixXd::Ones(6, 30);
        speeds.block(2, 5, 3, 10).setConstant(2.2);
        const LinearSystem sys = build_field_2d(speeds, 0.12, 1.0);
        const SpectralDecomposition dec = eigendecompose(sys);
        CHECK(reconstruction_residual(sys, dec) <= 1e-8);
        for (int i = 0; i < dec.eigenvalues.size(); ++i) CHECK(dec.eigenvalues[i].real() < 0.0);
    }
}

TEST_CASE("linear system JSON fixture round trip") {
    const LinearSystem sys = build_wave_system_1d(3, 2.0, 0.05, 0.5);
    const LinearSystem back = linear_system_from_json(linear_system_to_json(sys));
    CHECK(back.state_dim() == sys.state_dim());
    CHECK(back.damping == sys.damping);
    CHECK(back.grid_meta.dx == sys.grid_meta.dx);
    CHECK((back.a_matrix - sys.a_matrix).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.wave_speed - sys.wave_speed).cwiseAbs().maxCoeff() == 0.0);
}
