#include "czp/linear_system.hpp"

#include <nlohmann/json.hpp>

#include <Eigen/Eigenvalues>

#include <sstream>

namespace czp {

using json = nlohmann::ordered_json;

std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Builders

namespace {

// Assemble A = [[0, I], [diag(c^2) B, -g I]] from a Laplacian B.
LinearSystem assemble_wave_block(const Eigen::MatrixXd& laplacian, const Eigen::VectorXd& speed,
                                 double damping, GridMeta meta) {
    const int n = static_cast<int>(laplacian.rows());
    LinearSystem sys;
    sys.grid_meta = meta;
    sys.damping = damping;
    sys.wave_speed = speed;
    sys.a_matrix = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    sys.a_matrix.topRightCorner(n, n).setIdentity();
    sys.a_matrix.bottomLeftCorner(n, n) = speed.array().square().matrix().asDiagonal() * laplacian;
    sys.a_matrix.bottomRightCorner(n, n) = -damping * Eigen::MatrixXd::Identity(n, n);
    return sys;
}

}  // namespace

LinearSystem build_wave_system_1d(int n_cells, double wave_speed, double damping, double dx) {
    require(n_cells >= 2, Errc::invalid_argument,
            "build_wave_system_1d: n_cells must be >= 2");
    require(wave_speed > 0.0, Errc::invalid_argument, "build_wave_system_1d: wave_speed must be > 0");
    require(damping >= 0.0, Errc::invalid_argument, "build_wave_system_1d: damping must be >= 0");
    require(dx > 0.0, Errc::invalid_argument, "build_wave_system_1d: dx must be > 0");

    const double inv_dx2 = 1.0 / (dx * dx);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n_cells, n_cells);
    for (int i = 0; i < n_cells; ++i) {
        b(i, i) = -2.0 * inv_dx2;
        if (i > 0) b(i, i - 1) = inv_dx2;
        if (i + 1 < n_cells) b(i, i + 1) = inv_dx2;
    }
    GridMeta meta{StencilKind::laplace_1d, 1, n_cells, dx};
    return assemble_wave_block(b, Eigen::VectorXd::Constant(n_cells, wave_speed), damping, meta);
}

LinearSystem build_field_2d(const Eigen::MatrixXd& material_map, double damping, double dx,
                            int cell_cap) {
    const int h = static_cast<int>(material_map.rows());
    const int w = static_cast<int>(material_map.cols());
    require(h >= 1 && w >= 1, Errc::invalid_argument, "build_field_2d: empty material map");
    require(damping > 0.0, Errc::invalid_argument, "build_field_2d: damping must be > 0");
    require(dx > 0.0, Errc::invalid_argument, "build_field_2d: dx must be > 0");
    require((material_map.array() > 0.0).all(), Errc::invalid_argument,
            "build_field_2d: all speeds must be > 0");
    if (h * w > cell_cap) {
        std::ostringstream msg;
        msg << "build_field_2d: " << h << "x" << w << " = " << h * w
            << " cells exceeds capacity cap " << cell_cap;
        fail(Errc::capacity, msg.str());
    }

    const int n = h * w;
    const double inv_dx2 = 1.0 / (dx * dx);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
    auto idx = [w](int r, int c) { return r * w + c; };
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const int i = idx(r, c);
            b(i, i) = -4.0 * inv_dx2;  // missing neighbours stay folded into Dirichlet zero
            if (r > 0) b(i, idx(r - 1, c)) = inv_dx2;
            if (r + 1 < h) b(i, idx(r + 1, c)) = inv_dx2;
            if (c > 0) b(i, idx(r, c - 1)) = inv_dx2;
            if (c + 1 < w) b(i, idx(r, c + 1)) = inv_dx2;
        }
    }
    Eigen::VectorXd speed(n);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) speed[idx(r, c)] = material_map(r, c);
    GridMeta meta{StencilKind::laplace_2d, h, w, dx};
    return assemble_wave_block(b, speed, damping, meta);
}

// ---------------------------------------------------------------------------
// Integration

Trajectory integrate(const LinearSystem& system, const Eigen::VectorXd& initial, double dt,
                     double horizon) {
    const int n = system.state_dim();
    require(initial.size() == n, Errc::invalid_argument, "integrate: initial size mismatch");
    require(initial.allFinite(), Errc::invalid_argument, "integrate: initial must be finite");
    require(dt > 0.0, Errc::invalid_argument, "integrate: dt must be > 0");
    require(horizon > 0.0, Errc::invalid_argument, "integrate: horizon must be > 0");

    const int steps = static_cast<int>(std::ceil(horizon / dt - 1e-12));
    Trajectory traj;
    traj.times.resize(steps + 1);
    traj.states.resize(n, steps + 1);
    traj.states.col(0) = initial;
    for (int i = 0; i <= steps; ++i) traj.times[i] = i * dt;

    const Eigen::MatrixXd& a = system.a_matrix;
    Eigen::VectorXd x = initial, k1(n), k2(n), k3(n), k4(n);
    for (int i = 0; i < steps; ++i) {
        k1.noalias() = a * x;
        k2.noalias() = a * (x + (0.5 * dt) * k1);
        k3.noalias() = a * (x + (0.5 * dt) * k2);
        k4.noalias() = a * (x + dt * k3);
        x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!(x.norm() <= 1e12)) {
            std::ostringstream msg;
            msg << "integrate: divergence detected at step " << i + 1 << " (|state| > 1e12)";
            fail(Errc::instability, msg.str());
        }
        traj.states.col(i + 1) = x;
    }
    return traj;
}

// ---------------------------------------------------------------------------
// Eigendecomposition

namespace {

// Reconstruction check against a few deterministic probe vectors:
// ||A x - U diag(l) U^{-1} x|| / (||A||_F ||x||). Cheap (O(N^2)) and
// catches defective or badly conditioned decompositions.
double probe_residual(const Eigen::MatrixXd& a, const SpectralDecomposition& dec) {
    const int n = static_cast<int>(a.rows());
    const double a_norm = a.norm();
    if (a_norm == 0.0) return 0.0;
    Rng rng(0x5eedful);
    double worst = 0.0;
    for (int p = 0; p < 4; ++p) {
        Eigen::VectorXd x(n);
        for (int i = 0; i < n; ++i) x[i] = rng.uniform(-1.0, 1.0);
        Eigen::VectorXcd y = dec.inverse_vectors * x.cast<std::complex<double>>();
        y.array() *= dec.eigenvalues.array();
        Eigen::VectorXcd rec = dec.right_vectors * y;
        Eigen::VectorXcd direct = (a * x).cast<std::complex<double>>();
        double r = (rec - direct).norm() / (a_norm * x.norm());
        if (!std::isfinite(r)) return std::numeric_limits<double>::infinity();
        worst = std::max(worst, r);
    }
    return worst;
}

double condition_estimate_1norm(const Eigen::MatrixXcd& u, const Eigen::MatrixXcd& u_inv) {
    double nu = u.cwiseAbs().colwise().sum().maxCoeff();
    double nv = u_inv.cwiseAbs().colwise().sum().maxCoeff();
    return nu * nv;
}

// Structured path for builder systems: the bottom-left block diag(c^2) B is
// similar to the symmetric S = diag(c) B diag(c), so the whole decomposition
// follows from one SelfAdjointEigenSolver of half the state dimension.
bool wave_block_eigendecompose(const LinearSystem& sys, SpectralDecomposition& out) {
    const int cells = sys.grid_meta.cells();
    if (sys.grid_meta.stencil == StencilKind::none) return false;
    if (cells <= 0 || sys.wave_speed.size() != cells) return false;
    if (sys.state_dim() != 2 * cells) return false;

    const int n = cells;
    const Eigen::MatrixXd block = sys.a_matrix.bottomLeftCorner(n, n);
    // recover B-like operator: rows scaled back by 1/c^2, then symmetrize via C B C
    Eigen::VectorXd c = sys.wave_speed;
    Eigen::MatrixXd s(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s(i, j) = block(i, j) * c[j] / c[i];
    // s must be symmetric for this path to be valid
    if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-10 * s.cwiseAbs().maxCoeff()) return false;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (s + s.transpose()));
    if (es.info() != Eigen::Success) return false;

    const double g = sys.damping;
    out.eigenvalues.resize(2 * n);
    out.right_vectors.resize(2 * n, 2 * n);
    out.inverse_vectors.resize(2 * n, 2 * n);
    out.conj_pair.assign(2 * n, -1);

    Eigen::MatrixXd y = es.eigenvectors();          // orthonormal, S = Y diag(-mu) Y^T
    Eigen::MatrixXd v(n, n), v_inv(n, n);           // V = diag(c) Y, V^{-1} = Y^T diag(1/c)
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            v(i, k) = c[i] * y(i, k);
            v_inv(k, i) = y(i, k) / c[i];
        }

    using cplx = std::complex<double>;
    for (int k = 0; k < n; ++k) {
        const double mu = -es.eigenvalues()[k];     // >= 0 for Dirichlet Laplacians
        const double disc = g * g - 4.0 * mu;
        cplx lp, lm;
        bool conj = false;
        if (disc < 0.0) {
            const double im = 0.5 * std::sqrt(-disc);
            lp = cplx(-0.5 * g, im);
            lm = std::conj(lp);
            conj = true;
        } else {
            const double root = std::sqrt(disc);
            lp = cplx(0.5 * (-g + root), 0.0);
            lm = cplx(0.5 * (-g - root), 0.0);
            if (lp == lm) return false;  // defective pair, let the general path report it
        }
        const int ip = 2 * k, im_ = 2 * k + 1;
        out.eigenvalues[ip] = lp;
        out.eigenvalues[im_] = lm;
        if (conj) {
            out.conj_pair[ip] = im_;
            out.conj_pair[im_] = ip;
        }
        const cplx det = lp - lm;
        for (int i = 0; i < n; ++i) {
            out.right_vectors(i, ip) = v(i, k);
            out.right_vectors(n + i, ip) = lp * v(i, k);
            out.right_vectors(i, im_) = conj ? std::conj(out.right_vectors(i, ip)) : v(i, k);
            out.right_vectors(n + i, im_) =
                conj ? std::conj(out.right_vectors(n + i, ip)) : lm * v(i, k);
        }
        // coefficients: a+ = (eta - lm*xi)/(lp - lm), a- = (lp*xi - eta)/(lp - lm)
        for (int j = 0; j < n; ++j) {
            const double w = v_inv(k, j);
            out.inverse_vectors(ip, j) = -lm * w / det;
            out.inverse_vectors(ip, n + j) = w / det;
            if (conj) {
                out.inverse_vectors(im_, j) = std::conj(out.inverse_vectors(ip, j));
                out.inverse_vectors(im_, n + j) = std::conj(out.inverse_vectors(ip, n + j));
            } else {
                out.inverse_vectors(im_, j) = lp * w / det;
                out.inverse_vectors(im_, n + j) = -w / det;
            }
        }
    }
    return true;
}

void general_eigendecompose(const LinearSystem& sys, SpectralDecomposition& out) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(sys.a_matrix);
    require(es.info() == Eigen::Success, Errc::numeric, "eigendecompose: solver failed");
    out.eigenvalues = es.eigenvalues();
    out.right_vectors = es.eigenvectors();

    const int n = sys.state_dim();
    out.conj_pair.assign(n, -1);
    // The real Schur form emits conjugate pairs as adjacent columns; make the
    // pairing exact so downstream spectra are conjugate-symmetric bit for bit.
    for (int i = 0; i < n; ++i) {
        if (out.conj_pair[i] != -1) continue;
        if (out.eigenvalues[i].imag() == 0.0) continue;
        if (i + 1 < n &&
            out.eigenvalues[i + 1].real() == out.eigenvalues[i].real() &&
            out.eigenvalues[i + 1].imag() == -out.eigenvalues[i].imag()) {
            out.eigenvalues[i + 1] = std::conj(out.eigenvalues[i]);
            out.right_vectors.col(i + 1) = out.right_vectors.col(i).conjugate();
            out.conj_pair[i] = i + 1;
            out.conj_pair[i + 1] = i;
        }
    }

    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(out.right_vectors);
    out.inverse_vectors = lu.inverse();
    // Symmetrize U^{-1} rows over conjugate pairs and strip stray imaginary
    // parts on real-mode rows; halves the error and restores exact pairing.
    for (int i = 0; i < n; ++i) {
        const int j = out.conj_pair[i];
        if (j > i) {
            Eigen::RowVectorXcd avg =
                0.5 * (out.inverse_vectors.row(i) + out.inverse_vectors.row(j).conjugate());
            out.inverse_vectors.row(i) = avg;
            out.inverse_vectors.row(j) = avg.conjugate();
        } else if (j == -1 && out.eigenvalues[i].imag() == 0.0) {
            out.inverse_vectors.row(i) = out.inverse_vectors.row(i).real().cast<std::complex<double>>();
            out.right_vectors.col(i) = out.right_vectors.col(i).real().cast<std::complex<double>>();
        }
    }
}

}  // namespace

SpectralDecomposition eigendecompose(const LinearSystem& system) {
    require(system.a_matrix.rows() == system.a_matrix.cols(), Errc::invalid_argument,
            "eigendecompose: matrix must be square");
    require(system.a_matrix.allFinite(), Errc::invalid_argument,
            "eigendecompose: matrix must be finite");

    SpectralDecomposition dec;
    bool structured = wave_block_eigendecompose(system, dec);
    double residual = structured ? probe_residual(system.a_matrix, dec)
                                 : std::numeric_limits<double>::infinity();
    if (!structured || residual > 1e-8) {
        general_eigendecompose(system, dec);
        residual = probe_residual(system.a_matrix, dec);
    }
    if (!(residual <= 1e-6)) {
        std::ostringstream msg;
        msg << "eigendecompose: reconstruction residual " << residual
            << " exceeds 1e-6; matrix is defective or near-defective";
        fail(Errc::not_diagonalizable, msg.str());
    }
    dec.condition_estimate = condition_estimate_1norm(dec.right_vectors, dec.inverse_vectors);
    return dec;
}

double reconstruction_residual(const LinearSystem& system, const SpectralDecomposition& dec) {
    Eigen::MatrixXcd rec = dec.right_vectors * dec.eigenvalues.asDiagonal() * dec.inverse_vectors;
    return (rec - system.a_matrix.cast<std::complex<double>>()).norm() / system.a_matrix.norm();
}

// ---------------------------------------------------------------------------
// Serialization

std::string linear_system_to_json(const LinearSystem& system) {
    json j;
    j["state_dim"] = system.state_dim();
    j["damping"] = system.damping;
    j["grid"] = {{"stencil", static_cast<int>(system.grid_meta.stencil)},
                 {"height", system.grid_meta.height},
                 {"width", system.grid_meta.width},
                 {"dx", system.grid_meta.dx}};
    j["wave_speed"] = std::vector<double>(system.wave_speed.data(),
                                          system.wave_speed.data() + system.wave_speed.size());
    std::vector<double> m;
    m.reserve(static_cast<size_t>(system.state_dim()) * system.state_dim());
    for (int r = 0; r < system.state_dim(); ++r)
        for (int c = 0; c < system.state_dim(); ++c) m.push_back(system.a_matrix(r, c));
    j["matrix_row_major"] = m;
    return j.dump();
}

LinearSystem linear_system_from_json(const std::string& text) {
    json j = json::parse(text);
    LinearSystem sys;
    const int n = j.at("state_dim").get<int>();
    sys.damping = j.at("damping").get<double>();
    sys.grid_meta.stencil = static_cast<StencilKind>(j.at("grid").at("stencil").get<int>());
    sys.grid_meta.height = j.at("grid").at("height").get<int>();
    sys.grid_meta.width = j.at("grid").at("width").get<int>();
    sys.grid_meta.dx = j.at("grid").at("dx").get<double>();
    auto speeds = j.at("wave_speed").get<std::vector<double>>();
    sys.wave_speed = Eigen::Map<Eigen::VectorXd>(speeds.data(), static_cast<int>(speeds.size()));
    auto m = j.at("matrix_row_major").get<std::vector<double>>();
    require(static_cast<int>(m.size()) == n * n, Errc::io, "linear_system_from_json: bad matrix size");
    sys.a_matrix.resize(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) sys.a_matrix(r, c) = m[static_cast<size_t>(r) * n + c];
    return sys;
}

}  // namespace czp
