// linear_system.hpp -- discretized linear PDE systems d(phi)/dt = A*phi.
//
// Builders produce damped wave systems in block form
//
//     A = [ 0            I    ]
//         [ diag(c^2) B  -g I ]
//
// where B is a second-difference (1D) or five-point (2D) Laplacian with
// Dirichlet boundaries, c is a per-cell wave speed and g >= 0 a uniform
// velocity damping. For g > 0 every mode of A decays: the pair of
// eigenvalues per Laplacian mode mu solves l^2 + g*l + c^2*mu = 0, so
// Re[l] = -g/2 whenever g^2 < 4 c^2 mu.

#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "czp/common.hpp"

namespace czp {

enum class StencilKind { none, laplace_1d, laplace_2d };

struct GridMeta {
    StencilKind stencil = StencilKind::none;
    int height = 0;    // cells (1 for 1D)
    int width = 0;     // cells
    double dx = 1.0;   // cell size (mm for antenna paths, 1 otherwise)

    int cells() const { return height * width; }
};

struct LinearSystem {
    Eigen::MatrixXd a_matrix;       // N x N, units 1/time
    GridMeta grid_meta;
    double damping = 0.0;           // g >= 0
    Eigen::VectorXd wave_speed;     // per-cell c; empty for ad-hoc systems

    int state_dim() const { return static_cast<int>(a_matrix.rows()); }
};

struct Trajectory {
    Eigen::VectorXd times;          // strictly increasing, uniform step
    Eigen::MatrixXd states;         // N x (steps+1), column per instant

    double dt() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
    int steps() const { return static_cast<int>(times.size()) - 1; }
};

struct SpectralDecomposition {
    Eigen::VectorXcd eigenvalues;
    Eigen::MatrixXcd right_vectors;    // U, columns are eigenvectors
    Eigen::MatrixXcd inverse_vectors;  // U^{-1}
    double condition_estimate = 0.0;
    // conj_pair[i] = j when eigenvalues i,j form an exact conjugate pair,
    // -1 for real-axis modes. Pairing is enforced bit-exactly so that
    // spectra of real systems are conjugate-symmetric in floating point.
    std::vector<int> conj_pair;
};

// Builders --------------------------------------------------------------

LinearSystem build_wave_system_1d(int n_cells, double wave_speed, double damping, double dx);

// material_map is H x W of per-cell speeds. Capacity cap guards the
// eigendecomposition cost (cells <= cap).
LinearSystem build_field_2d(const Eigen::MatrixXd& material_map, double damping, double dx,
                            int cell_cap = 2000);

// Operations ------------------------------------------------------------

// Classical fixed-step RK4. Divergence (state norm > 1e12) raises
// Errc::instability naming the step.
Trajectory integrate(const LinearSystem& system, const Eigen::VectorXd& initial, double dt,
                     double horizon);

// Dense eigendecomposition A = U diag(l) U^{-1}. Builder systems take a
// structured path through the symmetric Laplacian core; everything else
// goes through the general dense solver. A reconstruction probe above
// 1e-6 relative raises Errc::not_diagonalizable.
SpectralDecomposition eigendecompose(const LinearSystem& system);

// Full reconstruction residual ||A - U diag(l) U^{-1}||_F / ||A||_F.
// O(N^3); used by tests, not by the probe check inside eigendecompose.
double reconstruction_residual(const LinearSystem& system, const SpectralDecomposition& dec);

// Serialization (test fixtures) -----------------------------------------

std::string linear_system_to_json(const LinearSystem& system);
LinearSystem linear_system_from_json(const std::string& text);

}  // namespace czp
