// spectral.hpp -- temporal Fourier transforms of linear-system trajectories,
// transfer functions between linear functionals, and the exact rational
// (zeros/poles) representation those transfer functions are guaranteed to
// have for diagonalizable systems.
//
// Conventions. The single-sided transform is F(w) = int_0^inf phi(t)
// exp(-i w t) dt, which for a decaying mode l contributes 1/(i w - l); the
// double-sided transform of the symmetric extension contributes
// -2 l / (l^2 + w^2). Rational functions are reported in the w-plane: the
// internal root variable s = i w maps roots via w = -i s.

#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "czp/linear_system.hpp"

namespace czp {

using cplx = std::complex<double>;

enum class FrequencyUnit { dimensionless, gigahertz };

struct FrequencyGrid {
    Eigen::VectorXd values;  // strictly increasing, finite
    FrequencyUnit unit = FrequencyUnit::dimensionless;

    int count() const { return static_cast<int>(values.size()); }
};

FrequencyGrid make_grid(std::vector<double> values,
                        FrequencyUnit unit = FrequencyUnit::dimensionless);
FrequencyGrid linspace_grid(double lo, double hi, int count,
                            FrequencyUnit unit = FrequencyUnit::dimensionless);

// The canonical antenna grid: 0.2 to 7.0 GHz in 0.1 steps, 69 points.
const FrequencyGrid& canonical_antenna_grid();

bool same_grid(const FrequencyGrid& a, const FrequencyGrid& b);

struct ComplexSpectrum {
    FrequencyGrid grid;
    Eigen::VectorXcd values;
};

// One spectrum per state component, stacked as rows.
struct MultiSpectrum {
    FrequencyGrid grid;
    Eigen::MatrixXcd values;  // N x M

    ComplexSpectrum component(int i) const { return {grid, values.row(i).transpose()}; }
};

struct RationalFunction {
    cplx c0{0.0, 0.0};
    std::vector<cplx> zeros;  // unordered (set semantics)
    std::vector<cplx> poles;
};

// Fourier transforms ------------------------------------------------------

// Truncated trapezoidal quadrature of the single-sided transform. The
// trajectory must have decayed: |last state| / max |state| <= tail_tol,
// otherwise Errc::invalid_argument reports the estimated horizon needed.
MultiSpectrum numeric_fourier_single_sided(const Trajectory& traj, const FrequencyGrid& grid,
                                           double tail_tol = 1e-6);

// Closed forms U diag(k(l_i, w)) U^{-1} phi0 with the single/double-sided
// per-mode kernels. All modes must decay (Re l < 0) or
// Errc::non_decaying_mode lists the offenders.
MultiSpectrum analytic_fourier_single_sided(const SpectralDecomposition& dec,
                                            const Eigen::VectorXd& initial,
                                            const FrequencyGrid& grid);
MultiSpectrum analytic_fourier_double_sided(const SpectralDecomposition& dec,
                                            const Eigen::VectorXd& initial,
                                            const FrequencyGrid& grid);

// b^T phi_hat(w) evaluated directly from the partial-fraction form; equal to
// dotting b against the analytic MultiSpectrum but O(N) per frequency.
ComplexSpectrum functional_spectrum_single_sided(const SpectralDecomposition& dec,
                                                 const Eigen::VectorXd& initial,
                                                 const Eigen::VectorXd& b,
                                                 const FrequencyGrid& grid);

// Transfer function -------------------------------------------------------

// Pointwise (b1^T phi_hat) / (b2^T phi_hat); denominator magnitudes below
// eps_den raise Errc::degenerate_denominator with the offending frequency.
ComplexSpectrum transfer_function(const Eigen::VectorXd& b1, const Eigen::VectorXd& b2,
                                  const MultiSpectrum& spectrum, double eps_den = 1e-12);

// Exact rational form -----------------------------------------------------

// Builds the rational form of (b1^T phi_hat)/(b2^T phi_hat) by clearing the
// shared denominator prod(i w - l_i) from both partial-fraction sums and
// root-finding the resulting numerator polynomials. The roots are computed
// as eigenvalues of the companion form expressed in the eigenbasis (a
// diagonal plus rank-one matrix), which stays well conditioned at state
// dimensions where expanded polynomial coefficients would overflow.
// Shared roots of the two numerators cancel by matching within
// 1e-8 * max|l|. A built-in evaluation cross-check above 1e-4 relative
// raises Errc::ill_conditioned.
RationalFunction exact_rational(const SpectralDecomposition& dec, const Eigen::VectorXd& initial,
                                const Eigen::VectorXd& b1, const Eigen::VectorXd& b2);

// Log-accumulated evaluation of c0 prod(w - z) / prod(w - p); no pole
// proximity guard (czp_model.hpp wraps this with one for real w).
cplx eval_rational_at(const RationalFunction& rf, cplx w);

// CSV export ---------------------------------------------------------------

std::string spectrum_to_csv(const ComplexSpectrum& spectrum);

}  // namespace czp
