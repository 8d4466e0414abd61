#include "czp/spectral.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace czp {

// ---------------------------------------------------------------------------
// Grids

FrequencyGrid make_grid(std::vector<double> values, FrequencyUnit unit) {
    require(!values.empty(), Errc::invalid_argument, "make_grid: empty grid");
    for (size_t i = 0; i < values.size(); ++i) {
        require(std::isfinite(values[i]), Errc::invalid_argument, "make_grid: non-finite frequency");
        require(i == 0 || values[i] > values[i - 1], Errc::invalid_argument,
                "make_grid: frequencies must be strictly increasing");
    }
    FrequencyGrid g;
    g.values = Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<int>(values.size()));
    g.unit = unit;
    return g;
}

FrequencyGrid linspace_grid(double lo, double hi, int count, FrequencyUnit unit) {
    require(count >= 2 && hi > lo, Errc::invalid_argument, "linspace_grid: bad range");
    std::vector<double> v(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) v[static_cast<size_t>(i)] = lo + (hi - lo) * i / (count - 1);
    return make_grid(std::move(v), unit);
}

const FrequencyGrid& canonical_antenna_grid() {
    static const FrequencyGrid grid = [] {
        std::vector<double> v(69);
        for (int j = 0; j < 69; ++j) v[static_cast<size_t>(j)] = (j + 2) / 10.0;
        return make_grid(std::move(v), FrequencyUnit::gigahertz);
    }();
    return grid;
}

bool same_grid(const FrequencyGrid& a, const FrequencyGrid& b) {
    return a.unit == b.unit && a.values.size() == b.values.size() && a.values == b.values;
}

// ---------------------------------------------------------------------------
// Numeric quadrature

MultiSpectrum numeric_fourier_single_sided(const Trajectory& traj, const FrequencyGrid& grid,
                                           double tail_tol) {
    const int n = static_cast<int>(traj.states.rows());
    const int samples = static_cast<int>(traj.times.size());
    require(samples >= 2, Errc::invalid_argument, "numeric_fourier: trajectory too short");
    const double dt = traj.times[1] - traj.times[0];
    for (int i = 1; i < samples; ++i) {
        require(std::abs((traj.times[i] - traj.times[i - 1]) - dt) <= 1e-9 * std::max(1.0, dt),
                Errc::invalid_argument, "numeric_fourier: non-uniform sampling");
    }

    double max_norm = 0.0;
    for (int i = 0; i < samples; ++i) max_norm = std::max(max_norm, traj.states.col(i).norm());
    const double tail = traj.states.col(samples - 1).norm();
    if (max_norm > 0.0 && tail > tail_tol * max_norm) {
        // estimate the decay rate from the second half of the trajectory
        const double t_end = traj.times[samples - 1];
        const double mid = traj.states.col(samples / 2).norm();
        double rate = 0.0;
        if (mid > 0.0 && tail > 0.0 && tail < mid)
            rate = std::log(mid / tail) / (t_end - traj.times[samples / 2]);
        std::ostringstream msg;
        msg << "numeric_fourier: trajectory tail " << tail / max_norm << " exceeds tolerance "
            << tail_tol << "; need horizon T >= "
            << (rate > 0.0 ? std::log(1.0 / tail_tol) / rate : t_end * 2.0);
        fail(Errc::invalid_argument, msg.str());
    }

    MultiSpectrum out;
    out.grid = grid;
    out.values.resize(n, grid.count());
    for (int m = 0; m < grid.count(); ++m) {
        const double w = grid.values[m];
        const cplx step = std::exp(cplx(0.0, -w * dt));
        Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(n);
        cplx phase(1.0, 0.0);
        for (int i = 0; i < samples; ++i) {
            const double weight = (i == 0 || i == samples - 1) ? 0.5 : 1.0;
            acc += traj.states.col(i) * (phase * weight);
            // rotate, resync the unit phasor periodically to stop drift
            phase *= step;
            if ((i & 1023) == 1023) phase = std::exp(cplx(0.0, -w * dt * (i + 1)));
        }
        out.values.col(m) = acc * dt;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Analytic forms

namespace {

void check_decaying(const SpectralDecomposition& dec) {
    std::ostringstream offenders;
    int bad = 0;
    for (int i = 0; i < dec.eigenvalues.size(); ++i) {
        if (dec.eigenvalues[i].real() >= 0.0) {
            if (bad++) offenders << ", ";
            offenders << dec.eigenvalues[i];
        }
    }
    if (bad) {
        fail(Errc::non_decaying_mode,
             "analytic_fourier: " + std::to_string(bad) +
                 " non-decaying mode(s) with Re >= 0: " + offenders.str());
    }
}

// Accumulate U diag(k_i) U^{-1} phi0 per frequency, grouping exact conjugate
// pairs so spectra of real systems are conjugate-symmetric in floating point.
template <typename Kernel>
MultiSpectrum analytic_accumulate(const SpectralDecomposition& dec, const Eigen::VectorXd& initial,
                                  const FrequencyGrid& grid, Kernel kernel) {
    const int n = static_cast<int>(dec.eigenvalues.size());
    require(initial.size() == n, Errc::invalid_argument, "analytic_fourier: initial size mismatch");
    Eigen::VectorXcd w_coef = dec.inverse_vectors * initial.cast<cplx>();

    MultiSpectrum out;
    out.grid = grid;
    out.values.resize(n, grid.count());
    Eigen::VectorXcd acc(n), pair_term(n);
    for (int m = 0; m < grid.count(); ++m) {
        const double w = grid.values[m];
        acc.setZero();
        for (int i = 0; i < n; ++i) {
            const int j = dec.conj_pair[i];
            if (j != -1 && j < i) continue;  // handled with its partner
            const cplx ki = kernel(dec.eigenvalues[i], w) * w_coef[i];
            if (j == -1) {
                acc += dec.right_vectors.col(i) * ki;
            } else {
                const cplx kj = kernel(dec.eigenvalues[j], w) * w_coef[j];
                pair_term = dec.right_vectors.col(i) * ki + dec.right_vectors.col(j) * kj;
                acc += pair_term;
            }
        }
        out.values.col(m) = acc;
    }
    return out;
}

cplx kernel_single(cplx lambda, double w) { return 1.0 / (cplx(0.0, w) - lambda); }
cplx kernel_double(cplx lambda, double w) { return -2.0 * lambda / (lambda * lambda + w * w); }

}  // namespace

MultiSpectrum analytic_fourier_single_sided(const SpectralDecomposition& dec,
                                            const Eigen::VectorXd& initial,
                                            const FrequencyGrid& grid) {
    check_decaying(dec);
    return analytic_accumulate(dec, initial, grid, kernel_single);
}

MultiSpectrum analytic_fourier_double_sided(const SpectralDecomposition& dec,
                                            const Eigen::VectorXd& initial,
                                            const FrequencyGrid& grid) {
    check_decaying(dec);
    return analytic_accumulate(dec, initial, grid, kernel_double);
}

ComplexSpectrum functional_spectrum_single_sided(const SpectralDecomposition& dec,
                                                 const Eigen::VectorXd& initial,
                                                 const Eigen::VectorXd& b,
                                                 const FrequencyGrid& grid) {
    check_decaying(dec);
    const int n = static_cast<int>(dec.eigenvalues.size());
    require(initial.size() == n && b.size() == n, Errc::invalid_argument,
            "functional_spectrum: size mismatch");
    Eigen::VectorXcd w_coef = dec.inverse_vectors * initial.cast<cplx>();
    Eigen::VectorXcd b_coef = dec.right_vectors.transpose() * b.cast<cplx>();
    Eigen::VectorXcd residue = b_coef.cwiseProduct(w_coef);

    ComplexSpectrum out;
    out.grid = grid;
    out.values.resize(grid.count());
    for (int m = 0; m < grid.count(); ++m) {
        const cplx s(0.0, grid.values[m]);
        cplx acc(0.0, 0.0);
        for (int i = 0; i < n; ++i) {
            const int j = dec.conj_pair[i];
            if (j != -1 && j < i) continue;
            cplx t = residue[i] / (s - dec.eigenvalues[i]);
            if (j != -1) t += residue[j] / (s - dec.eigenvalues[j]);
            acc += t;
        }
        out.values[m] = acc;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Transfer function

ComplexSpectrum transfer_function(const Eigen::VectorXd& b1, const Eigen::VectorXd& b2,
                                  const MultiSpectrum& spectrum, double eps_den) {
    const int n = static_cast<int>(spectrum.values.rows());
    require(b1.size() == n && b2.size() == n, Errc::invalid_argument,
            "transfer_function: functional size mismatch");
    ComplexSpectrum out;
    out.grid = spectrum.grid;
    out.values.resize(spectrum.grid.count());
    for (int m = 0; m < spectrum.grid.count(); ++m) {
        cplx num(0.0, 0.0), den(0.0, 0.0);
        for (int i = 0; i < n; ++i) {
            num += b1[i] * spectrum.values(i, m);
            den += b2[i] * spectrum.values(i, m);
        }
        if (std::abs(den) < eps_den) {
            std::ostringstream msg;
            msg << "transfer_function: |denominator| = " << std::abs(den) << " < " << eps_den
                << " at frequency " << spectrum.grid.values[m];
            fail(Errc::degenerate_denominator, msg.str());
        }
        out.values[m] = num / den;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Exact rational form

namespace {

// Value of f(s) = sum_i residues[i] / (s - lambda_i).
cplx eval_partial_fractions(const Eigen::VectorXcd& residues, const Eigen::VectorXcd& lambda,
                            cplx s) {
    cplx acc(0.0, 0.0);
    for (int i = 0; i < residues.size(); ++i) acc += residues[i] / (s - lambda[i]);
    return acc;
}

// Roots of the numerator of f(s) = sum_i g_i / (s - l_i), cleared over the
// common denominator prod(s - l_i). With D = sum g_i != 0 the numerator of
// (s - mu) f is the characteristic polynomial of L - g' 1^T / D with
// g'_i = g_i (l_i - mu), so its roots come from one dense eigensolve; when
// leading moments vanish the multiplication by (s - mu) is repeated and the
// artificial roots at mu are dropped afterwards. Returns false when f is
// numerically the zero function.
bool partial_fraction_roots(Eigen::VectorXcd residues, const Eigen::VectorXcd& lambda, double mu,
                            std::vector<cplx>& roots_out) {
    const int n = static_cast<int>(lambda.size());
    roots_out.clear();
    double scale = residues.cwiseAbs().sum();
    if (scale == 0.0) return false;

    int artificial = 0;
    cplx total = residues.sum();
    while (std::abs(total) < 1e-12 * scale) {
        if (artificial >= n) return false;  // all moments vanish: zero function
        for (int i = 0; i < n; ++i) residues[i] *= (lambda[i] - mu);
        ++artificial;
        total = residues.sum();
        scale = residues.cwiseAbs().sum();
        if (scale == 0.0) return false;
    }

    // one conceptual extra factor (s - mu) makes the function proper
    Eigen::MatrixXcd m(n, n);
    m.setZero();
    for (int i = 0; i < n; ++i) {
        const cplx gi = residues[i] * (lambda[i] - mu) / total;
        for (int j = 0; j < n; ++j) m(i, j) = -gi;
        m(i, i) += lambda[i];
    }
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(m, /*computeEigenvectors=*/false);
    require(es.info() == Eigen::Success, Errc::numeric, "exact_rational: eigensolver failed");

    std::vector<cplx> roots(es.eigenvalues().data(), es.eigenvalues().data() + n);
    // drop the artificial+1 roots planted at mu
    std::sort(roots.begin(), roots.end(), [mu](cplx a, cplx b) {
        return std::abs(a - mu) > std::abs(b - mu);
    });
    roots.resize(static_cast<size_t>(n - artificial - 1));
    roots_out = std::move(roots);
    return true;
}

void sort_canonical(std::vector<cplx>& v) {
    std::sort(v.begin(), v.end(), [](cplx a, cplx b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
}

}  // namespace

cplx eval_rational_at(const RationalFunction& rf, cplx w) {
    if (rf.c0 == cplx(0.0, 0.0)) return {0.0, 0.0};
    cplx acc = std::log(rf.c0);
    for (const cplx& z : rf.zeros) acc += std::log(w - z);
    for (const cplx& p : rf.poles) acc -= std::log(w - p);
    return std::exp(acc);
}

RationalFunction exact_rational(const SpectralDecomposition& dec, const Eigen::VectorXd& initial,
                                const Eigen::VectorXd& b1, const Eigen::VectorXd& b2) {
    const int n = static_cast<int>(dec.eigenvalues.size());
    require(initial.size() == n && b1.size() == n && b2.size() == n, Errc::invalid_argument,
            "exact_rational: size mismatch");

    Eigen::VectorXcd w_coef = dec.inverse_vectors * initial.cast<cplx>();
    Eigen::VectorXcd alpha = (dec.right_vectors.transpose() * b1.cast<cplx>()).cwiseProduct(w_coef);
    Eigen::VectorXcd beta = (dec.right_vectors.transpose() * b2.cast<cplx>()).cwiseProduct(w_coef);

    const double lam_scale = dec.eigenvalues.cwiseAbs().maxCoeff();
    const double mu = 2.0 * lam_scale + 1.0;  // real point far right of the spectrum

    std::vector<cplx> zeros_s, poles_s;
    const bool num_nonzero = partial_fraction_roots(alpha, dec.eigenvalues, mu, zeros_s);
    const bool den_nonzero = partial_fraction_roots(beta, dec.eigenvalues, mu, poles_s);
    require(den_nonzero, Errc::degenerate_denominator,
            "exact_rational: b2 functional is identically zero");

    RationalFunction rf;
    if (!num_nonzero) return rf;  // c0 = 0, the zero function

    // map roots from the s = i w plane to the w plane
    auto to_omega = [](std::vector<cplx>& v) {
        for (cplx& s : v) s = cplx(s.imag(), -s.real());  // w = -i s
    };
    to_omega(zeros_s);
    to_omega(poles_s);

    // cancel shared roots (tolerance relative to the spectrum scale)
    const double cancel_tol = 1e-8 * std::max(lam_scale, 1.0);
    std::vector<bool> pole_used(poles_s.size(), false);
    std::vector<cplx> zeros, poles;
    for (const cplx& z : zeros_s) {
        int best = -1;
        double best_d = cancel_tol;
        for (size_t j = 0; j < poles_s.size(); ++j) {
            if (pole_used[j]) continue;
            const double d = std::abs(z - poles_s[j]);
            if (d <= best_d) {
                best_d = d;
                best = static_cast<int>(j);
            }
        }
        if (best >= 0)
            pole_used[static_cast<size_t>(best)] = true;
        else
            zeros.push_back(z);
    }
    for (size_t j = 0; j < poles_s.size(); ++j)
        if (!pole_used[j]) poles.push_back(poles_s[j]);
    sort_canonical(zeros);
    sort_canonical(poles);
    rf.zeros = std::move(zeros);
    rf.poles = std::move(poles);

    // constant from a reference point far from every root: w_ref = i R
    const double r_ref = 2.0 * lam_scale + 1.0;
    const cplx w_ref(0.0, r_ref);
    const cplx s_ref(-r_ref, 0.0);  // s = i w
    const cplx val_ref = eval_partial_fractions(alpha, dec.eigenvalues, s_ref) /
                         eval_partial_fractions(beta, dec.eigenvalues, s_ref);
    cplx log_c0 = std::log(val_ref);
    for (const cplx& p : rf.poles) log_c0 += std::log(w_ref - p);
    for (const cplx& z : rf.zeros) log_c0 -= std::log(w_ref - z);
    rf.c0 = std::exp(log_c0);

    // evaluation cross-check on a deterministic real-frequency grid
    double worst = 0.0;
    const int checks = 96;
    double den_max = 0.0;
    std::vector<cplx> f1(checks), f2(checks);
    for (int i = 0; i < checks; ++i) {
        const double w = lam_scale * (0.01 + 1.49 * i / (checks - 1));
        const cplx s(0.0, w);
        f1[static_cast<size_t>(i)] = eval_partial_fractions(alpha, dec.eigenvalues, s);
        f2[static_cast<size_t>(i)] = eval_partial_fractions(beta, dec.eigenvalues, s);
        den_max = std::max(den_max, std::abs(f2[static_cast<size_t>(i)]));
    }
    for (int i = 0; i < checks; ++i) {
        if (std::abs(f2[static_cast<size_t>(i)]) < 1e-13 * den_max) continue;
        const double w = lam_scale * (0.01 + 1.49 * i / (checks - 1));
        const cplx direct = f1[static_cast<size_t>(i)] / f2[static_cast<size_t>(i)];
        const cplx via_roots = eval_rational_at(rf, cplx(w, 0.0));
        worst = std::max(worst, std::abs(direct - via_roots) / std::max(1e-300, std::abs(direct)));
    }
    if (!(worst <= 1e-4)) {
        std::ostringstream msg;
        msg << "exact_rational: evaluation cross-check mismatch " << worst
            << " exceeds 1e-4; conditioning failure, reduce the state dimension";
        fail(Errc::ill_conditioned, msg.str());
    }
    return rf;
}

// ---------------------------------------------------------------------------
// CSV

std::string spectrum_to_csv(const ComplexSpectrum& spectrum) {
    std::string out = "omega,re,im\n";
    char line[128];
    for (int i = 0; i < spectrum.grid.count(); ++i) {
        std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g\n", spectrum.grid.values[i],
                      spectrum.values[i].real(), spectrum.values[i].imag());
        out += line;
    }
    return out;
}

}  // namespace czp
