// czp_model.hpp -- the constant-zeros-poles form for log-magnitude
// scattering responses:
//
//     log|S11(w)| = log|c0| + sum_k log(|w - z_k| / |w - p_k|)
//
// with equally many zeros and poles, plus the impedance-to-S11 map
// S11 = (Z/Z0 - 1)/(Z/Z0 + 1) and the losses used to fit the form.
// Responses are stored in natural log; dB for display is 20*log10.

#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "czp/spectral.hpp"

namespace czp {

// log|S11| floor in natural log (~ -100 dB); keeps matched loads finite.
inline constexpr double kLogMagFloor = -11.5;

// Minimum |Im p| so no pole sits on the real frequency axis.
inline constexpr double kDefaultEpsPole = 1e-3;

struct CZPModel {
    double log_c0 = 0.0;
    std::vector<cplx> zeros;  // unordered
    std::vector<cplx> poles;  // unordered, |Im| >= eps_pole each
    double eps_pole = kDefaultEpsPole;
    FrequencyUnit unit = FrequencyUnit::gigahertz;

    int degree() const { return static_cast<int>(zeros.size()); }
};

struct FrequencyResponse {
    FrequencyGrid grid;
    Eigen::VectorXd log_mag;  // natural log
};

struct FitReport {
    CZPModel model;
    double final_loss = 0.0;
    int iterations = 0;
    int restarts_used = 0;
    bool converged = false;
};

// Evaluation ---------------------------------------------------------------

// Pointwise natural-log evaluation of the form above. Accumulation runs in
// a canonical sorted root order, so reordering zeros or poles leaves the
// output bit-identical. A pole with |Im| < eps_pole raises
// Errc::singular_pole.
FrequencyResponse eval_log_s11(const CZPModel& model, const FrequencyGrid& grid);

// Complex rational evaluation at a real frequency via log accumulation.
// Frequencies within eps of a pole raise Errc::singular_pole.
cplx eval_rational(const RationalFunction& rf, double omega, double eps = 1e-9);

// Impedance to scattering coefficient -----------------------------------

struct S11Result {
    ComplexSpectrum s11;
    FrequencyResponse response;  // floored at kLogMagFloor
};

S11Result s11_from_impedance(const ComplexSpectrum& z_in, double z0);

// Losses --------------------------------------------------------------------

double mse_loss(const FrequencyResponse& pred, const FrequencyResponse& target);

// Sigmoid-modulated squared error: mean of l^2 / (1 + exp(a (c - l))) with
// l = |pred - target|. Reduces to MSE/2 as a -> 0 with c = 0.
double shrinkage_loss(const FrequencyResponse& pred, const FrequencyResponse& target, double a,
                      double c);

// Model utilities -------------------------------------------------------

// Minimal total |.| distance between the zero sets and, independently, the
// pole sets of two equal-degree models (optimal assignment).
double match_zero_pole_sets(const CZPModel& m1, const CZPModel& m2);

// Per-segment bound on |resp[j+1] - resp[j]|: K * dw * (1/min|Im p| + 1/d_z)
// with d_z the distance from the segment to the nearest zero.
Eigen::VectorXd first_difference_bound(const CZPModel& model, const FrequencyGrid& grid);
bool satisfies_smoothness_bound(const CZPModel& model, const FrequencyGrid& grid,
                                const Eigen::VectorXd& log_mag);

// natural log -> dB (20 log10)
Eigen::VectorXd to_db(const Eigen::VectorXd& log_mag);

// Optimal assignment cost between two equal-size complex sets.
double min_cost_matching(const std::vector<cplx>& a, const std::vector<cplx>& b);

// Serialization --------------------------------------------------------------

std::string czp_model_to_json(const CZPModel& model);
CZPModel czp_model_from_json(const std::string& text);

std::string response_to_csv(const FrequencyResponse& response);
FrequencyResponse response_from_csv(const std::string& text);

}  // namespace czp
