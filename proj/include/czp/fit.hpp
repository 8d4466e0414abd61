// fit.hpp -- fit the constant-zeros-poles form to a log-magnitude response.
//
// Parameterization: theta = [log_c0, Re z (K), Im z (K), Re p (K), u (K)]
// with Im p = eps_pole + softplus(u), so poles can never reach the real
// axis. MSE fits run Levenberg-Marquardt with the analytic Jacobian;
// shrinkage fits run backtracking gradient descent. Multi-start picks the
// best restart by (loss, restart index), deterministically per seed.

#pragma once

#include "czp/czp_model.hpp"

namespace czp {

enum class LossKind { mse, shrinkage };

struct FitOptions {
    int restarts = 8;
    int max_iters = 200;
    LossKind loss = LossKind::mse;
    double shrink_a = 10.0;
    double shrink_c = 0.2;
    std::uint64_t seed = 0;
    double eps_pole = kDefaultEpsPole;
};

FitReport fit_czp(const FrequencyResponse& target, int degree, const FitOptions& options = {});

inline double softplus(double u) { return u > 30.0 ? u : std::log1p(std::exp(u)); }
inline double softplus_inv(double y) { return y > 30.0 ? y : std::log(std::expm1(y)); }

}  // namespace czp
