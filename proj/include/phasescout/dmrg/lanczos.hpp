#pragma once

#include <Eigen/Dense>

#include <functional>

namespace phasescout::dmrg {

/// y = A x for a real symmetric A.
using LinearMap = std::function<void(const Eigen::VectorXd& x, Eigen::VectorXd& y)>;

struct LanczosResult {
    double energy = 0.0;
    Eigen::VectorXd vector;
    int iterations = 0;
    double residual = 0.0;
    bool converged = false;  ///< false when iterations ran out before the residual test passed
};

/// Lowest Ritz pair of `apply` from the Krylov space of `start`, with full
/// reorthogonalization. Stops when ||A v - E v|| <= tol * max(1, |E|), on
/// breakdown (invariant subspace found), or after `iters` steps.
LanczosResult lanczos_ground(const LinearMap& apply, const Eigen::VectorXd& start, int iters, double tol);

}  // namespace phasescout::dmrg
