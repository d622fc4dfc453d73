#include "phasescout/dmrg/lanczos.hpp"

#include "phasescout/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <vector>

namespace phasescout::dmrg {

LanczosResult lanczos_ground(const LinearMap& apply, const Eigen::VectorXd& start, int iters, double tol) {
    const long n = start.size();
    const double n0 = start.norm();
    if (n == 0 || n0 == 0.0) throw DomainError("lanczos_ground: zero start vector");
    if (iters < 1) throw DomainError("lanczos_ground: iters must be >= 1");
    const int maxK = static_cast<int>(std::min<long>(iters, n));

    Eigen::MatrixXd basis(n, maxK);
    std::vector<double> alpha, beta;
    basis.col(0) = start / n0;
    Eigen::VectorXd w(n);
    Eigen::VectorXd diag, sub;

    LanczosResult res;
    Eigen::VectorXd ritz;  // coefficients of the Ritz vector in `basis`
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    for (int k = 0; k < maxK; ++k) {
        apply(basis.col(k), w);
        const double a = basis.col(k).dot(w);
        alpha.push_back(a);
        // full reorthogonalization, twice for numerical safety
        auto V = basis.leftCols(k + 1);
        for (int pass = 0; pass < 2; ++pass) w.noalias() -= V * (V.transpose() * w);
        const double b = w.norm();

        const int m = k + 1;
        diag = Eigen::Map<const Eigen::VectorXd>(alpha.data(), m);
        sub = m > 1 ? Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(beta.data(), m - 1)) : Eigen::VectorXd();
        es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
        res.energy = es.eigenvalues()(0);
        ritz = es.eigenvectors().col(0);
        res.iterations = m;
        res.residual = std::abs(b * ritz(m - 1));

        const double scale = std::max(1.0, std::abs(res.energy));
        const bool breakdown = b <= 1e-14 * std::max(1.0, std::abs(a));
        if (res.residual <= tol * scale || breakdown) {
            res.converged = true;
            break;
        }
        if (k + 1 == maxK) break;
        beta.push_back(b);
        basis.col(k + 1) = w / b;
    }
    // a full Krylov space is exact even without a small residual estimate
    if (res.iterations == n) res.converged = true;

    res.vector = basis.leftCols(res.iterations) * ritz;
    res.vector.normalize();
    return res;
}

}  // namespace phasescout::dmrg
