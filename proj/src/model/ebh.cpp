#include "phasescout/model/ebh.hpp"

#include "phasescout/errors.hpp"

#include <cmath>
#include <numbers>

namespace phasescout::model {

void ModelParams::validate() const {
    if (!(t >= 0.0)) throw DomainError("ModelParams: t must be >= 0");
    if (nMax < 1) throw DomainError("ModelParams: nMax must be >= 1");
    if (L < 2) throw DomainError("ModelParams: L must be >= 2");
    if (!std::isfinite(U) || !std::isfinite(V)) throw DomainError("ModelParams: U, V must be finite");
}

Eigen::MatrixXd op_b(int nMax) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(nMax + 1, nMax + 1);
    for (int n = 1; n <= nMax; ++n) m(n - 1, n) = std::sqrt(static_cast<double>(n));
    return m;
}

Eigen::MatrixXd op_bdag(int nMax) { return op_b(nMax).transpose(); }

Eigen::MatrixXd op_n(int nMax) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(nMax + 1, nMax + 1);
    for (int n = 0; n <= nMax; ++n) m(n, n) = n;
    return m;
}

Eigen::MatrixXd op_identity(int nMax) { return Eigen::MatrixXd::Identity(nMax + 1, nMax + 1); }

Eigen::MatrixXd op_delta_n(int nMax, double filling) {
    return op_n(nMax) - filling * op_identity(nMax);
}

Eigen::MatrixXd op_parity_string(int nMax, double filling) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(nMax + 1, nMax + 1);
    for (int n = 0; n <= nMax; ++n) m(n, n) = std::cos(std::numbers::pi * (n - filling));
    return m;
}

tn::Mpo build_mpo(const ModelParams& p) {
    p.validate();
    const int nMax = p.nMax;
    const Eigen::MatrixXd id = op_identity(nMax), b = op_b(nMax), bd = op_bdag(nMax), n = op_n(nMax);
    Eigen::MatrixXd onsite = Eigen::MatrixXd::Zero(nMax + 1, nMax + 1);
    for (int k = 0; k <= nMax; ++k) onsite(k, k) = 0.5 * p.U * k * (k - 1);

    tn::Mpo mpo;
    mpo.L = p.L;
    mpo.d = p.d();
    mpo.D = 5;
    mpo.channelCharge = {0, +1, -1, 0, 0};
    std::vector<tn::MpoTerm> w{
        {0, 0, 0, id},
        {0, 1, +1, -p.t * bd},
        {0, 2, -1, -p.t * b},
        {0, 3, 0, p.V * n},
        {0, 4, 0, onsite},
        {1, 4, -1, b},
        {2, 4, +1, bd},
        {3, 4, 0, n},
        {4, 4, 0, id},
    };
    std::erase_if(w, [](const tn::MpoTerm& t) { return t.op.cwiseAbs().maxCoeff() == 0.0; });
    mpo.sites.assign(p.L, w);
    return mpo;
}

}  // namespace phasescout::model
