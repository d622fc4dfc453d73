#pragma once

#include "phasescout/dmrg/dmrg.hpp"
#include "phasescout/model/ebh.hpp"
#include "phasescout/tn/mps.hpp"

#include <Eigen/Dense>

#include <array>
#include <string>
#include <vector>

namespace phasescout::model {

enum class CorrelatorKind { SF, DW, HI };

CorrelatorKind parse_correlator_kind(const std::string& name);

/// C_SF(i,j) = <b+_i b_j>, C_DW(i,j) = (-1)^|i-j| <dn_i dn_j>,
/// C_HI(i,j) = <dn_i exp(-i pi sum_{i<=l<j} dn_l) dn_j>, dn = n - N/L.
/// Pairs i <= j are evaluated, the lower triangle is mirrored.
Eigen::MatrixXd correlator_matrix(const tn::MPSState& state, CorrelatorKind kind);

/// Sum_{i,j} C(i,j) / L'^2 over the sites [margin, L - margin), L' = L - 2 margin.
double order_parameter(const Eigen::MatrixXd& corr, int margin = 0);
/// Long-distance form C(margin, L - 1 - margin).
double long_range_value(const Eigen::MatrixXd& corr, int margin = 0);
/// Default boundary margin L/8.
inline int default_margin(int L) { return L / 8; }

struct StructureFactor {
    double value = 0.0;
    double kStar = 0.0;
};

/// max_k |n(k)|^2 with n(k) = sum_j n_j e^{-ikj} / L over k = 2 pi m / L, m = 1..L-1.
StructureFactor structure_factor(const std::vector<double>& density);

struct ChargeGapResult {
    double eC = 0.0;
    std::array<double, 3> energies{};  ///< E(N-1), E(N), E(N+1)
    std::array<bool, 3> converged{};
};

/// E_C = E(N+1) + E(N-1) - 2 E(N) from three sector-targeted DMRG runs (N defaults to L).
ChargeGapResult charge_gap(const ModelParams& params, const dmrg::DmrgConfig& config, int N = -1, int jobs = 1);

struct CorrelationLengthResult {
    double xi = 0.0;
    double mu2 = 0.0;
    int window = 0;
};

/// Transfer map of the W central sites in the symmetric gauge
/// M = Lambda_l^{1/2} Gamma Lambda_r^{1/2}; mu2 is the ratio of the second to the
/// largest singular value of the map and xi = -W / ln(mu2).
CorrelationLengthResult correlation_length(const tn::MPSState& state, int window = 8);


struct ObservableSet {
    double oSF = 0.0, oDW = 0.0, oHI = 0.0;     ///< double-sum order parameters
    double rSF = 0.0, rDW = 0.0, rHI = 0.0;     ///< long-distance correlator values
    std::vector<double> densityProfile;
    std::vector<double> entropyProfile;         ///< S at bonds 1..L-1
    double structureFactor = 0.0;
    double kStar = 0.0;
    double xi = 0.0;
    int margin = 0;
};

struct Correlators {
    Eigen::MatrixXd sf, dw, hi;
};

Correlators all_correlators(const tn::MPSState& state);
ObservableSet measure(const tn::MPSState& state, const Correlators& corr, bool edgeMargin = true);

struct FidelityResult {
    Eigen::MatrixXd F;
    std::vector<bool> converged;
    std::vector<double> energies;
    std::vector<ObservableSet> observables;  ///< measured on each point's ground state
};

/// F(i,j) = |<psi(p_i)|psi(p_j)>| between the ground states of every pair of
/// points. All points must share L and nMax.
FidelityResult fidelity_scan(const std::vector<ModelParams>& cut, const dmrg::DmrgConfig& config, int N = -1,
                             int jobs = 1);

}  // namespace phasescout::model
