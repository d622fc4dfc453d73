#pragma once

#include "phasescout/tn/mpo.hpp"

#include <Eigen/Dense>

namespace phasescout::model {

/// Extended Bose-Hubbard chain with open boundaries:
/// H = -t sum (b+_i b_{i+1} + h.c.) + U/2 sum n_i (n_i - 1) + V sum n_i n_{i+1}.
struct ModelParams {
    double t = 1.0;
    double U = 0.0;
    double V = 0.0;
    int nMax = 3;
    int L = 32;

    int d() const { return nMax + 1; }
    void validate() const;
};

// Local operators truncated to occupations 0..nMax.
Eigen::MatrixXd op_b(int nMax);
Eigen::MatrixXd op_bdag(int nMax);
Eigen::MatrixXd op_n(int nMax);
Eigen::MatrixXd op_identity(int nMax);
/// n - filling
Eigen::MatrixXd op_delta_n(int nMax, double filling);
/// cos(pi (n - filling)), the real form of exp(-i pi dn) on integer dn
Eigen::MatrixXd op_parity_string(int nMax, double filling);

/// Bond-dimension-5 MPO; channels (start, b+ placed, b placed, n placed, done).
tn::Mpo build_mpo(const ModelParams& params);

}  // namespace phasescout::model
