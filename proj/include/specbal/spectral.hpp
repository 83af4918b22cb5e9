#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "specbal/sym_matrix.hpp"

namespace specbal {

// Eigen-decomposition of a symmetric matrix, eigenvalues descending.
// Returns {values, vectors}; vectors.col(j) pairs with values[j].
struct EigResult {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
};
EigResult sym_eig(const Eigen::MatrixXd& m);

// Polar decomposition A = U * B with B symmetric positive semidefinite
// (B = sqrt(A^T A) up to orientation; we return B = sqrt(A A^T) and U
// orthogonal so that A = B * U, keeping the symmetric factor on the left).
struct PolarResult {
    Eigen::MatrixXd stretch;   // symmetric PSD factor
    Eigen::MatrixXd rotation;  // orthogonal factor
};
PolarResult polar_decompose(const Eigen::MatrixXd& a);

// Ratio lambda_1(A^T M A) / trace(A^T M A). Throws DegenerateError when the
// trace is not positive.
double balance_ratio(const Eigen::MatrixXd& a, const SymMatrix& m);
std::vector<double> balance_ratios(const Eigen::MatrixXd& a, const MatrixSet& set);

// max_i balance_ratio(a, set[i]).
double balance_score(const Eigen::MatrixXd& a, const MatrixSet& set);

// Domain membership: s_1(A) within kDomainTolerance of 1 and every
// consecutive singular-value ratio s_j / s_{j+1} <= R (1 + kDomainTolerance).
bool in_domain(const Eigen::MatrixXd& a, double R);

// Rescale so s_1 = 1. Throws DegenerateError when A is numerically rank
// deficient (s_1 <= 0).
Eigen::MatrixXd normalize_to_domain(const Eigen::MatrixXd& a);

// Singular structure of a symmetric positive-definite A, with equal singular
// values merged into blocks at relative tolerance kMultiplicityTolerance.
// blocks[b] = [first, last] indices (inclusive) of block b; block_of[j] is
// the block containing index j. tight_ratios lists the block boundaries j
// (boundary between blocks of s_j and s_{j+1}) where s_j / s_{j+1} reaches
// R within kRatioTolerance relative slack.
struct SpectralProfile {
    Eigen::VectorXd singular_values;   // descending
    Eigen::MatrixXd singular_vectors;  // col j pairs with value j
    std::vector<std::pair<int, int>> blocks;
    std::vector<int> block_of;
    std::vector<int> tight_ratios;
};
SpectralProfile spectral_profile(const Eigen::MatrixXd& a_sym, double R);

}  // namespace specbal
