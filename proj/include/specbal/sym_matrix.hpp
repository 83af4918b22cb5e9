#pragma once

#include <vector>

#include <Eigen/Dense>

#include "specbal/errors.hpp"

namespace specbal {

// Module tolerances. All spectral comparisons are relative.
inline constexpr double kPdToleranceFactor = 1e-10;     // lambda_min > this * lambda_1
inline constexpr double kMultiplicityTolerance = 1e-8;  // relative gap merging eigenvalues
inline constexpr double kDomainTolerance = 1e-9;        // slack on s_1 = 1 and ratio <= R
inline constexpr double kRankToleranceFactor = 1e-12;   // s_d > this * s_1
inline constexpr double kRatioTolerance = 1e-7;         // tight-ratio detection

// Symmetric real matrix. Entries are symmetrized exactly at construction:
// entries(i,j) == entries(j,i) as stored, bit for bit.
class SymMatrix {
public:
    explicit SymMatrix(const Eigen::MatrixXd& m);

    int dim() const { return static_cast<int>(m_.rows()); }
    const Eigen::MatrixXd& m() const { return m_; }
    double operator()(int i, int j) const { return m_(i, j); }

    // True when lambda_min > kPdToleranceFactor * lambda_1.
    bool positive_definite() const;

private:
    Eigen::MatrixXd m_;
};

// A family of positive-definite matrices sharing one dimension.
class MatrixSet {
public:
    explicit MatrixSet(std::vector<SymMatrix> members);

    int dim() const { return members_.front().dim(); }
    int count() const { return static_cast<int>(members_.size()); }
    const SymMatrix& operator[](int i) const { return members_[i]; }
    const std::vector<SymMatrix>& members() const { return members_; }

private:
    std::vector<SymMatrix> members_;
};

}  // namespace specbal
