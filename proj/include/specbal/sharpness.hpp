#pragma once

#include <vector>

#include <Eigen/Dense>

#include "specbal/sym_matrix.hpp"

namespace specbal {

// Diagonal family showing the feasibility bound is tight when (k-1) l = d:
// member i has ones on the index block {(k-1)(i-1) .. (k-1)i - 1} (0-based)
// and epsilon elsewhere. For epsilon < 1/d no A balances all members.
struct SharpFamily {
    int d = 0;
    int k = 0;
    int l = 0;
    double epsilon = 0.0;
    std::vector<SymMatrix> members;

    MatrixSet as_set() const { return MatrixSet(members); }
};

// Throws ConfigError unless (k-1) divides d and 0 < epsilon < 1/d.
SharpFamily sharp_family(int d, int k, double epsilon);

// The member index and ratio of a violated constraint:
// balance_ratio(a, members[index]) > 1/k. One always exists for full-rank A;
// if none is found the function throws InternalError with a diagnostic dump.
struct Witness {
    int index = 0;
    double ratio = 0.0;
};
Witness witness_violation(const Eigen::MatrixXd& a, const SharpFamily& family);

}  // namespace specbal
