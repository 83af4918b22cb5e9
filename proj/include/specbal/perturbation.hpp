#pragma once

#include <vector>

#include <Eigen/Dense>

#include "specbal/spectral.hpp"
#include "specbal/sym_matrix.hpp"

namespace specbal {

// A(eps) = A (I + eps v v^T).
Eigen::MatrixXd rank_one_update(const Eigen::MatrixXd& a, const Eigen::VectorXd& v,
                                double eps);

// First-order movement of the eigenvalues of the symmetric conjugation
//   B(eps) = (I + eps eta eta^T) B (I + eps eta eta^T)
// where B is the symmetric PD matrix described by `profile`. Per eigenvalue
// block the leading value moves at rate
//   d/d eps lambda_lead(b) = 2 * lambda(b) * |P_b eta|^2
// (P_b projects onto the block's eigenspace) and the trailing copies are
// stationary at first order. Returns the leader rate for each block, aligned
// with profile.blocks.
std::vector<double> first_order_eigen_slopes(const SpectralProfile& profile,
                                             const Eigen::VectorXd& eta);

// Coordinate change between a perturbation direction eta and the weighted
// coordinates u_j = s_j * <eta, w_j> (w_j = singular vector j). Mutually
// inverse; |u| = |A eta|. eta_from_u requires strictly positive s_j.
Eigen::VectorXd u_from_eta(const SpectralProfile& profile, const Eigen::VectorXd& eta);
Eigen::VectorXd eta_from_u(const SpectralProfile& profile, const Eigen::VectorXd& u);

// Indices j where the consecutive singular-value ratio is tight against R:
// { j : s_j / s_{j+1} >= R (1 - kRatioTolerance) }.
std::vector<int> tight_ratio_set(const SpectralProfile& profile, double R);

// Boundary-compatibility checks for a perturbation direction. Both compare
// mass across each tight boundary j (between the block of index j and the
// block of index j+1); the u form implies the eta form at any tight boundary.
//   eta condition: |P_{block j} eta|^2   <  (1/2) |P_{block j+1} eta|^2
//   u condition:   sum_{block j} u^2     <= (R^2 / 2) sum_{block j+1} u^2
bool check_eta_condition(const SpectralProfile& profile, const Eigen::VectorXd& eta,
                         double R);
bool check_u_condition(const SpectralProfile& profile, const Eigen::VectorXd& u,
                       double R);

// Quadratic form Q(u) = sum over stored directions of <u, v>^2. Each entry
// records which family member produced it.
struct QFormEntry {
    int matrix_index = 0;
    Eigen::VectorXd v;
};
struct QForm {
    int dim = 0;
    std::vector<QFormEntry> entries;

    double value(const Eigen::VectorXd& u) const;
    Eigen::MatrixXd gram() const;  // sum of v v^T
};

// Build Q from the listed members: for member i, take an orthonormal basis
// q_{i,m} of the top eigenspace of A M_i A (multiplicity merged at
// kMultiplicityTolerance) and store v_{i,m}[j] = <q_{i,m}, w_j> / s_j.
// Whenever the balance ratio of member i is at least 1/k,
// |v_{i,m}| <= k * lambda_1(M_i) / lambda_d(M_i). A top eigenspace of
// dimension >= k would mean that member is already balanced past the target;
// that raises AlreadyBalanced.
QForm qform_build(const Eigen::MatrixXd& a_sym, const MatrixSet& set,
                  const std::vector<int>& active, int k);

// Unit vector annihilating every stored direction, computed as a least
// singular vector of the stacked v matrix: Q(u_tilde) is numerically zero
// (guaranteed attainable when the form has at most dim-1 entries). Convention
// for an empty form: e1. Throws InfeasibleError when the stacked matrix has
// full rank dim.
Eigen::VectorXd qform_kernel(const QForm& q);

// Shifted kernel point: u = u_tilde + (c0 / sqrt(d)) * sigma with
// sigma_j = sign(u_tilde_j) (sign(0) = +1). For unit u_tilde this gives
// |u - u_tilde| = c0, min_j u_j^2 >= c0^2 / d and sum u_j^2 <= (1 + c0)^2,
// so sum u^2 <= (R^2/2) min u^2 for the paired radius
// R = sqrt(2 d (1 + c0)^2 / c0^2), making the u condition hold under every
// block partition. c0 outside (0, 1) raises ConfigError.
struct SpreadPoint {
    Eigen::VectorXd u;
    double R = 0.0;
};
SpreadPoint spread_point(const Eigen::VectorXd& u_tilde, double c0);

// Trace growth under A(eps) = A (I + eps eta eta^T):
//   lhs = trace(A(eps)^T M A(eps))
//   rhs = trace(A^T M A) + c * eps * |A eta|^2 with c = 2 * lambda_d(M)
// pass = (lhs >= rhs). Requires A symmetric PD, M PD, eps >= 0, |eta| <= 1.
struct TraceGrowth {
    double lhs = 0.0;
    double rhs = 0.0;
    bool pass = false;
};
TraceGrowth trace_growth_check(const Eigen::MatrixXd& a_sym, const SymMatrix& m,
                               const Eigen::VectorXd& eta, double eps);

// Everything needed to take one boundary step.
struct PerturbationPlan {
    Eigen::VectorXd eta;
    Eigen::VectorXd u;
    double suggested_R = 0.0;  // radius that validates the u condition
    SpectralProfile profile;
};

}  // namespace specbal
