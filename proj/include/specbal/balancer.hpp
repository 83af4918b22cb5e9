#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "specbal/perturbation.hpp"
#include "specbal/spectral.hpp"
#include "specbal/sym_matrix.hpp"

namespace specbal {

// Feasibility window: the target max_i lambda_1/trace < 1/k is attainable for
// every PD family of size l in dimension d whenever d > k and
// l <= floor((d - 1) / (k - 1)).
struct BalanceProblem {
    MatrixSet set;
    int k = 2;

    bool feasible() const;
    // Throws InfeasibleError naming the violated inequality.
    void require_feasible() const;
};

struct BalancerConfig {
    double R = 0.0;              // 0 means auto: start at 16, double on stall, <= 4 times
    double target_margin = 1e-6; // stop when score <= 1/k - target_margin
    int max_iterations = 400;    // per R stage
    double active_tol = 1e-8;
    double step_shrink = 0.5;
    double min_step = 1e-12;
    double c0 = 0.25;            // boundary-step shift size, in (0, 1/2)
    std::uint64_t seed = 0;
};

enum class BalanceStatus { Converged, IterationLimit, Infeasible };
const char* to_string(BalanceStatus s);

struct StepRecord {
    int iteration = 0;
    char kind = 'i';  // 'i' interior, 'b' boundary
    double epsilon = 0.0;
    double f_before = 0.0;
    double f_after = 0.0;
};

struct BalanceResult {
    Eigen::MatrixXd A;  // symmetric PD, s_1 = 1
    double final_score = 0.0;
    std::vector<double> per_matrix_ratios;
    int iterations = 0;
    std::vector<StepRecord> step_log;
    BalanceStatus status = BalanceStatus::IterationLimit;
    double R_used = 0.0;
};

// Indices i with balance_ratio(a, set[i]) >= score - active_tol. Nonempty.
std::vector<int> active_set(const Eigen::MatrixXd& a, const MatrixSet& set,
                            double active_tol);

// Unit vector orthogonal (to 1e-10) to the top k-1 eigenvectors of
// a * M_i * a for each active index i; least-singular-vector of the stacked
// constraint rows. Convention: active empty -> e1. Throws InfeasibleError if
// the constraints already span the whole space.
Eigen::VectorXd interior_direction(const Eigen::MatrixXd& a_sym, const MatrixSet& set,
                                   const std::vector<int>& active, int k);

// Residual check for the exact invariance underlying the interior step:
// with A(eps) = A(I + eps v v^T) and v orthogonal to the top eigenvector q of
// A M A (eigenvalue lambda), A(eps)^T M A(eps) q stays equal to lambda q.
// True when |A(eps)^T M A(eps) q - lambda q| <= 1e-9 * lambda.
bool eigenvector_preservation_check(const Eigen::MatrixXd& a, const SymMatrix& m,
                                    const Eigen::VectorXd& v, const Eigen::VectorXd& q,
                                    double eps);

// Boundary-feasible step plan built from the kernel of the active quadratic
// form, shifted by spread_point(u_tilde, c0).
PerturbationPlan boundary_direction(const Eigen::MatrixXd& a_sym, const MatrixSet& set,
                                    const std::vector<int>& active, int k, double R,
                                    double c0);

// Backtracking from eps = 0.5 by step_shrink until the updated, renormalized
// candidate stays in the domain and the score drops by at least 1e-14.
// nullopt when eps falls below min_step without an acceptable candidate.
struct LineSearchResult {
    double epsilon = 0.0;
    Eigen::MatrixXd a_next;  // symmetric PD, s_1 = 1
    double f_next = 0.0;
};
std::optional<LineSearchResult> line_search(const Eigen::MatrixXd& a_sym,
                                            const MatrixSet& set,
                                            const Eigen::VectorXd& eta, double R,
                                            const BalancerConfig& config);

BalanceResult balance(const BalanceProblem& problem, const BalancerConfig& config);

// Closed-form two-matrix balancing in dimension 3: whiten the first matrix,
// diagonalize the second in the whitened frame as diag(a, b, c) with
// a >= b >= c, then shrink the leading direction by sqrt(b / a). Both output
// ratios are strictly below 1/2.
Eigen::MatrixXd pair_balance(const SymMatrix& m1, const SymMatrix& m2);

}  // namespace specbal
