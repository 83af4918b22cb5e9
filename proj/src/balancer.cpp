#include "specbal/balancer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "specbal/errors.hpp"

namespace specbal {

namespace {

Eigen::VectorXd sign_normalized(Eigen::VectorXd v) {
    for (int j = 0; j < v.size(); ++j) {
        if (v[j] != 0.0) {
            if (v[j] < 0.0) v = -v;
            break;
        }
    }
    return v;
}

std::vector<int> active_from_ratios(const std::vector<double>& ratios, double active_tol) {
    const double score = *std::max_element(ratios.begin(), ratios.end());
    std::vector<int> active;
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        if (ratios[i] >= score - active_tol) active.push_back(static_cast<int>(i));
    }
    return active;
}

}  // namespace

bool BalanceProblem::feasible() const {
    const int d = set.dim();
    if (k < 2 || d <= k) return false;
    return set.count() <= (d - 1) / (k - 1);
}

void BalanceProblem::require_feasible() const {
    const int d = set.dim();
    const int l = set.count();
    if (k < 2) {
        std::ostringstream os;
        os << "k must be at least 2, got " << k;
        throw ConfigError(os.str());
    }
    if (d <= k) {
        std::ostringstream os;
        os << "need d > k, got d = " << d << ", k = " << k;
        throw InfeasibleError(os.str());
    }
    if (l > (d - 1) / (k - 1)) {
        std::ostringstream os;
        os << "need l <= floor((d-1)/(k-1)): l = " << l << ", floor((" << d << "-1)/("
           << k << "-1)) = " << (d - 1) / (k - 1);
        throw InfeasibleError(os.str());
    }
}

const char* to_string(BalanceStatus s) {
    switch (s) {
        case BalanceStatus::Converged: return "Converged";
        case BalanceStatus::IterationLimit: return "IterationLimit";
        case BalanceStatus::Infeasible: return "Infeasible";
    }
    return "Unknown";
}

std::vector<int> active_set(const Eigen::MatrixXd& a, const MatrixSet& set,
                            double active_tol) {
    return active_from_ratios(balance_ratios(a, set), active_tol);
}

Eigen::VectorXd interior_direction(const Eigen::MatrixXd& a_sym, const MatrixSet& set,
                                   const std::vector<int>& active, int k) {
    const int d = static_cast<int>(a_sym.rows());
    if (active.empty()) return Eigen::VectorXd::Unit(d, 0);

    const int rows = static_cast<int>(active.size()) * (k - 1);
    Eigen::MatrixXd constraints(rows, d);
    int r = 0;
    for (int i : active) {
        EigResult eig = sym_eig(a_sym * set[i].m() * a_sym);
        for (int j = 0; j < k - 1; ++j) constraints.row(r++) = eig.vectors.col(j).transpose();
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(constraints, Eigen::ComputeFullV);
    Eigen::VectorXd v = svd.matrixV().col(d - 1);
    if (rows >= d) {
        const double smin = svd.singularValues()[d - 1];
        if (smin > 1e-10) {
            std::ostringstream os;
            os << "constraint rows span the whole space (smallest singular value "
               << smin << "), no orthogonal direction exists";
            throw InfeasibleError(os.str());
        }
    }
    return sign_normalized(v.normalized());
}

bool eigenvector_preservation_check(const Eigen::MatrixXd& a, const SymMatrix& m,
                                    const Eigen::VectorXd& v, const Eigen::VectorXd& q,
                                    double eps) {
    const Eigen::MatrixXd base = a.transpose() * m.m() * a;
    const double lambda = q.dot(base * q);
    const Eigen::MatrixXd a_eps = rank_one_update(a, v, eps);
    const double residual = (a_eps.transpose() * (m.m() * (a_eps * q)) - lambda * q).norm();
    return residual <= 1e-9 * std::abs(lambda);
}

PerturbationPlan boundary_direction(const Eigen::MatrixXd& a_sym, const MatrixSet& set,
                                    const std::vector<int>& active, int k, double R,
                                    double c0) {
    PerturbationPlan plan;
    plan.profile = spectral_profile(a_sym, R);

    const QForm q = qform_build(a_sym, set, active, k);
    const Eigen::VectorXd u_tilde = qform_kernel(q);

    if (tight_ratio_set(plan.profile, R).empty()) {
        plan.u = u_tilde;
        plan.suggested_R = R;
    } else {
        SpreadPoint sp = spread_point(u_tilde, c0);
        plan.u = sp.u;
        plan.suggested_R = sp.R;
    }
    plan.eta = eta_from_u(plan.profile, plan.u);
    return plan;
}

std::optional<LineSearchResult> line_search(const Eigen::MatrixXd& a_sym,
                                            const MatrixSet& set,
                                            const Eigen::VectorXd& eta, double R,
                                            const BalancerConfig& config) {
    if (eta.norm() == 0.0) return std::nullopt;
    const Eigen::VectorXd dir = eta.normalized();
    const double f_cur = balance_score(a_sym, set);

    for (double eps = 0.5; eps >= config.min_step; eps *= config.step_shrink) {
        const Eigen::MatrixXd cand = rank_one_update(a_sym, dir, eps);
        Eigen::MatrixXd next = polar_decompose(cand).stretch;
        try {
            next = normalize_to_domain(next);
        } catch (const DegenerateError&) {
            continue;
        }
        if (!in_domain(next, R)) continue;
        double f_next;
        try {
            f_next = balance_score(next, set);
        } catch (const DegenerateError&) {
            continue;
        }
        if (f_next <= f_cur - 1e-14) {
            return LineSearchResult{eps, std::move(next), f_next};
        }
    }
    return std::nullopt;
}

BalanceResult balance(const BalanceProblem& problem, const BalancerConfig& config) {
    problem.require_feasible();
    if (!(config.step_shrink > 0.0 && config.step_shrink < 1.0)) {
        throw ConfigError("step_shrink must lie in (0, 1)");
    }
    if (!(config.target_margin > 0.0) || !(config.active_tol > 0.0) ||
        !(config.min_step > 0.0) || config.max_iterations < 1) {
        throw ConfigError("tolerances and iteration budget must be positive");
    }

    const MatrixSet& set = problem.set;
    const int d = set.dim();
    const int k = problem.k;
    const double target = 1.0 / k - config.target_margin;

    const bool auto_R = !(config.R > 0.0);
    double R = auto_R ? 16.0 : config.R;
    const int max_stages = auto_R ? 5 : 1;

    BalanceResult res;
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(d, d);
    int iter_total = 0;
    bool converged = false;

    for (int stage = 0; stage < max_stages && !converged; ++stage) {
        if (stage > 0) R *= 2.0;
        for (int it = 0; it < config.max_iterations; ++it) {
            const std::vector<double> ratios = balance_ratios(A, set);
            const double score = *std::max_element(ratios.begin(), ratios.end());
            if (score <= target) {
                converged = true;
                break;
            }

            const std::vector<int> active = active_from_ratios(ratios, config.active_tol);
            const SpectralProfile profile = spectral_profile(A, R);
            const bool at_boundary = !tight_ratio_set(profile, R).empty();

            // Primary direction: boundary plan when a ratio constraint is
            // tight, interior otherwise. If the primary direction cannot make
            // progress, try the other one before declaring a stall.
            Eigen::VectorXd eta;
            char kind = 'i';
            bool have_direction = false;
            if (at_boundary) {
                try {
                    eta = boundary_direction(A, set, active, k, R, config.c0).eta;
                    kind = 'b';
                    have_direction = true;
                } catch (const AlreadyBalanced&) {
                } catch (const InfeasibleError&) {
                }
            }
            if (!have_direction) {
                eta = interior_direction(A, set, active, k);
                kind = 'i';
            }

            std::optional<LineSearchResult> step = line_search(A, set, eta, R, config);
            if (!step && kind == 'b') {
                eta = interior_direction(A, set, active, k);
                kind = 'i';
                step = line_search(A, set, eta, R, config);
            } else if (!step && kind == 'i' && !at_boundary) {
                try {
                    eta = boundary_direction(A, set, active, k, R, config.c0).eta;
                    kind = 'b';
                    step = line_search(A, set, eta, R, config);
                } catch (const AlreadyBalanced&) {
                } catch (const InfeasibleError&) {
                }
            }
            if (!step) break;  // stall: move to the next stage (larger R)

            ++iter_total;
            res.step_log.push_back({iter_total, kind, step->epsilon, score, step->f_next});
            A = std::move(step->a_next);
        }
        if (!converged) {
            // The budget ran out; the last accepted step may still have
            // crossed the target.
            converged = balance_score(A, set) <= target;
        }
    }

    res.A = A;
    res.per_matrix_ratios = balance_ratios(A, set);
    res.final_score =
        *std::max_element(res.per_matrix_ratios.begin(), res.per_matrix_ratios.end());
    res.iterations = iter_total;
    res.R_used = R;
    res.status = converged ? BalanceStatus::Converged : BalanceStatus::IterationLimit;
    return res;
}

Eigen::MatrixXd pair_balance(const SymMatrix& m1, const SymMatrix& m2) {
    if (m1.dim() != 3 || m2.dim() != 3) {
        throw InputError("pair balancing is implemented for dimension 3 only");
    }
    if (!m1.positive_definite() || !m2.positive_definite()) {
        throw DegenerateError("pair balancing needs positive definite inputs");
    }

    EigResult e1 = sym_eig(m1.m());
    Eigen::MatrixXd whiten = e1.vectors *
                             e1.values.array().rsqrt().matrix().asDiagonal() *
                             e1.vectors.transpose();
    EigResult e2 = sym_eig(whiten * m2.m() * whiten);  // values a >= b >= c
    const double shrink = std::sqrt(e2.values[1] / e2.values[0]);
    Eigen::Vector3d scale(shrink, 1.0, 1.0);
    return whiten * e2.vectors * scale.asDiagonal();
}

}  // namespace specbal
