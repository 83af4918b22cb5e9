#include "specbal/perturbation.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "specbal/errors.hpp"

namespace specbal {

namespace {

// Sign convention making vectors that are only defined up to sign
// deterministic: first nonzero component positive.
Eigen::VectorXd sign_normalized(Eigen::VectorXd v) {
    for (int j = 0; j < v.size(); ++j) {
        if (v[j] != 0.0) {
            if (v[j] < 0.0) v = -v;
            break;
        }
    }
    return v;
}

double block_mass(const SpectralProfile& p, int block, const Eigen::VectorXd& coords) {
    double s = 0.0;
    for (int j = p.blocks[block].first; j <= p.blocks[block].second; ++j) {
        s += coords[j] * coords[j];
    }
    return s;
}

}  // namespace

Eigen::MatrixXd rank_one_update(const Eigen::MatrixXd& a, const Eigen::VectorXd& v,
                                double eps) {
    return a + eps * (a * v) * v.transpose();
}

std::vector<double> first_order_eigen_slopes(const SpectralProfile& profile,
                                             const Eigen::VectorXd& eta) {
    const Eigen::VectorXd w = profile.singular_vectors.transpose() * eta;
    std::vector<double> slopes;
    slopes.reserve(profile.blocks.size());
    for (std::size_t b = 0; b < profile.blocks.size(); ++b) {
        double proj_sq = 0.0;
        for (int j = profile.blocks[b].first; j <= profile.blocks[b].second; ++j) {
            proj_sq += w[j] * w[j];
        }
        slopes.push_back(2.0 * profile.singular_values[profile.blocks[b].first] * proj_sq);
    }
    return slopes;
}

Eigen::VectorXd u_from_eta(const SpectralProfile& profile, const Eigen::VectorXd& eta) {
    Eigen::VectorXd u = profile.singular_vectors.transpose() * eta;
    u.array() *= profile.singular_values.array();
    return u;
}

Eigen::VectorXd eta_from_u(const SpectralProfile& profile, const Eigen::VectorXd& u) {
    if (!(profile.singular_values.minCoeff() > 0.0)) {
        throw DegenerateError("coordinate change requires positive singular values");
    }
    return profile.singular_vectors * (u.array() / profile.singular_values.array()).matrix();
}

std::vector<int> tight_ratio_set(const SpectralProfile& profile, double R) {
    std::vector<int> out;
    const Eigen::VectorXd& s = profile.singular_values;
    for (int j = 0; j + 1 < s.size(); ++j) {
        if (s[j] / s[j + 1] >= R * (1.0 - kRatioTolerance)) out.push_back(j);
    }
    return out;
}

bool check_eta_condition(const SpectralProfile& profile, const Eigen::VectorXd& eta,
                         double R) {
    const Eigen::VectorXd w = profile.singular_vectors.transpose() * eta;
    for (int j : tight_ratio_set(profile, R)) {
        const int bj = profile.block_of[j];
        const int bj1 = profile.block_of[j + 1];
        if (bj == bj1) continue;  // only possible for R within the multiplicity slack
        if (!(block_mass(profile, bj, w) < 0.5 * block_mass(profile, bj1, w))) return false;
    }
    return true;
}

bool check_u_condition(const SpectralProfile& profile, const Eigen::VectorXd& u,
                       double R) {
    for (int j : tight_ratio_set(profile, R)) {
        const int bj = profile.block_of[j];
        const int bj1 = profile.block_of[j + 1];
        if (bj == bj1) continue;
        if (!(block_mass(profile, bj, u) <= 0.5 * R * R * block_mass(profile, bj1, u))) {
            return false;
        }
    }
    return true;
}

double QForm::value(const Eigen::VectorXd& u) const {
    double q = 0.0;
    for (const QFormEntry& e : entries) {
        const double t = e.v.dot(u);
        q += t * t;
    }
    return q;
}

Eigen::MatrixXd QForm::gram() const {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(dim, dim);
    for (const QFormEntry& e : entries) g += e.v * e.v.transpose();
    return g;
}

QForm qform_build(const Eigen::MatrixXd& a_sym, const MatrixSet& set,
                  const std::vector<int>& active, int k) {
    const int d = static_cast<int>(a_sym.rows());
    EigResult base = sym_eig(a_sym);
    if (!(base.values[d - 1] > 0.0)) {
        throw DegenerateError("quadratic form requires a positive definite base matrix");
    }

    QForm q;
    q.dim = d;
    for (int i : active) {
        EigResult eig = sym_eig(a_sym * set[i].m() * a_sym);
        const double top = eig.values[0];
        int mult = 1;
        while (mult < d && top - eig.values[mult] <= kMultiplicityTolerance * top) ++mult;
        if (mult >= k) {
            std::ostringstream os;
            os << "member " << i << " has top eigenspace dimension " << mult
               << " >= k = " << k << ", its ratio is already at most 1/k";
            throw AlreadyBalanced(os.str());
        }
        for (int m = 0; m < mult; ++m) {
            QFormEntry e;
            e.matrix_index = i;
            Eigen::VectorXd coords = base.vectors.transpose() * eig.vectors.col(m);
            e.v = (coords.array() / base.values.array()).matrix();
            q.entries.push_back(std::move(e));
        }
    }
    return q;
}

Eigen::VectorXd qform_kernel(const QForm& q) {
    const int d = q.dim;
    if (q.entries.empty()) return Eigen::VectorXd::Unit(d, 0);

    Eigen::MatrixXd stacked(static_cast<int>(q.entries.size()), d);
    for (std::size_t r = 0; r < q.entries.size(); ++r) {
        stacked.row(static_cast<int>(r)) = q.entries[r].v.transpose();
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked, Eigen::ComputeFullV);
    const int rows = static_cast<int>(q.entries.size());
    if (rows < d) {
        // Trailing right singular vectors span the exact orthogonal
        // complement of the row space.
        return sign_normalized(svd.matrixV().col(d - 1));
    }
    const double smax = svd.singularValues()[0];
    const double smin = svd.singularValues()[d - 1];
    if (smin > kRankToleranceFactor * smax) {
        std::ostringstream os;
        os << "stacked direction matrix has full rank " << d
           << " (smallest singular value " << smin << "), no kernel vector exists";
        throw InfeasibleError(os.str());
    }
    return sign_normalized(svd.matrixV().col(d - 1));
}

SpreadPoint spread_point(const Eigen::VectorXd& u_tilde, double c0) {
    if (!(c0 > 0.0 && c0 < 1.0)) {
        std::ostringstream os;
        os << "shift size must lie in (0, 1), got " << c0;
        throw ConfigError(os.str());
    }
    const int d = static_cast<int>(u_tilde.size());
    const double step = c0 / std::sqrt(static_cast<double>(d));
    SpreadPoint p;
    p.u = u_tilde;
    for (int j = 0; j < d; ++j) p.u[j] += (u_tilde[j] < 0.0 ? -step : step);
    p.R = std::sqrt(2.0 * d * (1.0 + c0) * (1.0 + c0) / (c0 * c0));
    return p;
}

TraceGrowth trace_growth_check(const Eigen::MatrixXd& a_sym, const SymMatrix& m,
                               const Eigen::VectorXd& eta, double eps) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.m(), Eigen::EigenvaluesOnly);
    const double lambda_min = es.eigenvalues().minCoeff();

    const Eigen::MatrixXd a_eps = rank_one_update(a_sym, eta, eps);
    TraceGrowth g;
    g.lhs = (a_eps.transpose() * m.m() * a_eps).trace();
    g.rhs = (a_sym.transpose() * m.m() * a_sym).trace() +
            2.0 * lambda_min * eps * (a_sym * eta).squaredNorm();
    g.pass = g.lhs >= g.rhs;
    return g;
}

}  // namespace specbal
