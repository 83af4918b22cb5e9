#include "specbal/spectral.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "specbal/errors.hpp"

namespace specbal {

namespace {

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) {
    return 0.5 * (m + m.transpose());
}

}  // namespace

EigResult sym_eig(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrized(m));
    if (es.info() != Eigen::Success) throw InternalError("eigendecomposition failed");
    const int d = static_cast<int>(m.rows());
    EigResult r;
    r.values.resize(d);
    r.vectors.resize(d, d);
    // Eigen sorts ascending; flip to descending.
    for (int j = 0; j < d; ++j) {
        r.values[j] = es.eigenvalues()[d - 1 - j];
        r.vectors.col(j) = es.eigenvectors().col(d - 1 - j);
    }
    return r;
}

PolarResult polar_decompose(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols()) throw InputError("polar decomposition needs a square matrix");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::MatrixXd& u = svd.matrixU();
    PolarResult r;
    r.stretch = u * svd.singularValues().asDiagonal() * u.transpose();
    r.stretch = symmetrized(r.stretch);
    r.rotation = u * svd.matrixV().transpose();
    return r;
}

double balance_ratio(const Eigen::MatrixXd& a, const SymMatrix& m) {
    const Eigen::MatrixXd b = symmetrized(a.transpose() * m.m() * a);
    const double tr = b.trace();
    if (!(tr > 0.0)) throw DegenerateError("quadratic form has non-positive trace");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff() / tr;
}

std::vector<double> balance_ratios(const Eigen::MatrixXd& a, const MatrixSet& set) {
    std::vector<double> r;
    r.reserve(set.count());
    for (int i = 0; i < set.count(); ++i) r.push_back(balance_ratio(a, set[i]));
    return r;
}

double balance_score(const Eigen::MatrixXd& a, const MatrixSet& set) {
    double best = 0.0;
    for (int i = 0; i < set.count(); ++i) best = std::max(best, balance_ratio(a, set[i]));
    return best;
}

bool in_domain(const Eigen::MatrixXd& a, double R) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    const Eigen::VectorXd& s = svd.singularValues();
    if (std::abs(s[0] - 1.0) > kDomainTolerance) return false;
    for (int j = 0; j + 1 < s.size(); ++j) {
        if (!(s[j + 1] > 0.0)) return false;
        if (s[j] / s[j + 1] > R * (1.0 + kDomainTolerance)) return false;
    }
    return true;
}

Eigen::MatrixXd normalize_to_domain(const Eigen::MatrixXd& a) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    const double s1 = svd.singularValues()[0];
    if (!(s1 > 0.0) || !std::isfinite(s1)) {
        throw DegenerateError("matrix is numerically rank zero, cannot normalize");
    }
    return a / s1;
}

SpectralProfile spectral_profile(const Eigen::MatrixXd& a_sym, double R) {
    EigResult eig = sym_eig(a_sym);
    const int d = static_cast<int>(eig.values.size());
    if (!(eig.values[d - 1] > 0.0)) {
        throw DegenerateError("spectral profile requires a positive definite matrix");
    }

    SpectralProfile p;
    p.singular_values = eig.values;
    p.singular_vectors = eig.vectors;
    p.block_of.resize(d);

    int first = 0;
    for (int j = 0; j < d; ++j) {
        p.block_of[j] = static_cast<int>(p.blocks.size());
        const bool last_in_run =
            (j + 1 == d) ||
            (eig.values[first] - eig.values[j + 1] > kMultiplicityTolerance * eig.values[first]);
        if (last_in_run) {
            p.blocks.emplace_back(first, j);
            first = j + 1;
        }
    }

    for (int j = 0; j + 1 < d; ++j) {
        if (eig.values[j] / eig.values[j + 1] >= R * (1.0 - kRatioTolerance)) {
            p.tight_ratios.push_back(j);
        }
    }
    return p;
}

}  // namespace specbal
