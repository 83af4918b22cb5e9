#pragma once

#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "specbal/rng.hpp"
#include "specbal/spectral.hpp"
#include "specbal/sym_matrix.hpp"

namespace helpers {

// Wishart-style positive definite matrix with condition number at most 1000:
// a sample covariance plus a ridge of lambda_max / 999.
inline Eigen::MatrixXd random_pd(specbal::CounterRng& rng, int d) {
    const Eigen::MatrixXd g = specbal::gaussian_matrix(rng, d, d);
    Eigen::MatrixXd w = (g * g.transpose()) / static_cast<double>(d);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w, Eigen::EigenvaluesOnly);
    const double hi = es.eigenvalues().maxCoeff();
    w += (hi / 999.0) * Eigen::MatrixXd::Identity(d, d);
    return 0.5 * (w + w.transpose());
}

inline std::vector<specbal::SymMatrix> random_pd_family(specbal::CounterRng& rng, int d,
                                                        int l) {
    std::vector<specbal::SymMatrix> out;
    for (int i = 0; i < l; ++i) out.emplace_back(random_pd(rng, d));
    return out;
}

inline Eigen::MatrixXd random_orthogonal(specbal::CounterRng& rng, int d) {
    const Eigen::MatrixXd g = specbal::gaussian_matrix(rng, d, d);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR();
    for (int j = 0; j < d; ++j) {
        if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    }
    return q;
}

// Symmetric PD matrix with the given descending spectrum in a random frame.
inline Eigen::MatrixXd pd_with_spectrum(specbal::CounterRng& rng,
                                        const Eigen::VectorXd& values) {
    const Eigen::MatrixXd q = random_orthogonal(rng, static_cast<int>(values.size()));
    const Eigen::MatrixXd m = q * values.asDiagonal() * q.transpose();
    return 0.5 * (m + m.transpose());
}

inline Eigen::VectorXd random_unit(specbal::CounterRng& rng, int d) {
    Eigen::VectorXd v = specbal::gaussian_vector(rng, d);
    while (v.norm() == 0.0) v = specbal::gaussian_vector(rng, d);
    return v.normalized();
}

// Hand-built profile: one value per block, every block boundary exactly tight
// at ratio R, identity frame. block_sizes must sum to the dimension.
inline specbal::SpectralProfile profile_for_partition(const std::vector<int>& block_sizes,
                                                      double R) {
    int d = 0;
    for (int b : block_sizes) d += b;
    specbal::SpectralProfile p;
    p.singular_values.resize(d);
    p.singular_vectors = Eigen::MatrixXd::Identity(d, d);
    p.block_of.resize(d);
    int idx = 0;
    double value = 1.0;
    for (std::size_t b = 0; b < block_sizes.size(); ++b) {
        const int first = idx;
        for (int j = 0; j < block_sizes[b]; ++j) {
            p.singular_values[idx] = value;
            p.block_of[idx] = static_cast<int>(b);
            ++idx;
        }
        p.blocks.emplace_back(first, idx - 1);
        if (idx < d) p.tight_ratios.push_back(idx - 1);
        value /= R;
    }
    return p;
}

}  // namespace helpers
