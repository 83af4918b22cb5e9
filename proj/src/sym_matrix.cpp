#include "specbal/sym_matrix.hpp"

#include <sstream>

#include <Eigen/Eigenvalues>

namespace specbal {

SymMatrix::SymMatrix(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols() || m.rows() < 1) {
        std::ostringstream os;
        os << "matrix must be square and nonempty, got " << m.rows() << "x" << m.cols();
        throw InputError(os.str());
    }
    if (!m.allFinite()) throw InputError("matrix has non-finite entries");
    m_ = m;
    // Store the average in both triangles so m_(i,j) == m_(j,i) bit for bit.
    for (int i = 0; i < m_.rows(); ++i) {
        for (int j = i + 1; j < m_.cols(); ++j) {
            const double v = 0.5 * (m(i, j) + m(j, i));
            m_(i, j) = v;
            m_(j, i) = v;
        }
    }
}

bool SymMatrix::positive_definite() const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m_, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    return hi > 0.0 && lo > kPdToleranceFactor * hi;
}

MatrixSet::MatrixSet(std::vector<SymMatrix> members) : members_(std::move(members)) {
    if (members_.empty()) throw InputError("matrix set is empty");
    const int d = members_.front().dim();
    for (std::size_t i = 0; i < members_.size(); ++i) {
        if (members_[i].dim() != d) {
            std::ostringstream os;
            os << "matrix " << i << " has dimension " << members_[i].dim()
               << ", expected " << d;
            throw InputError(os.str());
        }
        if (!members_[i].positive_definite()) {
            std::ostringstream os;
            os << "matrix " << i << " is not positive definite";
            throw InputError(os.str());
        }
    }
}

}  // namespace specbal
