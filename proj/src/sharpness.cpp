#include "specbal/sharpness.hpp"

#include <sstream>

#include "specbal/spectral.hpp"

namespace specbal {

SharpFamily sharp_family(int d, int k, double epsilon) {
    if (k < 2 || d < 2) throw ConfigError("need d >= 2 and k >= 2");
    if (d % (k - 1) != 0) {
        std::ostringstream os;
        os << "k - 1 = " << (k - 1) << " must divide d = " << d;
        throw ConfigError(os.str());
    }
    if (!(epsilon > 0.0) || !(epsilon < 1.0 / d)) {
        std::ostringstream os;
        os << "epsilon must lie in (0, 1/d) = (0, " << 1.0 / d << "), got " << epsilon;
        throw ConfigError(os.str());
    }

    SharpFamily fam;
    fam.d = d;
    fam.k = k;
    fam.l = d / (k - 1);
    fam.epsilon = epsilon;
    for (int i = 0; i < fam.l; ++i) {
        Eigen::VectorXd diag = Eigen::VectorXd::Constant(d, epsilon);
        for (int j = (k - 1) * i; j < (k - 1) * (i + 1); ++j) diag[j] = 1.0;
        fam.members.emplace_back(Eigen::MatrixXd(diag.asDiagonal()));
    }
    return fam;
}

Witness witness_violation(const Eigen::MatrixXd& a, const SharpFamily& family) {
    const double threshold = 1.0 / family.k;
    for (int i = 0; i < static_cast<int>(family.members.size()); ++i) {
        const double ratio = balance_ratio(a, family.members[i]);
        if (ratio > threshold) return Witness{i, ratio};
    }

    std::ostringstream os;
    os << "no member with ratio above 1/k = " << threshold
       << " found, which contradicts the construction; d = " << family.d
       << ", k = " << family.k << ", epsilon = " << family.epsilon << ", ratios =";
    for (int i = 0; i < static_cast<int>(family.members.size()); ++i) {
        os << " " << balance_ratio(a, family.members[i]);
    }
    os << ", A =";
    for (int r = 0; r < a.rows(); ++r) {
        for (int c = 0; c < a.cols(); ++c) os << " " << a(r, c);
    }
    throw InternalError(os.str());
}

}  // namespace specbal
