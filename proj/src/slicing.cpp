#include "slicematch/slicing.hpp"

#include <stdexcept>
#include <string>

namespace slicematch {

namespace {

double defect(const Eigen::MatrixXd& m) {
    const Eigen::Index n = m.cols();
    return (m.transpose() * m - Eigen::MatrixXd::Identity(n, n)).norm();
}

}  // namespace

OrthoMatrix::OrthoMatrix(Eigen::MatrixXd m, double tol) : m_(std::move(m)) {
    if (m_.rows() != m_.cols() || m_.rows() < 1) {
        throw std::invalid_argument("OrthoMatrix: matrix must be square and nonempty");
    }
    const double d = defect(m_);
    if (!(d < tol)) {
        throw std::invalid_argument("OrthoMatrix: ||P^T P - I||_F = " + std::to_string(d) +
                                    " exceeds tolerance " + std::to_string(tol));
    }
}

double OrthoMatrix::orthogonality_defect() const { return defect(m_); }

Direction sample_direction(Rng& rng, int n) {
    if (n < 1) throw std::invalid_argument("sample_direction: dimension must be positive");
    Eigen::VectorXd v(n);
    while (true) {
        for (int i = 0; i < n; ++i) v[i] = rng.normal();
        const double norm = v.norm();
        if (norm > 1e-8) return Direction(v / norm);
    }
}

OrthoMatrix sample_haar_orthogonal(Rng& rng, int n) {
    if (n < 1) throw std::invalid_argument("sample_haar_orthogonal: dimension must be positive");
    while (true) {
        Eigen::MatrixXd g(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) g(i, j) = rng.normal();
        }
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
        Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
        const Eigen::VectorXd rdiag = qr.matrixQR().diagonal();
        bool singular = false;
        for (int i = 0; i < n; ++i) {
            if (rdiag[i] == 0.0) {
                singular = true;
                break;
            }
            if (rdiag[i] < 0.0) q.col(i) = -q.col(i);
        }
        if (singular) continue;  // measure-zero draw, resample
        OrthoMatrix out(std::move(q), 1e-8);
        if (!(out.orthogonality_defect() < 1e-10)) {
            throw std::runtime_error("sample_haar_orthogonal: QR lost orthogonality");
        }
        return out;
    }
}

OrthoMatrix validate_orthogonal(const Eigen::MatrixXd& m) { return OrthoMatrix(m, 1e-8); }

}  // namespace slicematch
