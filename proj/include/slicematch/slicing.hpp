#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "slicematch/measure.hpp"
#include "slicematch/rng.hpp"

namespace slicematch {

using RngSeed = std::uint64_t;

/// Square matrix with orthonormal columns: ||P^T P - I||_F below tol.
class OrthoMatrix {
public:
    explicit OrthoMatrix(Eigen::MatrixXd m, double tol = 1e-8);

    [[nodiscard]] const Eigen::MatrixXd& matrix() const { return m_; }
    [[nodiscard]] int dim() const { return static_cast<int>(m_.rows()); }
    [[nodiscard]] Direction column(int i) const { return Direction(m_.col(i)); }
    [[nodiscard]] double orthogonality_defect() const;

private:
    Eigen::MatrixXd m_;
};

/// Uniform direction on S^{n-1}: normalized vector of i.i.d. normals.
Direction sample_direction(Rng& rng, int n);

/// Haar-distributed orthogonal matrix: QR of an n x n standard-normal
/// matrix with the signs of R's diagonal folded into Q's columns, so the
/// implied R diagonal is strictly positive. Postcondition:
/// ||Q^T Q - I||_F < 1e-10.
OrthoMatrix sample_haar_orthogonal(Rng& rng, int n);

/// Accepts m with ||m^T m - I||_F < 1e-8, else throws.
OrthoMatrix validate_orthogonal(const Eigen::MatrixXd& m);

}  // namespace slicematch
