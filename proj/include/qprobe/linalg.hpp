#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace qprobe {

using complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr complex I{0.0, 1.0};

/// Raised when a computation produces or receives numerically invalid data
/// (non-Hermitian generator, unphysical reconstruction, ...).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline double max_abs(const ComplexMatrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline double hermiticity_deviation(const ComplexMatrix& h) {
    return max_abs(h - h.adjoint());
}

inline double unitarity_deviation(const ComplexMatrix& u) {
    return max_abs(u.adjoint() * u - ComplexMatrix::Identity(u.rows(), u.cols()));
}

/// Returns (H + H^dag)/2. Inputs further than `tolerance` from Hermitian are
/// rejected rather than silently repaired.
inline ComplexMatrix symmetrized(const ComplexMatrix& h, double tolerance = 1e-10) {
    if (h.rows() != h.cols())
        throw std::invalid_argument("matrix is not square");
    const double dev = hermiticity_deviation(h);
    if (dev > tolerance)
        throw NumericalError("matrix is not Hermitian (deviation " + std::to_string(dev) + ")");
    return 0.5 * (h + h.adjoint());
}

/// Eigendecomposition of a Hermitian generator, reusable for many evolution
/// times: exp(-iHt) = V diag(exp(-i e t)) V^dag.
class SpectralPropagator {
public:
    SpectralPropagator() = default;
    explicit SpectralPropagator(const ComplexMatrix& h) {
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(symmetrized(h));
        if (solver.info() != Eigen::Success)
            throw NumericalError("Hermitian eigendecomposition failed");
        energies_ = solver.eigenvalues();
        vectors_ = solver.eigenvectors();
    }

    Eigen::Index dim() const { return energies_.size(); }
    const RealVector& energies() const { return energies_; }
    const ComplexMatrix& vectors() const { return vectors_; }

    ComplexVector apply(const ComplexVector& psi, double t) const {
        if (psi.size() != dim())
            throw std::invalid_argument("state dimension does not match the generator");
        if (t == 0.0) return psi;
        ComplexVector coeffs = vectors_.adjoint() * psi;
        for (Eigen::Index k = 0; k < coeffs.size(); ++k)
            coeffs[k] *= std::exp(complex(0.0, -energies_[k] * t));
        return vectors_ * coeffs;
    }

    ComplexMatrix unitary(double t) const {
        ComplexVector phases(dim());
        for (Eigen::Index k = 0; k < dim(); ++k)
            phases[k] = std::exp(complex(0.0, -energies_[k] * t));
        return vectors_ * phases.asDiagonal() * vectors_.adjoint();
    }

private:
    RealVector energies_;
    ComplexMatrix vectors_;
};

/// Kronecker product with the first factor varying slowest.
inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
    ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

}  // namespace qprobe
