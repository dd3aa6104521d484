#pragma once

#include <bit>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "spectroqsim/errors.hpp"

namespace spectroqsim {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;

inline constexpr cplx I_unit{0.0, 1.0};

enum class Pauli : char { I = 'I', X = 'X', Y = 'Y', Z = 'Z' };

/// Qubit-count cap for dense operators. Defaults to 12 and can be
/// overridden with SPECTROQSIM_DIM_CAP.
inline int qubit_cap() {
    if (const char* env = std::getenv("SPECTROQSIM_DIM_CAP")) {
        try {
            int cap = std::stoi(env);
            if (cap > 0 && cap < 31) return cap;
        } catch (const std::exception&) {
        }
        throw ValidationError(std::string("SPECTROQSIM_DIM_CAP is not a valid qubit count: ") + env);
    }
    return 12;
}

inline void require_qubits_within_cap(int qubits) {
    if (qubits < 1) throw ValidationError("qubit count must be positive");
    if (qubits > qubit_cap())
        throw ResourceExhausted("dense operator on " + std::to_string(qubits) +
                                " qubits exceeds the cap of " + std::to_string(qubit_cap()));
}

/// Bit of basis index `index` that encodes qubit `qubit`. Qubit 0 is the
/// leftmost tensor factor, i.e. the most significant bit.
inline std::uint64_t qubit_mask(int qubit, int qubits) {
    return std::uint64_t{1} << (qubits - 1 - qubit);
}

inline int excitation_count(std::uint64_t index) { return std::popcount(index); }

/// Dense matrix of a Pauli string given as (qubit, pauli) factors.
/// Uses |0> = ground, Z|0> = +|0>, Y|0> = i|1>.
inline Matrix pauli_string(int qubits, const std::vector<std::pair<int, Pauli>>& factors) {
    const auto dim = std::int64_t{1} << qubits;
    std::uint64_t flip = 0;
    for (auto [q, p] : factors)
        if (p == Pauli::X || p == Pauli::Y) flip |= qubit_mask(q, qubits);
    Matrix out = Matrix::Zero(dim, dim);
    for (std::int64_t col = 0; col < dim; ++col) {
        cplx phase = 1.0;
        for (auto [q, p] : factors) {
            const bool one = (static_cast<std::uint64_t>(col) & qubit_mask(q, qubits)) != 0;
            switch (p) {
                case Pauli::Z: phase *= one ? -1.0 : 1.0; break;
                case Pauli::Y: phase *= one ? -I_unit : I_unit; break;
                default: break;
            }
        }
        out(static_cast<std::int64_t>(static_cast<std::uint64_t>(col) ^ flip), col) = phase;
    }
    return out;
}

inline Matrix single_qubit_op(int qubits, int qubit, Pauli p) { return pauli_string(qubits, {{qubit, p}}); }

/// Lowering operator |0><1| on one qubit, (X + iY)/2.
inline Matrix lowering_op(int qubits, int qubit) {
    const auto dim = std::int64_t{1} << qubits;
    Matrix out = Matrix::Zero(dim, dim);
    const auto mask = qubit_mask(qubit, qubits);
    for (std::int64_t col = 0; col < dim; ++col)
        if (static_cast<std::uint64_t>(col) & mask)
            out(static_cast<std::int64_t>(static_cast<std::uint64_t>(col) ^ mask), col) = 1.0;
    return out;
}

/// Total excitation number, diagonal popcount.
inline Matrix number_operator(int qubits) {
    const auto dim = std::int64_t{1} << qubits;
    Matrix out = Matrix::Zero(dim, dim);
    for (std::int64_t i = 0; i < dim; ++i) out(i, i) = excitation_count(static_cast<std::uint64_t>(i));
    return out;
}

inline double hermitian_defect(const Matrix& m) { return (m - m.adjoint()).cwiseAbs().maxCoeff(); }

inline bool is_power_of_two(std::int64_t n) { return n > 0 && (n & (n - 1)) == 0; }

inline int qubits_for_dimension(std::int64_t dim) {
    if (!is_power_of_two(dim)) throw ValidationError("dimension is not a power of two");
    return std::countr_zero(static_cast<std::uint64_t>(dim));
}

/// exp(-i H t) for Hermitian H by eigendecomposition.
inline Matrix unitary_propagator(const Matrix& h, double t) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(h);
    const Vector phases = (-I_unit * t * solver.eigenvalues().cast<cplx>()).array().exp();
    return solver.eigenvectors() * phases.asDiagonal() * solver.eigenvectors().adjoint();
}

inline double operator_norm(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()(0);
}

/// Kronecker product a (x) b with a as the leftmost factor.
inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

}  // namespace spectroqsim
