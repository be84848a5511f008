#pragma once

#include <cstdint>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace flexstage {

struct EigenOptions {
    /// Systems at or below this size use the dense generalized solver.
    int dense_threshold = 400;
    int block_size = 4;
    /// Spectral shift of the shift-invert operator (K - shift M)^-1 M, rad^2/s^2.
    /// Negative so the factorized matrix stays positive definite for a free structure.
    double shift = -3947.8417604357433;  // -(2 pi 10 Hz)^2
    double tolerance = 1e-8;
    std::uint64_t seed = 1;
};

struct EigenPairs {
    Eigen::VectorXd values;   ///< ascending generalized eigenvalues
    Eigen::MatrixXd vectors;  ///< M-orthonormal columns
};

/// Lowest `count` eigenpairs of K x = lambda M x for symmetric K (PSD) and M (SPD).
/// `deflation`, when non-empty, holds M-orthonormal columns spanning an invariant subspace
/// (e.g. the exact rigid-body null space); the returned pairs are M-orthogonal to it.
EigenPairs lowest_eigenpairs(const Eigen::SparseMatrix<double>& stiffness,
                             const Eigen::SparseMatrix<double>& mass, int count,
                             const EigenOptions& options = {},
                             const Eigen::MatrixXd& deflation = Eigen::MatrixXd());

/// All eigenpairs through the dense generalized solver.
EigenPairs dense_eigenpairs(const Eigen::MatrixXd& stiffness, const Eigen::MatrixXd& mass);

}  // namespace flexstage
