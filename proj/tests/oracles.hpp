#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "flexstage/geometry.hpp"

// Independent reference computations shared by the unit and acceptance tests.
namespace oracle {

// Controllability grammian of x' = A x + B u by the Kronecker form of A W + W A^T + B B^T = 0.
inline Eigen::MatrixXd lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    const int n = static_cast<int>(a.rows());
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd op = Eigen::MatrixXd::Zero(n * n, n * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            op.block(i * n, j * n, n, n) += id(i, j) * a;  // I (x) A
            op.block(i * n, j * n, n, n) += a(i, j) * id;  // A (x) I
        }
    const Eigen::MatrixXd q = b * b.transpose();
    const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(q.data(), n * n);
    const Eigen::VectorXd x = op.fullPivLu().solve(rhs);
    return Eigen::Map<const Eigen::MatrixXd>(x.data(), n, n);
}

// Kirchhoff free square plate on [-a/2, a/2]^2 by Rayleigh-Ritz with tensor Legendre
// polynomials, which span the free-free rigid motions and satisfy no forced boundary condition.
struct Legendre1d {
    Eigen::MatrixXd e00, e11, e22, e20;  // int P_i P_j, P_i' P_j', P_i'' P_j'', P_i'' P_j on [-1, 1]
};

inline Legendre1d legendre_integrals(int degree) {
    const int nq = degree + 4;
    // Golub-Welsch nodes and weights.
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(nq, nq);
    for (int k = 1; k < nq; ++k) {
        const double b = k / std::sqrt(4.0 * k * k - 1.0);
        jac(k, k - 1) = jac(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
    const Eigen::VectorXd x = es.eigenvalues();
    const Eigen::VectorXd w = 2.0 * es.eigenvectors().row(0).transpose().array().square();

    const int n = degree + 1;
    Eigen::MatrixXd p(nq, n), dp(nq, n), ddp(nq, n);
    for (int q = 0; q < nq; ++q) {
        p(q, 0) = 1.0;
        dp(q, 0) = 0.0;
        ddp(q, 0) = 0.0;
        if (n > 1) {
            p(q, 1) = x(q);
            dp(q, 1) = 1.0;
            ddp(q, 1) = 0.0;
        }
        for (int k = 1; k + 1 < n; ++k) {
            p(q, k + 1) = ((2 * k + 1) * x(q) * p(q, k) - k * p(q, k - 1)) / (k + 1);
            dp(q, k + 1) = dp(q, k - 1) + (2 * k + 1) * p(q, k);
            ddp(q, k + 1) = ddp(q, k - 1) + (2 * k + 1) * dp(q, k);
        }
    }
    Legendre1d out;
    const Eigen::MatrixXd wd = w.asDiagonal();
    out.e00 = p.transpose() * wd * p;
    out.e11 = dp.transpose() * wd * dp;
    out.e22 = ddp.transpose() * wd * ddp;
    out.e20 = ddp.transpose() * wd * p;
    return out;
}

inline Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd k(a.rows() * b.rows(), a.cols() * b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return k;
}

/// First elastic circular frequency (rad/s).
inline double rayleigh_ritz_first_elastic(double side, double h, const flexstage::MaterialSpec& mat, int degree) {
    const Legendre1d l = legendre_integrals(degree);
    const double s = 2.0 / side;  // d/dx = s d/dxi
    const double jac = (side / 2.0) * (side / 2.0);
    const double d = mat.youngs_modulus * h * h * h / (12.0 * (1.0 - mat.poisson_ratio * mat.poisson_ratio));
    const double nu = mat.poisson_ratio;
    const double s4 = s * s * s * s;
    Eigen::MatrixXd cross = kron(l.e20, l.e20.transpose());
    cross = 0.5 * (cross + cross.transpose()).eval();
    const Eigen::MatrixXd k =
        d * jac * s4 *
        (kron(l.e22, l.e00) + kron(l.e00, l.e22) + 2.0 * nu * cross + 2.0 * (1.0 - nu) * kron(l.e11, l.e11));
    const Eigen::MatrixXd m = mat.density * h * jac * kron(l.e00, l.e00);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(k, m);
    const Eigen::VectorXd ev = es.eigenvalues();
    const double top = ev.cwiseAbs().maxCoeff();
    for (int i = 0; i < ev.size(); ++i)
        if (ev(i) > 1e-9 * top) return std::sqrt(ev(i));
    return 0.0;
}

}  // namespace oracle
