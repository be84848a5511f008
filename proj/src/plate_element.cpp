#include "flexstage/plate_element.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/LU>

#include "flexstage/errors.hpp"

namespace flexstage {

namespace {

constexpr std::array<double, 4> kXiNode = {-1.0, 1.0, 1.0, -1.0};
constexpr std::array<double, 4> kEtaNode = {-1.0, -1.0, 1.0, 1.0};
constexpr double kShearCorrection = 5.0 / 6.0;

using Matrix2x12 = Eigen::Matrix<double, 2, 12>;
using Matrix3x12 = Eigen::Matrix<double, 3, 12>;

struct ShapeAt {
    Eigen::Vector4d n;
    Eigen::Vector4d dx;  // dN/dx
    Eigen::Vector4d dy;  // dN/dy
    Eigen::Matrix2d jac;
    double det = 0.0;
};

ShapeAt shape_at(const std::array<Point2, 4>& c, double xi, double eta) {
    ShapeAt s;
    Eigen::Vector4d dxi, deta;
    for (int i = 0; i < 4; ++i) {
        s.n(i) = 0.25 * (1 + xi * kXiNode[i]) * (1 + eta * kEtaNode[i]);
        dxi(i) = 0.25 * kXiNode[i] * (1 + eta * kEtaNode[i]);
        deta(i) = 0.25 * kEtaNode[i] * (1 + xi * kXiNode[i]);
    }
    s.jac.setZero();
    for (int i = 0; i < 4; ++i) {
        s.jac(0, 0) += dxi(i) * c[i].x;
        s.jac(0, 1) += dxi(i) * c[i].y;
        s.jac(1, 0) += deta(i) * c[i].x;
        s.jac(1, 1) += deta(i) * c[i].y;
    }
    s.det = s.jac.determinant();
    if (!(s.det > 0.0)) throw InputError("singular element geometry (non-positive Jacobian)");
    const Eigen::Matrix2d inv = s.jac.inverse();
    for (int i = 0; i < 4; ++i) {
        s.dx(i) = inv(0, 0) * dxi(i) + inv(0, 1) * deta(i);
        s.dy(i) = inv(1, 0) * dxi(i) + inv(1, 1) * deta(i);
    }
    return s;
}

Matrix3x12 bending_b(const ShapeAt& s) {
    Matrix3x12 b = Matrix3x12::Zero();
    for (int i = 0; i < 4; ++i) {
        b(0, 3 * i + 2) = s.dx(i);
        b(1, 3 * i + 1) = -s.dy(i);
        b(2, 3 * i + 1) = -s.dx(i);
        b(2, 3 * i + 2) = s.dy(i);
    }
    return b;
}

// Cartesian transverse shear (gamma_xz, gamma_yz) = (w,x + theta_y, w,y - theta_x).
Matrix2x12 shear_b(const ShapeAt& s) {
    Matrix2x12 b = Matrix2x12::Zero();
    for (int i = 0; i < 4; ++i) {
        b(0, 3 * i) = s.dx(i);
        b(0, 3 * i + 2) = s.n(i);
        b(1, 3 * i) = s.dy(i);
        b(1, 3 * i + 1) = -s.n(i);
    }
    return b;
}

Matrix2x12 covariant_shear_b(const std::array<Point2, 4>& c, double xi, double eta) {
    const ShapeAt s = shape_at(c, xi, eta);
    return s.jac * shear_b(s);
}

}  // namespace

double rib_twist_factor(double width, double thickness) {
    if (!(width > 0.0) || !(thickness > 0.0)) return 1.0;
    const double a = std::max(width, thickness);
    const double c = std::min(width, thickness);
    const double r = c / a;
    const double j = a * c * c * c * (1.0 / 3.0 - 0.21 * r * (1.0 - std::pow(r, 4) / 12.0));
    return std::min(1.0, j / (width * thickness * thickness * thickness / 3.0));
}

ElementMatrices plate_element(const std::array<Point2, 4>& c, const PlateSection& section,
                              const MaterialSpec& mat, ShearTreatment shear) {
    const double t = section.thickness;
    if (!(t > 0.0)) throw InputError("element thickness must be positive");

    const double nu = mat.poisson_ratio;
    const double d = mat.youngs_modulus * t * t * t / (12.0 * (1.0 - nu * nu));
    Eigen::Matrix3d db;
    db << d, d * nu, 0, d * nu, d, 0, 0, 0, d * 0.5 * (1.0 - nu) * section.twist_factor;
    const double ds = kShearCorrection * mat.shear_modulus() * t;
    const double rho_t = mat.density * t;
    const double rho_i = mat.density * t * t * t / 12.0;

    // MITC4 tying points: gamma_xi at (0,+-1), gamma_eta at (+-1,0).
    Matrix2x12 tie_a, tie_c, tie_b, tie_d;
    if (shear == ShearTreatment::mitc4) {
        tie_a = covariant_shear_b(c, 0.0, 1.0);
        tie_c = covariant_shear_b(c, 0.0, -1.0);
        tie_d = covariant_shear_b(c, 1.0, 0.0);
        tie_b = covariant_shear_b(c, -1.0, 0.0);
    }

    ElementMatrices out;
    out.stiffness.setZero();
    out.mass.setZero();
    const double g = 1.0 / std::sqrt(3.0);
    for (double eta : {-g, g}) {
        for (double xi : {-g, g}) {
            const ShapeAt s = shape_at(c, xi, eta);
            const Matrix3x12 bb = bending_b(s);
            out.stiffness.noalias() += bb.transpose() * db * bb * s.det;

            if (shear == ShearTreatment::mitc4) {
                Matrix2x12 cov;
                cov.row(0) = 0.5 * (1 + eta) * tie_a.row(0) + 0.5 * (1 - eta) * tie_c.row(0);
                cov.row(1) = 0.5 * (1 + xi) * tie_d.row(1) + 0.5 * (1 - xi) * tie_b.row(1);
                const Matrix2x12 bs = s.jac.inverse() * cov;
                out.stiffness.noalias() += ds * bs.transpose() * bs * s.det;
            }

            for (int i = 0; i < 4; ++i) {
                for (int j = 0; j < 4; ++j) {
                    const double nn = s.n(i) * s.n(j) * s.det;
                    out.mass(3 * i, 3 * j) += rho_t * nn;
                    out.mass(3 * i + 1, 3 * j + 1) += rho_i * nn;
                    out.mass(3 * i + 2, 3 * j + 2) += rho_i * nn;
                }
            }
        }
    }
    if (shear == ShearTreatment::selective_reduced) {
        const ShapeAt s = shape_at(c, 0.0, 0.0);
        const Matrix2x12 bs = shear_b(s);
        out.stiffness.noalias() += 4.0 * ds * bs.transpose() * bs * s.det;
    }
    out.stiffness = 0.5 * (out.stiffness + out.stiffness.transpose()).eval();
    return out;
}

}  // namespace flexstage
