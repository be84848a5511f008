#pragma once

#include <array>

#include <Eigen/Core>

#include "flexstage/geometry.hpp"
#include "flexstage/mesh.hpp"

namespace flexstage {

/// How the transverse shear energy of the 4-node Mindlin element is integrated.
enum class ShearTreatment {
    mitc4,              ///< assumed covariant shear strains tied at edge midpoints
    selective_reduced,  ///< one-point shear quadrature; has a w-hourglass mode on free meshes
};

struct PlateSection {
    double thickness = 0.0;
    /// Multiplies the twisting term of the bending rigidity (1 for a plain plate).
    double twist_factor = 1.0;
};

using Matrix12d = Eigen::Matrix<double, 12, 12>;

struct ElementMatrices {
    Matrix12d stiffness;
    Matrix12d mass;
};

/// Stiffness and consistent mass of a 4-node Mindlin plate element.
/// Nodal DOFs are (w, theta_x, theta_y); theta_x rotates about +x, so w = y * theta_x is rigid.
ElementMatrices plate_element(const std::array<Point2, 4>& corners, const PlateSection& section,
                              const MaterialSpec& material, ShearTreatment shear);

/// Ratio of the torsion constant of a solid width x thickness rectangle to the
/// thin-plate value width * thickness^3 / 3. Tends to 1 for wide strips and to
/// (width / thickness)^2 for tall, narrow ribs.
double rib_twist_factor(double width, double thickness);

}  // namespace flexstage
