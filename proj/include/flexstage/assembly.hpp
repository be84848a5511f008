#pragma once

#include <memory>
#include <span>

#include <Eigen/SparseCore>

#include "flexstage/geometry.hpp"
#include "flexstage/mesh.hpp"
#include "flexstage/plate_element.hpp"

namespace flexstage {

using SparseMatrix = Eigen::SparseMatrix<double>;

struct AssemblyOptions {
    ShearTreatment shear = ShearTreatment::mitc4;
    /// Reduce the twisting rigidity on rib footprints to the open-section torsion value.
    bool rib_torsion_correction = true;
};

/// Global mass and stiffness of the free plate. `mesh` may be null for hand-built systems.
struct SystemMatrices {
    SparseMatrix mass;
    SparseMatrix stiffness;
    std::shared_ptr<const Mesh> mesh;

    int dof_count() const { return static_cast<int>(mass.rows()); }
};

/// Assembles the plate. Point masses lump onto the nearest node: mass on w,
/// rotary inertia on both rotations.
SystemMatrices assemble(std::shared_ptr<const Mesh> mesh, const MaterialSpec& material,
                        std::span<const PointMass> point_masses,
                        const AssemblyOptions& options = {});

/// Sum of the translational block of M (the row-sum lumped mass over all w DOFs).
double translational_mass(const SystemMatrices& system);

}  // namespace flexstage
