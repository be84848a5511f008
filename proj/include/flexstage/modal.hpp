#pragma once

#include <memory>

#include <Eigen/Core>

#include "flexstage/assembly.hpp"
#include "flexstage/eigensolver.hpp"

namespace flexstage {

/// Eigenfrequencies and mass-normalized mode shapes of an assembled structure.
struct ModalModel {
    Eigen::VectorXd frequencies;  ///< rad/s, ascending; rigid modes are exactly 0
    Eigen::MatrixXd shapes;       ///< n_dof x modes, shapes^T M shapes = I
    double total_mass = 0.0;      ///< translational mass seen by the rigid z mode
    int rigid_count = 0;
    std::shared_ptr<const Mesh> mesh;

    int mode_count() const { return static_cast<int>(frequencies.size()); }
    int flexible_count() const { return mode_count() - rigid_count; }
    /// Frequency of the k-th flexible mode (1-based), rad/s.
    double flexible_frequency(int k) const;
};

struct ModalOptions {
    EigenOptions eigen;
    double rigid_threshold_hz = 1.0;  ///< computed modes below this count as rigid
    /// With a mesh: project the exact rigid shapes (z, theta_x, theta_y, M-orthonormalized in
    /// that order) out of the iteration and prepend them as the first three modes. Any further
    /// zero-energy mode is still found and counted as rigid.
    bool deflate_rigid_modes = true;
    /// Without deflation: replace a 3-dimensional numerical null space by the same shapes.
    bool align_rigid_modes = true;
};

ModalModel solve_modes(const SystemMatrices& system, int n_modes, const ModalOptions& options = {});

/// Geometric rigid shapes of a free plate: {w=1}, {w=y, theta_x=1}, {w=-x, theta_y=1}.
Eigen::MatrixXd rigid_body_shapes(const Mesh& mesh);

}  // namespace flexstage
