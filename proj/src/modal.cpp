#include "flexstage/modal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "flexstage/errors.hpp"

namespace flexstage {

double ModalModel::flexible_frequency(int k) const {
    const int idx = rigid_count + k - 1;
    if (k < 1 || idx >= mode_count()) throw InputError("flexible mode index out of range");
    return frequencies(idx);
}

Eigen::MatrixXd rigid_body_shapes(const Mesh& mesh) {
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(mesh.dof_count(), 3);
    for (int n = 0; n < mesh.node_count(); ++n) {
        const auto& p = mesh.nodes[n];
        r(kDofsPerNode * n + dof_w, 0) = 1.0;
        r(kDofsPerNode * n + dof_w, 1) = p.y;
        r(kDofsPerNode * n + dof_theta_x, 1) = 1.0;
        r(kDofsPerNode * n + dof_w, 2) = -p.x;
        r(kDofsPerNode * n + dof_theta_y, 2) = 1.0;
    }
    return r;
}

namespace {

// Modified Gram-Schmidt in the M inner product, in place, two passes.
void m_orthonormalize(Eigen::MatrixXd& x, const SparseMatrix& m, int first) {
    for (int c = first; c < x.cols(); ++c) {
        for (int pass = 0; pass < 2; ++pass) {
            for (int p = 0; p < c; ++p) {
                const double coef = x.col(p).dot(m * x.col(c));
                x.col(c) -= coef * x.col(p);
            }
        }
        const double norm = std::sqrt(x.col(c).dot(m * x.col(c)));
        if (!(norm > 0.0)) throw NumericalError("mode shapes lost M-orthogonality");
        x.col(c) /= norm;
    }
}

}  // namespace

ModalModel solve_modes(const SystemMatrices& sys, int n_modes, const ModalOptions& options) {
    const int n = sys.dof_count();
    if (n_modes < 1 || n_modes > n) throw InputError("solve_modes: n_modes must lie in [1, n_FE]");

    ModalModel model;
    model.mesh = sys.mesh;
    const double rigid_omega = 2.0 * std::numbers::pi * options.rigid_threshold_hz;

    const bool deflate = sys.mesh && options.deflate_rigid_modes;
    Eigen::MatrixXd rigid;
    if (deflate) {
        rigid = rigid_body_shapes(*sys.mesh);
        m_orthonormalize(rigid, sys.mass, 0);
    }
    const int n_rigid = deflate ? std::min<int>(3, n_modes) : 0;
    model.frequencies = Eigen::VectorXd::Zero(n_modes);
    model.shapes.resize(n, n_modes);
    if (n_rigid > 0) model.shapes.leftCols(n_rigid) = rigid.leftCols(n_rigid);
    model.rigid_count = n_rigid;

    if (n_modes > n_rigid) {
        EigenPairs pairs = lowest_eigenpairs(sys.stiffness, sys.mass, n_modes - n_rigid,
                                             options.eigen, deflate ? rigid : Eigen::MatrixXd());
        for (int i = 0; i < pairs.values.size(); ++i) {
            const double lambda = pairs.values(i);
            const double omega = lambda > 0.0 ? std::sqrt(lambda) : 0.0;
            if (omega < rigid_omega) {
                ++model.rigid_count;
            } else {
                model.frequencies(n_rigid + i) = omega;
            }
        }
        model.shapes.rightCols(n_modes - n_rigid) = pairs.vectors;
    }

    if (!deflate && sys.mesh && options.align_rigid_modes && model.rigid_count == 3) {
        model.shapes.leftCols(3) = rigid_body_shapes(*sys.mesh);
        m_orthonormalize(model.shapes, sys.mass, 0);
    }

    for (int i = model.rigid_count; i < n_modes; ++i) {
        Eigen::Index arg = 0;
        model.shapes.col(i).cwiseAbs().maxCoeff(&arg);
        if (model.shapes(arg, i) < 0.0) model.shapes.col(i) *= -1.0;
    }

    if (sys.mesh) {
        model.total_mass = translational_mass(sys);
    } else {
        const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
        model.total_mass = ones.dot(sys.mass * ones);
    }
    return model;
}

}  // namespace flexstage
