#include "flexstage/assembly.hpp"

#include <cmath>
#include <map>
#include <tuple>
#include <vector>

#include "flexstage/errors.hpp"

namespace flexstage {

namespace {

int nearest_line(const std::vector<double>& lines, double v) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(lines.size()); ++i)
        if (std::abs(lines[i] - v) < std::abs(lines[best] - v)) best = i;
    return best;
}

}  // namespace

SystemMatrices assemble(std::shared_ptr<const Mesh> mesh, const MaterialSpec& material,
                        std::span<const PointMass> point_masses, const AssemblyOptions& options) {
    if (!mesh || mesh->element_count() == 0) throw InputError("assemble: empty mesh");
    material.validate();

    const int n = mesh->dof_count();
    std::vector<Eigen::Triplet<double>> kt, mt;
    kt.reserve(static_cast<std::size_t>(mesh->element_count()) * 144);
    mt.reserve(static_cast<std::size_t>(mesh->element_count()) * 48 + point_masses.size() * 3);

    // Structured grids repeat a handful of element shapes; matrices depend only on the
    // edge lengths and section, so they are computed once per distinct key.
    using Key = std::tuple<double, double, double, double>;
    std::map<Key, ElementMatrices> cache;

    for (int e = 0; e < mesh->element_count(); ++e) {
        const auto& conn = mesh->elements[e];
        std::array<Point2, 4> corners;
        for (int a = 0; a < 4; ++a) corners[a] = mesh->nodes[conn[a]];

        PlateSection section{mesh->element_thickness[e], 1.0};
        if (options.rib_torsion_correction && mesh->element_rib_mask[e] != 0)
            section.twist_factor = rib_twist_factor(mesh->rib_width, section.thickness);

        const Key key{corners[1].x - corners[0].x, corners[3].y - corners[0].y, section.thickness,
                      section.twist_factor};
        auto it = cache.find(key);
        if (it == cache.end()) {
            const std::array<Point2, 4> local{Point2{0.0, 0.0}, Point2{std::get<0>(key), 0.0},
                                              Point2{std::get<0>(key), std::get<1>(key)},
                                              Point2{0.0, std::get<1>(key)}};
            it = cache.emplace(key, plate_element(local, section, material, options.shear)).first;
        }
        const ElementMatrices& em = it->second;
        for (int a = 0; a < 4; ++a) {
            for (int b = 0; b < 4; ++b) {
                for (int p = 0; p < kDofsPerNode; ++p) {
                    for (int q = 0; q < kDofsPerNode; ++q) {
                        const int r = kDofsPerNode * conn[a] + p;
                        const int s = kDofsPerNode * conn[b] + q;
                        const double kv = em.stiffness(3 * a + p, 3 * b + q);
                        if (kv != 0.0) kt.emplace_back(r, s, kv);
                        const double mv = em.mass(3 * a + p, 3 * b + q);
                        if (mv != 0.0) mt.emplace_back(r, s, mv);
                    }
                }
            }
        }
    }

    for (const auto& pm : point_masses) {
        const int node = mesh->node_index(nearest_line(mesh->x_lines, pm.x),
                                          nearest_line(mesh->y_lines, pm.y));
        mt.emplace_back(kDofsPerNode * node + dof_w, kDofsPerNode * node + dof_w, pm.mass);
        if (pm.rotary_inertia > 0.0) {
            mt.emplace_back(kDofsPerNode * node + dof_theta_x, kDofsPerNode * node + dof_theta_x,
                            pm.rotary_inertia);
            mt.emplace_back(kDofsPerNode * node + dof_theta_y, kDofsPerNode * node + dof_theta_y,
                            pm.rotary_inertia);
        }
    }

    SystemMatrices sys;
    sys.mesh = std::move(mesh);
    sys.stiffness.resize(n, n);
    sys.mass.resize(n, n);
    sys.stiffness.setFromTriplets(kt.begin(), kt.end());
    sys.mass.setFromTriplets(mt.begin(), mt.end());
    sys.stiffness.makeCompressed();
    sys.mass.makeCompressed();
    return sys;
}

double translational_mass(const SystemMatrices& sys) {
    double total = 0.0;
    for (int col = 0; col < sys.mass.outerSize(); ++col) {
        if (col % kDofsPerNode != dof_w) continue;
        for (SparseMatrix::InnerIterator it(sys.mass, col); it; ++it)
            if (it.row() % kDofsPerNode == dof_w) total += it.value();
    }
    return total;
}

}  // namespace flexstage
