#pragma once

#include <memory>
#include <numbers>
#include <random>
#include <vector>

#include "flexstage/assembly.hpp"
#include "flexstage/geometry.hpp"
#include "flexstage/mesh.hpp"
#include "flexstage/modal.hpp"

namespace testing {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline flexstage::GeometryInput uniform_plate(double side = 0.3, double thickness = 3e-3) {
    flexstage::GeometryInput in;
    in.side_x = side;
    in.side_y = side;
    in.params.base_thickness = thickness;
    in.rib_count_x = 0;
    in.rib_count_y = 0;
    return in;
}

/// Rib-stiffened square stage close to the first case study.
inline flexstage::GeometryInput ribbed_stage() {
    flexstage::GeometryInput in;
    in.side_x = 0.3;
    in.side_y = 0.3;
    in.rib_count_x = 4;
    in.rib_count_y = 4;
    in.params.base_thickness = 2e-3;
    in.params.rib_height = 15e-3;
    in.params.rib_width = 2e-3;
    in.params.rib_spacing_x = 0.08;
    in.params.rib_spacing_y = 0.08;
    return in;
}

inline flexstage::SystemMatrices assemble_input(const flexstage::GeometryInput& in, int resolution,
                                                const flexstage::AssemblyOptions& opt = {},
                                                const flexstage::MaterialSpec& mat = {}) {
    const auto g = flexstage::build_geometry(in);
    auto mesh = std::make_shared<const flexstage::Mesh>(flexstage::mesh_stage(g, resolution));
    return flexstage::assemble(mesh, mat, g.point_masses(), opt);
}

inline flexstage::ModalModel modes_of(const flexstage::GeometryInput& in, int resolution, int modes,
                                      const flexstage::AssemblyOptions& opt = {}) {
    return flexstage::solve_modes(assemble_input(in, resolution, opt), modes);
}

}  // namespace testing
