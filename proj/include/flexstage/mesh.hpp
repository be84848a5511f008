#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "flexstage/geometry.hpp"

namespace flexstage {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

inline constexpr int kDofsPerNode = 3;  // w, theta_x, theta_y
enum DofComponent : int { dof_w = 0, dof_theta_x = 1, dof_theta_y = 2 };

/// Structured, conforming mesh of 4-node quadrilaterals on a tensor grid of lines.
/// Grid lines include every rib edge so rib footprints are unions of whole elements.
/// Node (i, j) sits at (x_lines[i], y_lines[j]) and has index j * x_lines.size() + i.
struct Mesh {
    std::vector<double> x_lines;
    std::vector<double> y_lines;
    std::vector<Point2> nodes;
    std::vector<std::array<int, 4>> elements;  // counter-clockwise
    std::vector<double> element_thickness;
    std::vector<int> element_rib_mask;  // see StageGeometry::rib_mask_at
    double rib_width = 0.0;             // for rib torsion correction

    int nx() const { return static_cast<int>(x_lines.size()); }
    int ny() const { return static_cast<int>(y_lines.size()); }
    int node_count() const { return static_cast<int>(nodes.size()); }
    int element_count() const { return static_cast<int>(elements.size()); }
    int dof_count() const { return kDofsPerNode * node_count(); }
    int node_index(int i, int j) const { return j * nx() + i; }

    /// Element containing (x, y) and the natural coordinates there. Throws outside the mesh.
    struct Location {
        int element = -1;
        double xi = 0.0;
        double eta = 0.0;
    };
    Location locate(double x, double y) const;

    /// Node at (x, y) within `tol`, or -1.
    int find_node(double x, double y, double tol = 1e-9) const;
};

/// Builds a structured mesh with `resolution` uniform divisions per side plus rib edges.
/// Uniform lines closer than a third of a division to a rib edge are dropped.
Mesh mesh_stage(const StageGeometry& geometry, int resolution);

/// Writes `<stem>_nodes.csv` (id,x,y) and `<stem>_elements.csv` (id,n1,n2,n3,n4,thickness).
void write_mesh_csv(const Mesh& mesh, const std::filesystem::path& stem);

}  // namespace flexstage
