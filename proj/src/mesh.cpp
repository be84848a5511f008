#include "flexstage/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "flexstage/errors.hpp"
#include "flexstage/format.hpp"

namespace flexstage {

namespace {

std::vector<double> grid_lines(double side, int resolution, const std::vector<double>& centres,
                               double width) {
    const double h = side / resolution;
    const double half = 0.5 * side;
    std::vector<double> edges;
    for (double c : centres) {
        edges.push_back(std::clamp(c - 0.5 * width, -half, half));
        edges.push_back(std::clamp(c + 0.5 * width, -half, half));
    }
    std::vector<double> lines = edges;
    const double min_gap = h / 3.0;
    for (int i = 0; i <= resolution; ++i) {
        const double x = (i - 0.5 * resolution) * h;
        const bool boundary = (i == 0 || i == resolution);
        const bool crowded = std::any_of(edges.begin(), edges.end(), [&](double e) {
            return std::abs(e - x) < min_gap;
        });
        // Edges that land on the boundary are merged into it below.
        if (boundary || !crowded) lines.push_back(x);
    }
    std::sort(lines.begin(), lines.end());
    const double merge_tol = 1e-9 * side;
    std::vector<double> out;
    for (double x : lines) {
        if (!out.empty() && std::abs(x - out.back()) < merge_tol) {
            if (std::abs(std::abs(x) - half) < merge_tol) out.back() = x;
            continue;
        }
        out.push_back(x);
    }
    out.front() = -half;
    out.back() = half;
    return out;
}

int interval_of(const std::vector<double>& lines, double v) {
    auto it = std::upper_bound(lines.begin(), lines.end(), v);
    int i = static_cast<int>(it - lines.begin()) - 1;
    return std::clamp(i, 0, static_cast<int>(lines.size()) - 2);
}

}  // namespace

Mesh mesh_stage(const StageGeometry& g, int resolution) {
    if (resolution < 4) throw InputError("mesh resolution must be at least 4 elements per side");
    if (resolution < g.rib_count_x() + 1 || resolution < g.rib_count_y() + 1)
        throw InputError("mesh resolution too coarse to resolve the rib layout");

    const auto& p = g.params();
    Mesh mesh;
    mesh.rib_width = p.rib_width;
    mesh.x_lines = grid_lines(g.side_x(), resolution, g.rib_centers_x(), p.rib_width);
    mesh.y_lines = grid_lines(g.side_y(), resolution, g.rib_centers_y(), p.rib_width);

    const int nx = mesh.nx();
    const int ny = mesh.ny();
    mesh.nodes.reserve(static_cast<std::size_t>(nx * ny));
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) mesh.nodes.push_back({mesh.x_lines[i], mesh.y_lines[j]});

    for (int j = 0; j + 1 < ny; ++j) {
        for (int i = 0; i + 1 < nx; ++i) {
            mesh.elements.push_back({mesh.node_index(i, j), mesh.node_index(i + 1, j),
                                     mesh.node_index(i + 1, j + 1), mesh.node_index(i, j + 1)});
            const double cx = 0.5 * (mesh.x_lines[i] + mesh.x_lines[i + 1]);
            const double cy = 0.5 * (mesh.y_lines[j] + mesh.y_lines[j + 1]);
            const int mask = g.rib_mask_at(cx, cy);
            mesh.element_rib_mask.push_back(mask);
            mesh.element_thickness.push_back(p.base_thickness + (mask ? p.rib_height : 0.0));
        }
    }
    return mesh;
}

Mesh::Location Mesh::locate(double x, double y) const {
    const double tol = 1e-12 * (1.0 + std::abs(x_lines.back()) + std::abs(y_lines.back()));
    if (x < x_lines.front() - tol || x > x_lines.back() + tol || y < y_lines.front() - tol ||
        y > y_lines.back() + tol)
        throw InputError("location outside planform");
    const int i = interval_of(x_lines, x);
    const int j = interval_of(y_lines, y);
    Location loc;
    loc.element = j * (nx() - 1) + i;
    loc.xi = std::clamp(2.0 * (x - x_lines[i]) / (x_lines[i + 1] - x_lines[i]) - 1.0, -1.0, 1.0);
    loc.eta = std::clamp(2.0 * (y - y_lines[j]) / (y_lines[j + 1] - y_lines[j]) - 1.0, -1.0, 1.0);
    return loc;
}

int Mesh::find_node(double x, double y, double tol) const {
    auto nearest = [tol](const std::vector<double>& lines, double v) {
        auto it = std::lower_bound(lines.begin(), lines.end(), v - tol);
        if (it != lines.end() && std::abs(*it - v) <= tol) return static_cast<int>(it - lines.begin());
        return -1;
    };
    const int i = nearest(x_lines, x);
    const int j = nearest(y_lines, y);
    return (i < 0 || j < 0) ? -1 : node_index(i, j);
}

void write_mesh_csv(const Mesh& mesh, const std::filesystem::path& stem) {
    std::ofstream nodes(stem.string() + "_nodes.csv");
    if (!nodes) throw InputError("cannot open mesh output " + stem.string() + "_nodes.csv");
    nodes << "id,x,y\n";
    for (int n = 0; n < mesh.node_count(); ++n)
        nodes << n << ',' << fmt_double(mesh.nodes[n].x) << ',' << fmt_double(mesh.nodes[n].y)
              << '\n';
    std::ofstream elems(stem.string() + "_elements.csv");
    if (!elems) throw InputError("cannot open mesh output " + stem.string() + "_elements.csv");
    elems << "id,n1,n2,n3,n4,thickness\n";
    for (int e = 0; e < mesh.element_count(); ++e) {
        const auto& c = mesh.elements[e];
        elems << e << ',' << c[0] << ',' << c[1] << ',' << c[2] << ',' << c[3] << ','
              << fmt_double(mesh.element_thickness[e]) << '\n';
    }
}

}  // namespace flexstage
