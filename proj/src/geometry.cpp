#include "flexstage/geometry.hpp"

#include <cmath>
#include <sstream>

#include "flexstage/errors.hpp"

namespace flexstage {

void MaterialSpec::validate() const {
    if (!(youngs_modulus > 0.0)) throw InputError("material: youngs_modulus must be positive");
    if (!(poisson_ratio >= 0.0 && poisson_ratio < 0.5))
        throw InputError("material: poisson_ratio must lie in [0, 0.5)");
    if (!(density > 0.0)) throw InputError("material: density must be positive");
}

std::array<double, GeometryParams::size> GeometryParams::to_array() const {
    return {base_thickness, rib_height, rib_width, rib_spacing_x, rib_spacing_y};
}

GeometryParams GeometryParams::from_array(const std::array<double, size>& v) {
    return {v[0], v[1], v[2], v[3], v[4]};
}

const std::array<const char*, GeometryParams::size>& GeometryParams::names() {
    static const std::array<const char*, size> n = {
        "base_thickness", "rib_height", "rib_width", "rib_spacing_x", "rib_spacing_y"};
    return n;
}

void GeometryBounds::validate() const {
    const auto lo = min.to_array();
    const auto hi = max.to_array();
    for (std::size_t i = 0; i < GeometryParams::size; ++i) {
        const std::string name = GeometryParams::names()[i];
        if (!(lo[i] > 0.0)) throw InputError("bounds: " + name + " minimum must be positive");
        if (lo[i] > hi[i]) throw InputError("bounds: " + name + " minimum exceeds maximum");
    }
    if (min.base_thickness < kMinFeatureSize - 1e-15)
        throw InputError("bounds: base_thickness minimum below manufacturability bound (1 mm)");
    if (min.rib_width < kMinFeatureSize - 1e-15)
        throw InputError("bounds: rib_width minimum below manufacturability bound (1 mm)");
}

std::vector<double> centred_positions(int count, double pitch) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(std::max(count, 0)));
    for (int k = 0; k < count; ++k) out.push_back((k - 0.5 * (count - 1)) * pitch);
    return out;
}

std::vector<double> StageGeometry::rib_centers_x() const {
    return centred_positions(in_.rib_count_x, in_.params.rib_spacing_x);
}

std::vector<double> StageGeometry::rib_centers_y() const {
    return centred_positions(in_.rib_count_y, in_.params.rib_spacing_y);
}

bool StageGeometry::inside_planform(double x, double y, double tol) const {
    return std::abs(x) <= 0.5 * in_.side_x + tol && std::abs(y) <= 0.5 * in_.side_y + tol;
}

int StageGeometry::rib_mask_at(double x, double y) const {
    const double half = 0.5 * in_.params.rib_width;
    int mask = 0;
    for (double c : rib_centers_x())
        if (std::abs(x - c) < half) mask |= 1;
    for (double c : rib_centers_y())
        if (std::abs(y - c) < half) mask |= 2;
    return mask;
}

namespace {

void check_rib_family(int count, double pitch, double width, double side, const char* axis) {
    if (count < 0) throw InputError(std::string("rib count along ") + axis + " is negative");
    if (count == 0) return;
    if (width > side) throw InputError("rib footprint exceeds planform");
    const double outer = 0.5 * (count - 1) * pitch + 0.5 * width;
    if (outer > 0.5 * side * (1.0 + 1e-12)) throw InputError("rib footprint exceeds planform");
    if (count > 1 && pitch < width * (1.0 + 1e-12))
        throw InputError(std::string("ribs overlap: spacing along ") + axis +
                         " smaller than rib width");
}

}  // namespace

StageGeometry build_geometry(const GeometryInput& in, const GeometryBounds* bounds) {
    if (!(in.side_x > 0.0) || !(in.side_y > 0.0)) throw InputError("plate sides must be positive");
    const auto values = in.params.to_array();
    for (std::size_t i = 0; i < values.size(); ++i)
        if (!(values[i] > 0.0))
            throw InputError(std::string(GeometryParams::names()[i]) + " must be positive");

    if (in.params.base_thickness < kMinFeatureSize - 1e-15)
        throw InputError("base thickness below manufacturability bound");
    if ((in.rib_count_x > 0 || in.rib_count_y > 0) && in.params.rib_width < kMinFeatureSize - 1e-15)
        throw InputError("rib width below manufacturability bound");

    check_rib_family(in.rib_count_x, in.params.rib_spacing_x, in.params.rib_width, in.side_x, "x");
    check_rib_family(in.rib_count_y, in.params.rib_spacing_y, in.params.rib_width, in.side_y, "y");

    if (bounds) {
        const auto lo = bounds->min.to_array();
        const auto hi = bounds->max.to_array();
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double slack = 1e-12 * std::max(1.0, std::abs(hi[i]));
            if (values[i] < lo[i] - slack || values[i] > hi[i] + slack) {
                std::ostringstream os;
                os << "parameter out of bounds: " << GeometryParams::names()[i] << " = "
                   << values[i] << " not in [" << lo[i] << ", " << hi[i] << "]";
                throw InputError(os.str());
            }
        }
    }

    for (const auto& pm : in.point_masses) {
        if (!(pm.mass >= 0.0) || !(pm.rotary_inertia >= 0.0))
            throw InputError("point mass and rotary inertia must be non-negative");
        if (std::abs(pm.x) > 0.5 * in.side_x * (1 + 1e-12) ||
            std::abs(pm.y) > 0.5 * in.side_y * (1 + 1e-12))
            throw InputError("point mass location outside planform");
    }
    return StageGeometry(in);
}

double structural_volume(const StageGeometry& g) {
    const auto& p = g.params();
    const double base = g.side_x() * g.side_y() * p.base_thickness;
    const double ribs_along_y = g.rib_count_x() * p.rib_width * g.side_y() * p.rib_height;
    const double ribs_along_x = g.rib_count_y() * p.rib_width * g.side_x() * p.rib_height;
    const double overlap =
        g.rib_count_x() * g.rib_count_y() * p.rib_width * p.rib_width * p.rib_height;
    return base + ribs_along_y + ribs_along_x - overlap;
}

double total_mass(const StageGeometry& g, const MaterialSpec& material) {
    double m = material.density * structural_volume(g);
    for (const auto& pm : g.point_masses()) m += pm.mass;
    return m;
}

}  // namespace flexstage
