#pragma once

#include <array>
#include <string>
#include <vector>

namespace flexstage {

/// Manufacturability floor for base thickness and rib width [m].
inline constexpr double kMinFeatureSize = 1.0e-3;

struct MaterialSpec {
    double youngs_modulus = 68.9e9;  // Pa, 6061-T6
    double poisson_ratio = 0.33;
    double density = 2700.0;  // kg/m^3

    double shear_modulus() const { return youngs_modulus / (2.0 * (1.0 + poisson_ratio)); }
    void validate() const;
};

/// Lumped mass attached to the plate (magnet arrays, payload).
struct PointMass {
    double mass = 0.0;            // kg
    double rotary_inertia = 0.0;  // kg m^2, applied to both rotation DOFs
    double x = 0.0;
    double y = 0.0;
};

/// The free geometric design vector of the rib-stiffened stage.
struct GeometryParams {
    static constexpr std::size_t size = 5;

    double base_thickness = 5e-3;
    double rib_height = 20e-3;
    double rib_width = 3e-3;
    double rib_spacing_x = 0.1;  // pitch between ribs that run along y
    double rib_spacing_y = 0.1;  // pitch between ribs that run along x

    std::array<double, size> to_array() const;
    static GeometryParams from_array(const std::array<double, size>& v);
    static const std::array<const char*, size>& names();
};

struct GeometryBounds {
    GeometryParams min;
    GeometryParams max;

    void validate() const;
};

/// Raw, unvalidated description of a stage. `build_geometry` turns it into a StageGeometry.
struct GeometryInput {
    double side_x = 0.3;
    double side_y = 0.3;
    GeometryParams params;
    int rib_count_x = 0;  // number of ribs at constant x (running along y)
    int rib_count_y = 0;  // number of ribs at constant y (running along x)
    std::vector<PointMass> point_masses;
};

/// Plate centred at the origin, spanning [-side_x/2, side_x/2] x [-side_y/2, side_y/2].
/// Ribs of each family are equally spaced and symmetric about the plate axis.
class StageGeometry {
public:
    double side_x() const { return in_.side_x; }
    double side_y() const { return in_.side_y; }
    const GeometryParams& params() const { return in_.params; }
    int rib_count_x() const { return in_.rib_count_x; }
    int rib_count_y() const { return in_.rib_count_y; }
    const std::vector<PointMass>& point_masses() const { return in_.point_masses; }
    const GeometryInput& input() const { return in_; }

    /// Centre-line x coordinates of the ribs that run along y.
    std::vector<double> rib_centers_x() const;
    /// Centre-line y coordinates of the ribs that run along x.
    std::vector<double> rib_centers_y() const;

    bool inside_planform(double x, double y, double tol = 1e-12) const;

    /// 0 = none, 1 = under a y-running rib, 2 = under an x-running rib, 3 = both.
    int rib_mask_at(double x, double y) const;

private:
    friend StageGeometry build_geometry(const GeometryInput&, const GeometryBounds*);
    explicit StageGeometry(GeometryInput in) : in_(std::move(in)) {}
    GeometryInput in_;
};

/// Validates and builds a geometry. Out-of-bounds parameters are errors, never clamped.
/// Pass `bounds == nullptr` to skip the design-bound check (manufacturability still applies).
StageGeometry build_geometry(const GeometryInput& input, const GeometryBounds* bounds = nullptr);
inline StageGeometry build_geometry(const GeometryInput& input, const GeometryBounds& bounds) {
    return build_geometry(input, &bounds);
}

/// Structural volume: base plate plus ribs, crossings counted once.
double structural_volume(const StageGeometry& geometry);

/// Stage weight: density * structural volume + point masses.
double total_mass(const StageGeometry& geometry, const MaterialSpec& material);

/// Centres of equally spaced, centred ribs.
std::vector<double> centred_positions(int count, double pitch);

}  // namespace flexstage
