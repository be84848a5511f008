#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "flexstage/assembly.hpp"
#include "flexstage/geometry.hpp"
#include "flexstage/modal.hpp"
#include "flexstage/placement.hpp"

namespace flexstage {

/// Band constraints on the flexible modes: modes 1..n at or below omega_low, modes n+1..m at or
/// above omega_high. n = 0 drops the upper-bound rows.
struct FrequencyConstraints {
    double omega_low = 0.0;   // rad/s
    double omega_high = 0.0;  // rad/s
    int n = 1;
    int m = 2;

    void validate() const;
};

/// Everything except the design vector that is needed to analyze a stage.
struct DesignContext {
    GeometryInput base;  ///< planform, rib counts, point masses; params are replaced
    MaterialSpec material;
    int resolution = 16;
    AssemblyOptions assembly;
    ModalOptions modal;
};

GeometryInput with_params(const GeometryInput& base, const GeometryParams& params);

/// Builds, meshes, assembles and solves the stage for 3 rigid + `flexible_modes` modes.
ModalModel analyze_stage(const StageGeometry& geometry, const DesignContext& context,
                         int flexible_modes);

/// Signed violations in rad/s: (omega_i - omega_low) for i <= n, (omega_high - omega_j) for
/// n < j <= m. Positive means violated.
std::vector<double> constraint_values(const StageGeometry& geometry,
                                      const FrequencyConstraints& constraints,
                                      const DesignContext& context);

/// Violations divided by the bound they refer to (0.01 is the feasibility tolerance).
std::vector<double> relative_violations(const std::vector<double>& violations,
                                        const FrequencyConstraints& constraints);

struct GeometryOptOptions {
    int max_evaluations = 500;
    double initial_step = 0.15;  ///< fraction of the bounds box
    std::vector<double> penalty_schedule{10.0, 100.0, 1000.0};
    double tolerance = 0.01;     ///< relative feasibility tolerance
    bool polish = true;
};

struct GeometryResult {
    GeometryParams params;
    double mass = 0.0;
    Eigen::VectorXd flexible_frequencies;  ///< rad/s, modes 1..m
    std::vector<double> violations;        ///< rad/s
    bool feasible = false;
    bool omega_high_active = false;
    int evaluations = 0;
    std::string message;
};

/// Minimizes total mass subject to the band constraints with exact-penalty Nelder-Mead on the
/// bounds box. The budget is split evenly over the penalty stages; each stage restarts with a
/// halved simplex while it still improves. Returns the best design found; `feasible` is false when no design met the
/// constraints, with the best iterate and its violations.
GeometryResult optimize_geometry(const GeometryBounds& bounds, const FrequencyConstraints& constraints,
                                 const GeometryParams& init, const DesignContext& context,
                                 const GeometryOptOptions& options = {});

struct SweepSpec {
    double omega_high_start = 0.0;  // rad/s
    double omega_high_stop = 0.0;
    double step = 0.0;
    bool warm_start = true;
};

/// Placement stage run after each sweep step.
struct SweepPlacement {
    PlacementObjectiveSpec objective;
    PlacementDomain domain;
    std::optional<std::vector<Point2>> fixed_actuators;  ///< optimize actuators when empty
    int device_count = 4;
    bool symmetric = true;
    int flexible_modes = 10;
};

struct SweepRecord {
    double omega_high = 0.0;  // rad/s
    GeometryResult design;
    double ja = 0.0;
    double jo = 0.0;
    std::vector<Point2> actuators;
    std::vector<Point2> sensors;
    bool feasible = false;
    std::string error;

    double ja_plus_jo() const { return ja + jo; }
};

std::vector<double> sweep_levels(const SweepSpec& spec);

std::vector<SweepRecord> sweep_omega_high(const SweepSpec& spec, const GeometryBounds& bounds,
                                          const FrequencyConstraints& constraints_template,
                                          const GeometryParams& init, const DesignContext& context,
                                          const SweepPlacement& placement,
                                          const GeometryOptOptions& options = {});

/// Sweep level in Hz rounded to 1e-9 Hz, so decimal steps print exactly.
double sweep_level_hz(double omega_high);

/// Columns omega_high_hz, mass_kg, ja_plus_jo, one column per design parameter, feasible.
void write_sweep_csv(const std::vector<SweepRecord>& records, const std::filesystem::path& path);

/// One object per step: omega_high_hz, theta_p, mass_kg, flexible_frequencies_hz, feasible, ja,
/// jo, actuators, sensors, error.
void write_sweep_json(const std::vector<SweepRecord>& records, const std::filesystem::path& path);

void write_geometry_json(const GeometryResult& result, const FrequencyConstraints& constraints,
                         const std::filesystem::path& path);

}  // namespace flexstage
