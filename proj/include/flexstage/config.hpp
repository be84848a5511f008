#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "flexstage/assembly.hpp"
#include "flexstage/controller.hpp"
#include "flexstage/geometry.hpp"
#include "flexstage/geometry_opt.hpp"
#include "flexstage/placement.hpp"
#include "flexstage/plant.hpp"

namespace flexstage {

/// Rectangular magnet arrays bolted to the stage; also the fixed actuator sites.
struct MagnetSpec {
    double size_x = 0.06;
    double size_y = 0.06;
    double thickness = 0.006;
    double density = 7500.0;
    std::vector<Point2> locations;

    double mass() const { return density * size_x * size_y * thickness; }
    /// Rotary inertia of one block about an in-plane axis through its centre (mean of x and y).
    double rotary_inertia() const;
    std::vector<PointMass> point_masses() const;
};

enum class ActuatorMode { optimized, fixed_at_magnets };

enum class BandwidthPolicy {
    target,  ///< tune exactly at the target bandwidth; infeasible is an error
    max,     ///< largest feasible bandwidth up to the target
};

struct ControllerSpec {
    double alpha = 0.3;
    double zeta_lp = 0.7;
    MappingMode mode = MappingMode::loopshaping;
    double target_bandwidth_hz = 100.0;
    BandwidthPolicy policy = BandwidthPolicy::max;
    double search_min_hz = 1.0;
    double max_sensitivity = 2.0;
};

struct SweepConfig {
    double start_hz = 600.0;
    double stop_hz = 300.0;
    double step_hz = 10.0;
    bool warm_start = true;
    std::optional<double> select_hz;  ///< design carried forward; default: the first record
};

struct BaselineSpec {
    double design_bandwidth_hz = 50.0;
    double resonance_factor = 5.0;
    std::vector<Point2> devices{{0.12, 0.0}, {-0.12, 0.12}, {-0.12, -0.12}};
};

struct GridSpec {
    double min_hz = 1.0;
    double max_hz = 2000.0;
    int points = 600;
};

struct PipelineConfig {
    std::string name = "stage";
    std::uint64_t seed = 1;
    MaterialSpec material;
    GeometryInput stage;  ///< planform and rib counts; params = init
    GeometryBounds bounds;
    int resolution = 16;
    AssemblyOptions assembly;

    double omega_low_hz = 50.0;
    double omega_high_hz = 500.0;
    int controlled_modes = 1;  ///< n
    int constrained_modes = 2; ///< m
    std::optional<SweepConfig> sweep;
    GeometryOptOptions optimizer;

    PlacementObjectiveSpec placement;
    PlacementDomain domain;
    int devices = 4;
    bool symmetric = true;
    ActuatorMode actuator_mode = ActuatorMode::optimized;
    std::optional<MagnetSpec> magnets;

    PlantOptions plant;
    ControllerSpec controller;
    GridSpec grid;
    BaselineSpec baseline;

    FrequencyConstraints constraints() const;
    DesignContext context() const;
    std::vector<Point2> fixed_actuators() const;
    void validate() const;
};

PipelineConfig parse_config(const std::string& json_text);
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace flexstage
