#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "flexstage/config.hpp"

namespace flexstage {

struct ChannelReport {
    std::string dof;
    double target_hz = 0.0;     ///< requested bandwidth
    double tuned_hz = 0.0;      ///< bandwidth the controller was built for
    double bandwidth_hz = 0.0;  ///< measured first downward unity crossing
    double max_sensitivity = 0.0;
    bool stable = false;
    ControllerParams controller;
};

struct DesignReport {
    std::string name;
    std::string variant;  ///< "proposed" or "baseline"
    double mass_kg = 0.0;
    double first_resonance_hz = 0.0;
    double second_resonance_hz = 0.0;
    GeometryParams theta_p;
    bool geometry_feasible = false;
    bool omega_high_active = false;
    std::vector<Point2> actuators;
    std::vector<Point2> sensors;
    double ja = 0.0;
    double jo = 0.0;
    std::vector<ChannelReport> channels;
    double max_sensitivity = 0.0;
    bool closed_loop_stable = false;
    double open_loop_damping = 0.0;
    double first_flexible_damping = 0.0;  ///< closed loop

    const ChannelReport* channel(const std::string& dof) const;
};

struct PipelineOptions {
    std::filesystem::path out_dir;  ///< empty: write nothing
};

/// Geometry -> placement -> plant -> control. Writes geometry.json, placement.json,
/// placement_heatmap.csv, plant.json, plant_response.csv, loop_<dof>.csv, controllers.json,
/// report.json and, when sweeping, sweep.csv. A stage failure writes FAILED with the stage name
/// and rethrows.
DesignReport run_pipeline(const PipelineConfig& config, const PipelineOptions& options = {});

/// Rigid-body-only design: first flexible mode >= resonance_factor x design bandwidth, three
/// collocated devices at the configured sites, three controllers.
DesignReport run_baseline(const PipelineConfig& config, const PipelineOptions& options = {});

/// Runs the placement and control stages for a given geometry (no geometry optimization).
DesignReport evaluate_design(const PipelineConfig& config, const GeometryParams& params,
                             const PipelineOptions& options = {});

/// Side-by-side table written as `<stem>.csv` and `<stem>.txt`.
struct ComparisonRow {
    std::string metric;
    std::optional<double> baseline;
    std::optional<double> proposed;
};
std::vector<ComparisonRow> compare(const DesignReport& proposed, const DesignReport& baseline);
void write_comparison(const std::vector<ComparisonRow>& rows, const std::filesystem::path& stem);

void write_report_json(const DesignReport& report, const std::filesystem::path& path);
DesignReport read_report_json(const std::filesystem::path& path);

/// Reads theta_p from a geometry.json written by the optimizer.
GeometryParams read_geometry_json(const std::filesystem::path& path);

}  // namespace flexstage
