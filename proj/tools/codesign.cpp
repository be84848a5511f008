#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>

#include "flexstage/config.hpp"
#include "flexstage/errors.hpp"
#include "flexstage/pipeline.hpp"

using namespace flexstage;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Globals {
    std::string config;
    std::string out_dir = "out";
    std::optional<int> resolution;
    std::optional<std::uint64_t> seed;
};

PipelineConfig load(const Globals& g) {
    if (g.config.empty()) throw InputError("--config is required");
    PipelineConfig cfg = load_config(g.config);
    if (g.resolution) cfg.resolution = *g.resolution;
    if (g.seed) cfg.seed = *g.seed;
    cfg.validate();
    return cfg;
}

std::filesystem::path out_dir(const Globals& g) {
    std::filesystem::path p(g.out_dir);
    std::error_code ec;
    std::filesystem::create_directories(p, ec);
    if (ec) throw InputError("cannot create output directory " + p.string());
    return p;
}

int modes_needed(const PipelineConfig& cfg) {
    int need = std::max(cfg.plant.flexible_modes, cfg.controlled_modes);
    for (int u : cfg.placement.uncontrolled) need = std::max(need, u + 2);
    return need;
}

GeometryParams design_params(const PipelineConfig& cfg, const std::string& geometry) {
    return geometry.empty() ? cfg.stage.params : read_geometry_json(geometry);
}

void write_json(const nlohmann::json& doc, const std::filesystem::path& path) {
    std::ofstream f(path);
    if (!f) throw InputError("cannot open output file " + path.string());
    f << doc.dump(2) << '\n';
}

void cmd_modes(const Globals& g, const std::string& geometry, int count) {
    const PipelineConfig cfg = load(g);
    const auto dir = out_dir(g);
    const DesignContext ctx = cfg.context();
    const StageGeometry geo = build_geometry(with_params(ctx.base, design_params(cfg, geometry)), cfg.bounds);
    const ModalModel modal = analyze_stage(geo, ctx, count);
    write_mesh_csv(*modal.mesh, dir / "mesh");
    nlohmann::json doc;
    doc["mass_kg"] = total_mass(geo, ctx.material);
    doc["rigid_count"] = modal.rigid_count;
    nlohmann::json f = nlohmann::json::array();
    for (int i = 0; i < modal.mode_count(); ++i) f.push_back(modal.frequencies(i) / kTwoPi);
    doc["frequencies_hz"] = f;
    write_json(doc, dir / "modes.json");
    std::cout << "rigid modes: " << modal.rigid_count << '\n';
    for (int k = 1; k <= modal.flexible_count(); ++k)
        std::cout << "flexible mode " << k << ": " << modal.flexible_frequency(k) / kTwoPi << " Hz\n";
}

void cmd_place(const Globals& g, const std::string& geometry) {
    const PipelineConfig cfg = load(g);
    const auto dir = out_dir(g);
    const DesignContext ctx = cfg.context();
    const StageGeometry geo = build_geometry(with_params(ctx.base, design_params(cfg, geometry)), cfg.bounds);
    const ModalModel modal = analyze_stage(geo, ctx, modes_needed(cfg));
    const PlacementSolution s = optimize_placement(modal, cfg.domain, cfg.placement, cfg.devices, cfg.symmetric);
    write_placement_json(s, dir / "placement.json");
    write_placement_heatmap_csv(modal, cfg.domain, cfg.placement, dir / "placement_heatmap.csv");
    std::cout << "objective: " << s.objective << '\n';
    for (const auto& p : s.locations) std::cout << "device: " << p.x << ' ' << p.y << '\n';
}

void cmd_optimize(const Globals& g) {
    const PipelineConfig cfg = load(g);
    const auto dir = out_dir(g);
    const auto cons = cfg.constraints();
    const GeometryResult r = optimize_geometry(cfg.bounds, cons, cfg.stage.params, cfg.context(), cfg.optimizer);
    write_geometry_json(r, cons, dir / "geometry.json");
    std::cout << "mass: " << r.mass << " kg, feasible: " << (r.feasible ? "yes" : "no") << '\n';
    if (!r.feasible) throw InfeasibleError(r.message);
}

void cmd_sweep(const Globals& g) {
    PipelineConfig cfg = load(g);
    if (!cfg.sweep) throw InputError("config has no sweep section");
    const auto dir = out_dir(g);
    const SweepSpec spec{kTwoPi * cfg.sweep->start_hz, kTwoPi * cfg.sweep->stop_hz,
                         kTwoPi * cfg.sweep->step_hz, cfg.sweep->warm_start};
    SweepPlacement place;
    place.objective = cfg.placement;
    place.domain = cfg.domain;
    if (cfg.actuator_mode == ActuatorMode::fixed_at_magnets) place.fixed_actuators = cfg.fixed_actuators();
    place.device_count = cfg.devices;
    place.symmetric = cfg.symmetric;
    place.flexible_modes = modes_needed(cfg);
    const auto records = sweep_omega_high(spec, cfg.bounds, cfg.constraints(), cfg.stage.params,
                                          cfg.context(), place, cfg.optimizer);
    write_sweep_csv(records, dir / "sweep.csv");
    write_sweep_json(records, dir / "sweep_steps.json");
    std::cout << "records: " << records.size() << '\n';
}

void print_report(const DesignReport& r) {
    std::cout << r.variant << ": mass " << r.mass_kg << " kg, resonances " << r.first_resonance_hz
              << " / " << r.second_resonance_hz << " Hz, max sensitivity " << r.max_sensitivity << '\n';
    for (const auto& c : r.channels) std::cout << "  " << c.dof << ": " << c.bandwidth_hz << " Hz\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Structure/control co-design of a flexible motion stage"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config, "configuration JSON");
    app.add_option("--out-dir", g.out_dir, "output directory");
    app.add_option("--resolution", g.resolution, "mesh divisions per side");
    app.add_option("--seed", g.seed, "eigensolver seed");

    std::string geometry;
    int mode_count = 10;
    auto* modes = app.add_subcommand("modes", "modal analysis of a geometry");
    modes->add_option("--geometry", geometry, "geometry.json (default: config init)");
    modes->add_option("--modes", mode_count, "flexible modes");
    auto* place = app.add_subcommand("place", "optimal sensor/actuator placement");
    place->add_option("--geometry", geometry, "geometry.json (default: config init)");
    auto* optimize = app.add_subcommand("optimize", "mass minimization under frequency bands");
    auto* sweep = app.add_subcommand("sweep", "omega_high sweep");
    auto* tune = app.add_subcommand("tune", "placement, plant and controllers for a geometry");
    tune->add_option("--geometry", geometry, "geometry.json (default: config init)");
    auto* pipeline = app.add_subcommand("pipeline", "full co-design pipeline");
    auto* baseline = app.add_subcommand("baseline", "rigid-body-only reference design");
    std::string proposed_path, baseline_path;
    auto* cmp = app.add_subcommand("compare", "side-by-side table of two reports");
    cmp->add_option("--proposed", proposed_path, "proposed report.json")->required();
    cmp->add_option("--baseline", baseline_path, "baseline report.json")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(ExitCode::config_error);
    }

    try {
        if (*modes) cmd_modes(g, geometry, mode_count);
        if (*place) cmd_place(g, geometry);
        if (*optimize) cmd_optimize(g);
        if (*sweep) cmd_sweep(g);
        if (*tune) print_report(evaluate_design(load(g), design_params(load(g), geometry), {out_dir(g)}));
        if (*pipeline) print_report(run_pipeline(load(g), {out_dir(g)}));
        if (*baseline) print_report(run_baseline(load(g), {out_dir(g)}));
        if (*cmp) {
            const auto rows = compare(read_report_json(proposed_path), read_report_json(baseline_path));
            write_comparison(rows, out_dir(g) / "comparison");
            std::ifstream txt(out_dir(g) / "comparison.txt");
            std::cout << txt.rdbuf();
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::numerical_failure);
    }
    return 0;
}
