#include "flexstage/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "flexstage/errors.hpp"
#include "flexstage/format.hpp"
#include "json_util.hpp"

namespace flexstage {

namespace {

using nlohmann::json;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::optional<std::filesystem::path> output(const PipelineOptions& o, const std::string& file) {
    if (o.out_dir.empty()) return std::nullopt;
    return o.out_dir / file;
}

template <typename F>
auto run_stage(const char* name, const PipelineOptions& opt, F&& body) -> decltype(body()) {
    try {
        return body();
    } catch (const Error& e) {
        if (!opt.out_dir.empty()) {
            std::ofstream f(opt.out_dir / "FAILED");
            f << "stage: " << name << "\nerror: " << e.what() << '\n';
        }
        throw Error(std::string("stage ") + name + ": " + e.what(), e.code());
    }
}

json points_json(const std::vector<Point2>& pts) {
    json arr = json::array();
    for (const auto& p : pts) arr.push_back({p.x, p.y});
    return arr;
}

std::vector<Point2> json_points(const json& j) {
    std::vector<Point2> out;
    for (const auto& e : j) out.push_back({e.at(0).get<double>(), e.at(1).get<double>()});
    return out;
}

json controller_json(const ControllerParams& c) {
    return {{"omega_bw_hz", c.omega_bw / kTwoPi}, {"alpha", c.alpha},
            {"kp", c.kp},                         {"omega_int_hz", c.omega_int / kTwoPi},
            {"omega_d_hz", c.omega_d / kTwoPi},   {"omega_lp_hz", c.omega_lp / kTwoPi},
            {"zeta_lp", c.zeta_lp},               {"mapping_mode", to_string(c.mode)}};
}

ControllerParams json_controller(const json& j) {
    ControllerParams c;
    c.omega_bw = j.at("omega_bw_hz").get<double>() * kTwoPi;
    c.alpha = j.at("alpha").get<double>();
    c.kp = j.at("kp").get<double>();
    c.omega_int = j.at("omega_int_hz").get<double>() * kTwoPi;
    c.omega_d = j.at("omega_d_hz").get<double>() * kTwoPi;
    c.omega_lp = j.at("omega_lp_hz").get<double>() * kTwoPi;
    c.zeta_lp = j.at("zeta_lp").get<double>();
    c.mode = mapping_mode_from_string(j.at("mapping_mode").get<std::string>());
    return c;
}

json params_json(const GeometryParams& p) {
    json out;
    const auto arr = p.to_array();
    for (std::size_t i = 0; i < arr.size(); ++i) out[GeometryParams::names()[i]] = arr[i];
    return out;
}

GeometryParams json_params(const json& j) {
    std::array<double, GeometryParams::size> arr{};
    for (std::size_t i = 0; i < arr.size(); ++i) arr[i] = j.at(GeometryParams::names()[i]).get<double>();
    return GeometryParams::from_array(arr);
}

struct Layout {
    std::vector<Point2> actuators;
    std::vector<Point2> sensors;
    std::vector<ControlledDof> dofs;
    double ja = 0.0;
    double jo = 0.0;
    std::optional<PlacementSolution> sensor_solution;
};

int modes_needed(const PipelineConfig& cfg) {
    int need = std::max(cfg.plant.flexible_modes, cfg.controlled_modes);
    for (int u : cfg.placement.uncontrolled) need = std::max(need, u + 2);
    for (int c : cfg.placement.controlled) need = std::max(need, c);
    return need;
}

// Placement, plant, control and reporting for a fixed geometry.
DesignReport downstream(const PipelineConfig& cfg, const GeometryResult& geom, bool baseline,
                        const PipelineOptions& opt) {
    const DesignContext ctx = cfg.context();
    const StageGeometry g = build_geometry(with_params(ctx.base, geom.params), cfg.bounds);

    const ModalModel modal = run_stage("placement", opt, [&] { return analyze_stage(g, ctx, modes_needed(cfg)); });

    Layout layout = run_stage("placement", opt, [&] {
        Layout l;
        if (baseline) {
            l.actuators = cfg.baseline.devices;
            l.sensors = cfg.baseline.devices;
            l.dofs = default_controlled_dofs(0);
            l.ja = l.jo = placement_objective(l.sensors, cfg.placement, modal);
        } else {
            PlacementSolution s =
                optimize_placement(modal, cfg.domain, cfg.placement, cfg.devices, cfg.symmetric);
            l.sensors = s.locations;
            l.jo = s.objective;
            if (cfg.actuator_mode == ActuatorMode::fixed_at_magnets) {
                l.actuators = cfg.fixed_actuators();
                l.ja = placement_objective(l.actuators, cfg.placement, modal);
            } else {
                l.actuators = s.locations;
                l.ja = s.objective;
            }
            l.dofs = default_controlled_dofs(cfg.controlled_modes);
            l.sensor_solution = std::move(s);
        }
        if (auto p = output(opt, "placement.json")) {
            json doc;
            doc["gamma"] = cfg.placement.gamma;
            doc["actuators"] = points_json(l.actuators);
            doc["sensors"] = points_json(l.sensors);
            doc["ja"] = l.ja;
            doc["jo"] = l.jo;
            json gs = json::array();
            for (const auto& m : placement_grammians(l.sensors, cfg.placement, modal))
                gs.push_back({{"mode", m.mode},
                              {"frequency_hz", m.frequency / kTwoPi},
                              {"grammian", m.value},
                              {"controlled", m.controlled}});
            doc["sensor_grammians"] = gs;
            json ga = json::array();
            for (const auto& m : placement_grammians(l.actuators, cfg.placement, modal))
                ga.push_back({{"mode", m.mode},
                              {"frequency_hz", m.frequency / kTwoPi},
                              {"grammian", m.value},
                              {"controlled", m.controlled}});
            doc["actuator_grammians"] = ga;
            detail::write_json_file(doc, *p);
        }
        if (auto p = output(opt, "placement_heatmap.csv"))
            write_placement_heatmap_csv(modal, cfg.domain, cfg.placement, *p);
        return l;
    });

    PlantModel plant = run_stage("plant", opt, [&] {
        PlantModel pl = build_plant(modal, {layout.actuators}, {layout.sensors}, cfg.plant);
        pl.decoupling = decoupling_transforms(pl, layout.dofs);
        if (auto p = output(opt, "plant.json")) write_plant_json(pl, *p);
        if (auto p = output(opt, "plant_response.csv")) {
            std::vector<std::string> names;
            for (const auto& d : layout.dofs) names.push_back(d.name());
            const auto grid = log_grid_hz(cfg.grid.min_hz, cfg.grid.max_hz, cfg.grid.points);
            write_frequency_response_csv(frequency_response(pl.decoupled_system(), grid), *p, names, names);
        }
        return pl;
    });

    DesignReport rep;
    rep.name = cfg.name;
    rep.variant = baseline ? "baseline" : "proposed";
    rep.mass_kg = geom.mass;
    rep.theta_p = geom.params;
    rep.geometry_feasible = geom.feasible;
    rep.omega_high_active = geom.omega_high_active;
    rep.first_resonance_hz = modal.flexible_frequency(1) / kTwoPi;
    rep.second_resonance_hz = modal.flexible_frequency(2) / kTwoPi;
    rep.actuators = layout.actuators;
    rep.sensors = layout.sensors;
    rep.ja = layout.ja;
    rep.jo = layout.jo;
    rep.open_loop_damping = plant.damping(plant.rigid_count);

    run_stage("control", opt, [&] {
        TuningOptions topt;
        topt.alpha = cfg.controller.alpha;
        topt.zeta_lp = cfg.controller.zeta_lp;
        topt.mode = cfg.controller.mode;
        topt.max_sensitivity = cfg.controller.max_sensitivity;
        const double target = kTwoPi * cfg.controller.target_bandwidth_hz;
        const auto grid = log_grid_hz(cfg.grid.min_hz, cfg.grid.max_hz, cfg.grid.points);

        std::vector<ControllerParams> controllers;
        for (std::size_t k = 0; k < layout.dofs.size(); ++k) {
            const StateSpace ch = plant.decoupled_channel(static_cast<int>(k));
            const std::string dof = layout.dofs[k].name();
            TuningResult t;
            if (cfg.controller.policy == BandwidthPolicy::target) {
                t = tune_gain(ch, target, topt);
                if (!t.feasible) throw InfeasibleError("channel " + dof + ": " + t.reason);
            } else {
                try {
                    t = max_bandwidth(ch, kTwoPi * cfg.controller.search_min_hz, target, topt);
                } catch (const InfeasibleError& e) {
                    throw InfeasibleError("channel " + dof + ": " + e.what());
                }
            }
            controllers.push_back(t.controller);
            ChannelReport c;
            c.dof = dof;
            c.target_hz = cfg.controller.target_bandwidth_hz;
            c.tuned_hz = t.controller.omega_bw / kTwoPi;
            c.bandwidth_hz = t.metrics.bandwidth / kTwoPi;
            c.max_sensitivity = t.metrics.sensitivity_peak;
            c.stable = t.metrics.stable;
            c.controller = t.controller;
            rep.channels.push_back(c);
            if (auto p = output(opt, "loop_" + dof + ".csv"))
                write_loop_csv(loop_response(ch, t.controller, grid), *p);
        }
        const ClosedLoopReport cl = closed_loop_metrics(plant, controllers);
        rep.closed_loop_stable = cl.modes.stable;
        rep.first_flexible_damping = cl.modes.damping(plant.rigid_count);
        for (const auto& c : rep.channels) rep.max_sensitivity = std::max(rep.max_sensitivity, c.max_sensitivity);
        if (auto p = output(opt, "controllers.json")) {
            json arr = json::array();
            for (std::size_t k = 0; k < rep.channels.size(); ++k) {
                json c = controller_json(rep.channels[k].controller);
                c["dof"] = rep.channels[k].dof;
                c["bandwidth_hz"] = rep.channels[k].bandwidth_hz;
                c["max_sensitivity"] = rep.channels[k].max_sensitivity;
                c["stable"] = rep.channels[k].stable;
                arr.push_back(c);
            }
            json doc;
            doc["channels"] = arr;
            doc["closed_loop_stable"] = cl.modes.stable;
            doc["closed_loop_modal_damping"] = detail::vector_json(cl.modes.damping);
            detail::write_json_file(doc, *p);
        }
        return 0;
    });

    if (auto p = output(opt, "report.json")) write_report_json(rep, *p);
    return rep;
}

void prepare_out_dir(const PipelineOptions& opt) {
    if (opt.out_dir.empty()) return;
    std::error_code ec;
    std::filesystem::create_directories(opt.out_dir, ec);
    if (ec) throw InputError("cannot create output directory " + opt.out_dir.string());
    std::filesystem::remove(opt.out_dir / "FAILED", ec);
}

}  // namespace

const ChannelReport* DesignReport::channel(const std::string& dof) const {
    for (const auto& c : channels)
        if (c.dof == dof) return &c;
    return nullptr;
}

DesignReport run_pipeline(const PipelineConfig& cfg, const PipelineOptions& opt) {
    cfg.validate();
    prepare_out_dir(opt);
    const DesignContext ctx = cfg.context();
    const FrequencyConstraints cons = cfg.constraints();

    GeometryResult geom = run_stage("geometry", opt, [&] {
        if (!cfg.sweep) {
            GeometryResult r = optimize_geometry(cfg.bounds, cons, cfg.stage.params, ctx, cfg.optimizer);
            if (auto p = output(opt, "geometry.json")) write_geometry_json(r, cons, *p);
            if (!r.feasible) throw InfeasibleError(r.message);
            return r;
        }
        const SweepSpec spec{kTwoPi * cfg.sweep->start_hz, kTwoPi * cfg.sweep->stop_hz,
                             kTwoPi * cfg.sweep->step_hz, cfg.sweep->warm_start};
        SweepPlacement place;
        place.objective = cfg.placement;
        place.domain = cfg.domain;
        if (cfg.actuator_mode == ActuatorMode::fixed_at_magnets) place.fixed_actuators = cfg.fixed_actuators();
        place.device_count = cfg.devices;
        place.symmetric = cfg.symmetric;
        place.flexible_modes = modes_needed(cfg);
        const auto records =
            sweep_omega_high(spec, cfg.bounds, cons, cfg.stage.params, ctx, place, cfg.optimizer);
        if (auto p = output(opt, "sweep.csv")) write_sweep_csv(records, *p);
        if (auto p = output(opt, "sweep_steps.json")) write_sweep_json(records, *p);
        const double sel = cfg.sweep->select_hz.value_or(cfg.sweep->start_hz) * kTwoPi;
        const SweepRecord* pick = nullptr;
        for (const auto& r : records)
            if (std::abs(r.omega_high - sel) <= 1e-6 * sel) pick = &r;
        if (!pick) throw InputError("sweep.select_omega_high_hz is not one of the sweep levels");
        if (!pick->feasible) throw InfeasibleError("selected sweep step is infeasible: " + pick->error);
        FrequencyConstraints c = cons;
        c.omega_high = pick->omega_high;
        if (auto p = output(opt, "geometry.json")) write_geometry_json(pick->design, c, *p);
        return pick->design;
    });
    return downstream(cfg, geom, false, opt);
}

DesignReport run_baseline(const PipelineConfig& cfg, const PipelineOptions& opt) {
    cfg.validate();
    prepare_out_dir(opt);
    const DesignContext ctx = cfg.context();
    FrequencyConstraints cons;
    cons.n = 0;
    cons.m = 1;
    cons.omega_low = 0.0;
    cons.omega_high = kTwoPi * cfg.baseline.resonance_factor * cfg.baseline.design_bandwidth_hz;
    GeometryResult geom = run_stage("geometry", opt, [&] {
        GeometryResult r = optimize_geometry(cfg.bounds, cons, cfg.stage.params, ctx, cfg.optimizer);
        if (auto p = output(opt, "geometry.json")) write_geometry_json(r, cons, *p);
        if (!r.feasible) throw InfeasibleError(r.message);
        return r;
    });
    return downstream(cfg, geom, true, opt);
}

DesignReport evaluate_design(const PipelineConfig& cfg, const GeometryParams& params,
                             const PipelineOptions& opt) {
    cfg.validate();
    prepare_out_dir(opt);
    const DesignContext ctx = cfg.context();
    GeometryResult geom = run_stage("geometry", opt, [&] {
        const StageGeometry g = build_geometry(with_params(ctx.base, params), cfg.bounds);
        GeometryResult r;
        r.params = params;
        r.mass = total_mass(g, ctx.material);
        const FrequencyConstraints c = cfg.constraints();
        r.violations = constraint_values(g, c, ctx);
        const auto rel = relative_violations(r.violations, c);
        r.feasible = std::all_of(rel.begin(), rel.end(), [&](double v) { return v <= cfg.optimizer.tolerance; });
        for (std::size_t i = static_cast<std::size_t>(c.n); i < rel.size(); ++i)
            if (std::abs(rel[i]) <= cfg.optimizer.tolerance) r.omega_high_active = true;
        return r;
    });
    return downstream(cfg, geom, false, opt);
}

std::vector<ComparisonRow> compare(const DesignReport& prop, const DesignReport& base) {
    std::vector<ComparisonRow> rows;
    rows.push_back({"stage_weight_kg", base.mass_kg, prop.mass_kg});
    rows.push_back({"first_resonance_hz", base.first_resonance_hz, prop.first_resonance_hz});
    rows.push_back({"second_resonance_hz", base.second_resonance_hz, prop.second_resonance_hz});
    std::vector<std::string> dofs;
    for (const auto* r : {&base, &prop})
        for (const auto& c : r->channels)
            if (std::find(dofs.begin(), dofs.end(), c.dof) == dofs.end()) dofs.push_back(c.dof);
    for (const auto& d : dofs) {
        ComparisonRow row{d + "_bandwidth_hz", std::nullopt, std::nullopt};
        if (const auto* c = base.channel(d)) row.baseline = c->bandwidth_hz;
        if (const auto* c = prop.channel(d)) row.proposed = c->bandwidth_hz;
        rows.push_back(row);
    }
    rows.push_back({"max_sensitivity", base.max_sensitivity, prop.max_sensitivity});
    rows.push_back({"first_flexible_closed_loop_damping", base.first_flexible_damping,
                    prop.first_flexible_damping});
    return rows;
}

void write_comparison(const std::vector<ComparisonRow>& rows, const std::filesystem::path& stem) {
    auto cell = [](const std::optional<double>& v) { return v ? fmt_double(*v) : std::string(); };
    std::ofstream csv(stem.string() + ".csv");
    if (!csv) throw InputError("cannot open output file " + stem.string() + ".csv");
    csv << "metric,baseline,proposed,delta\n";
    for (const auto& r : rows) {
        const std::string delta = r.baseline && r.proposed ? fmt_double(*r.proposed - *r.baseline) : "";
        csv << r.metric << ',' << cell(r.baseline) << ',' << cell(r.proposed) << ',' << delta << '\n';
    }

    std::ofstream txt(stem.string() + ".txt");
    if (!txt) throw InputError("cannot open output file " + stem.string() + ".txt");
    auto num = [](const std::optional<double>& v) {
        if (!v) return std::string("-");
        std::ostringstream s;
        s << std::setprecision(4) << *v;
        return s.str();
    };
    txt << std::left << std::setw(36) << "metric" << std::setw(14) << "baseline" << std::setw(14)
        << "proposed" << '\n';
    for (const auto& r : rows)
        txt << std::left << std::setw(36) << r.metric << std::setw(14) << num(r.baseline)
            << std::setw(14) << num(r.proposed) << '\n';
}

void write_report_json(const DesignReport& r, const std::filesystem::path& path) {
    json doc;
    doc["name"] = r.name;
    doc["variant"] = r.variant;
    doc["mass_kg"] = r.mass_kg;
    doc["first_resonance_hz"] = r.first_resonance_hz;
    doc["second_resonance_hz"] = r.second_resonance_hz;
    doc["theta_p"] = params_json(r.theta_p);
    doc["geometry_feasible"] = r.geometry_feasible;
    doc["omega_high_active"] = r.omega_high_active;
    doc["actuators"] = points_json(r.actuators);
    doc["sensors"] = points_json(r.sensors);
    doc["ja"] = r.ja;
    doc["jo"] = r.jo;
    json chans = json::array();
    for (const auto& c : r.channels)
        chans.push_back({{"dof", c.dof},
                         {"target_hz", c.target_hz},
                         {"tuned_hz", c.tuned_hz},
                         {"bandwidth_hz", c.bandwidth_hz},
                         {"max_sensitivity", c.max_sensitivity},
                         {"stable", c.stable},
                         {"controller", controller_json(c.controller)}});
    doc["channels"] = chans;
    doc["max_sensitivity"] = r.max_sensitivity;
    doc["closed_loop_stable"] = r.closed_loop_stable;
    doc["open_loop_damping"] = r.open_loop_damping;
    doc["first_flexible_closed_loop_damping"] = r.first_flexible_damping;
    detail::write_json_file(doc, path);
}

DesignReport read_report_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open report " + path.string());
    try {
        const json doc = json::parse(in);
        DesignReport r;
        r.name = doc.at("name").get<std::string>();
        r.variant = doc.at("variant").get<std::string>();
        r.mass_kg = doc.at("mass_kg").get<double>();
        r.first_resonance_hz = doc.at("first_resonance_hz").get<double>();
        r.second_resonance_hz = doc.at("second_resonance_hz").get<double>();
        r.theta_p = json_params(doc.at("theta_p"));
        r.geometry_feasible = doc.at("geometry_feasible").get<bool>();
        r.omega_high_active = doc.at("omega_high_active").get<bool>();
        r.actuators = json_points(doc.at("actuators"));
        r.sensors = json_points(doc.at("sensors"));
        r.ja = doc.at("ja").get<double>();
        r.jo = doc.at("jo").get<double>();
        for (const auto& c : doc.at("channels")) {
            ChannelReport ch;
            ch.dof = c.at("dof").get<std::string>();
            ch.target_hz = c.at("target_hz").get<double>();
            ch.tuned_hz = c.at("tuned_hz").get<double>();
            ch.bandwidth_hz = c.at("bandwidth_hz").get<double>();
            ch.max_sensitivity = c.at("max_sensitivity").get<double>();
            ch.stable = c.at("stable").get<bool>();
            ch.controller = json_controller(c.at("controller"));
            r.channels.push_back(ch);
        }
        r.max_sensitivity = doc.at("max_sensitivity").get<double>();
        r.closed_loop_stable = doc.at("closed_loop_stable").get<bool>();
        r.open_loop_damping = doc.at("open_loop_damping").get<double>();
        r.first_flexible_damping = doc.at("first_flexible_closed_loop_damping").get<double>();
        return r;
    } catch (const json::exception& e) {
        throw InputError("malformed report " + path.string() + ": " + e.what());
    }
}

GeometryParams read_geometry_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open geometry file " + path.string());
    try {
        return json_params(json::parse(in).at("theta_p"));
    } catch (const json::exception& e) {
        throw InputError("malformed geometry file " + path.string() + ": " + e.what());
    }
}

}  // namespace flexstage
