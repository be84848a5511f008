#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "flexstage/config.hpp"
#include "flexstage/controller.hpp"
#include "flexstage/errors.hpp"
#include "flexstage/geometry_opt.hpp"
#include "flexstage/modal.hpp"
#include "flexstage/pipeline.hpp"
#include "flexstage/placement.hpp"
#include "flexstage/plant.hpp"

namespace py = pybind11;
using namespace flexstage;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

py::tuple point(const Point2& p) { return py::make_tuple(p.x, p.y); }

py::list points(const std::vector<Point2>& pts) {
    py::list out;
    for (const auto& p : pts) out.append(point(p));
    return out;
}

py::dict params_dict(const GeometryParams& p) {
    py::dict d;
    const auto v = p.to_array();
    for (std::size_t i = 0; i < v.size(); ++i) d[GeometryParams::names()[i]] = v[i];
    return d;
}

GeometryParams dict_params(const py::dict& d, const GeometryParams& fallback) {
    auto v = fallback.to_array();
    for (auto item : d) {
        const auto key = item.first.cast<std::string>();
        bool found = false;
        for (std::size_t i = 0; i < v.size(); ++i)
            if (key == GeometryParams::names()[i]) {
                v[i] = item.second.cast<double>();
                found = true;
            }
        if (!found) throw InputError("unknown geometry parameter '" + key + "'");
    }
    return GeometryParams::from_array(v);
}

py::dict controller_dict(const ControllerParams& c) {
    py::dict d;
    d["omega_bw_hz"] = c.omega_bw / kTwoPi;
    d["alpha"] = c.alpha;
    d["kp"] = c.kp;
    d["omega_int_hz"] = c.omega_int / kTwoPi;
    d["omega_d_hz"] = c.omega_d / kTwoPi;
    d["omega_lp_hz"] = c.omega_lp / kTwoPi;
    d["zeta_lp"] = c.zeta_lp;
    d["mapping_mode"] = to_string(c.mode);
    return d;
}

py::dict report_dict(const DesignReport& r) {
    py::dict d;
    d["name"] = r.name;
    d["variant"] = r.variant;
    d["mass_kg"] = r.mass_kg;
    d["first_resonance_hz"] = r.first_resonance_hz;
    d["second_resonance_hz"] = r.second_resonance_hz;
    d["theta_p"] = params_dict(r.theta_p);
    d["geometry_feasible"] = r.geometry_feasible;
    d["omega_high_active"] = r.omega_high_active;
    d["actuators"] = points(r.actuators);
    d["sensors"] = points(r.sensors);
    d["ja"] = r.ja;
    d["jo"] = r.jo;
    py::dict channels;
    for (const auto& ch : r.channels) {
        py::dict c;
        c["target_hz"] = ch.target_hz;
        c["tuned_hz"] = ch.tuned_hz;
        c["bandwidth_hz"] = ch.bandwidth_hz;
        c["max_sensitivity"] = ch.max_sensitivity;
        c["stable"] = ch.stable;
        c["controller"] = controller_dict(ch.controller);
        channels[ch.dof.c_str()] = c;
    }
    d["channels"] = channels;
    d["max_sensitivity"] = r.max_sensitivity;
    d["closed_loop_stable"] = r.closed_loop_stable;
    d["open_loop_damping"] = r.open_loop_damping;
    d["first_flexible_damping"] = r.first_flexible_damping;
    return d;
}

py::dict geometry_dict(const GeometryResult& g) {
    py::dict d;
    d["theta_p"] = params_dict(g.params);
    d["mass_kg"] = g.mass;
    d["flexible_frequencies_hz"] = Eigen::VectorXd(g.flexible_frequencies / kTwoPi);
    std::vector<double> v;
    for (double x : g.violations) v.push_back(x / kTwoPi);
    d["violations_hz"] = v;
    d["feasible"] = g.feasible;
    d["omega_high_active"] = g.omega_high_active;
    d["evaluations"] = g.evaluations;
    d["message"] = g.message;
    return d;
}

PipelineOptions out(const std::optional<std::filesystem::path>& dir) {
    PipelineOptions o;
    if (dir) o.out_dir = *dir;
    return o;
}

StateSpace siso(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::MatrixXd& c,
                const Eigen::MatrixXd& d) {
    StateSpace s{a, b, c, d};
    s.validate();
    if (s.inputs() != 1 || s.outputs() != 1) throw InputError("expected a single-input single-output system");
    return s;
}

TuningOptions tuning(double alpha, double zeta_lp, const std::string& mode, double max_sensitivity) {
    TuningOptions t;
    t.alpha = alpha;
    t.zeta_lp = zeta_lp;
    t.mode = mapping_mode_from_string(mode);
    t.max_sensitivity = max_sensitivity;
    return t;
}

py::dict tuning_dict(const TuningResult& r) {
    py::dict d;
    d["feasible"] = r.feasible;
    d["reason"] = r.reason;
    d["bandwidth_hz"] = r.metrics.bandwidth / kTwoPi;
    d["max_sensitivity"] = r.metrics.sensitivity_peak;
    d["stable"] = r.metrics.stable;
    d["controller"] = controller_dict(r.controller);
    return d;
}

}  // namespace

PYBIND11_MODULE(_flexstage, m) {
    m.doc() = "Structure-control co-design of rib-stiffened stages";

    static py::exception<Error> base(m, "FlexstageError", PyExc_RuntimeError);
    static py::exception<InputError> config_error(m, "ConfigError", base.ptr());
    static py::exception<InfeasibleError> infeasible(m, "InfeasibleError", base.ptr());
    static py::exception<NumericalError> numerical(m, "NumericalError", base.ptr());
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            switch (e.code()) {
                case ExitCode::config_error: config_error(e.what()); break;
                case ExitCode::infeasible_design: infeasible(e.what()); break;
                case ExitCode::numerical_failure: numerical(e.what()); break;
                default: base(e.what()); break;
            }
        }
    });

    py::class_<PipelineConfig>(m, "Config")
        .def_readwrite("name", &PipelineConfig::name)
        .def_readwrite("seed", &PipelineConfig::seed)
        .def_readwrite("resolution", &PipelineConfig::resolution)
        .def_readwrite("omega_low_hz", &PipelineConfig::omega_low_hz)
        .def_readwrite("omega_high_hz", &PipelineConfig::omega_high_hz)
        .def_property(
            "max_evaluations", [](const PipelineConfig& c) { return c.optimizer.max_evaluations; },
            [](PipelineConfig& c, int v) { c.optimizer.max_evaluations = v; })
        .def_property(
            "target_bandwidth_hz", [](const PipelineConfig& c) { return c.controller.target_bandwidth_hz; },
            [](PipelineConfig& c, double v) { c.controller.target_bandwidth_hz = v; })
        .def_property(
            "gamma", [](const PipelineConfig& c) { return c.placement.gamma; },
            [](PipelineConfig& c, double v) { c.placement.gamma = v; })
        .def_property_readonly("init", [](const PipelineConfig& c) { return params_dict(c.stage.params); })
        .def_property_readonly("has_sweep", [](const PipelineConfig& c) { return c.sweep.has_value(); })
        .def("validate", &PipelineConfig::validate)
        .def("__repr__", [](const PipelineConfig& c) { return "<flexstage.Config '" + c.name + "'>"; });

    m.def("load_config", &load_config, py::arg("path"), "Reads and validates a JSON configuration file.");
    m.def("parse_config", &parse_config, py::arg("text"), "Parses and validates JSON configuration text.");

    m.def(
        "analyze",
        [](const PipelineConfig& cfg, std::optional<py::dict> params, int modes) {
            const DesignContext ctx = cfg.context();
            const GeometryParams p = params ? dict_params(*params, cfg.stage.params) : cfg.stage.params;
            const StageGeometry g = build_geometry(with_params(ctx.base, p), cfg.bounds);
            const ModalModel modal = analyze_stage(g, ctx, modes);
            py::dict d;
            d["mass_kg"] = total_mass(g, ctx.material);
            d["rigid_count"] = modal.rigid_count;
            d["frequencies_hz"] = Eigen::VectorXd(modal.frequencies / kTwoPi);
            return d;
        },
        py::arg("config"), py::arg("params") = py::none(), py::arg("modes") = 10,
        "Modal analysis of the configured stage; returns mass and frequencies in Hz.");

    m.def(
        "optimize_geometry",
        [](const PipelineConfig& cfg) {
            return geometry_dict(
                optimize_geometry(cfg.bounds, cfg.constraints(), cfg.stage.params, cfg.context(), cfg.optimizer));
        },
        py::arg("config"), "Mass minimization under the configured band constraints.");

    m.def(
        "run_pipeline",
        [](const PipelineConfig& cfg, std::optional<std::filesystem::path> dir) {
            DesignReport r;
            {
                py::gil_scoped_release release;
                r = run_pipeline(cfg, out(dir));
            }
            return report_dict(r);
        },
        py::arg("config"), py::arg("out_dir") = py::none(), "Geometry, placement, plant and control stages.");

    m.def(
        "run_baseline",
        [](const PipelineConfig& cfg, std::optional<std::filesystem::path> dir) {
            DesignReport r;
            {
                py::gil_scoped_release release;
                r = run_baseline(cfg, out(dir));
            }
            return report_dict(r);
        },
        py::arg("config"), py::arg("out_dir") = py::none(), "Rigid-body-only reference design.");

    m.def(
        "evaluate_design",
        [](const PipelineConfig& cfg, const py::dict& params, std::optional<std::filesystem::path> dir) {
            const GeometryParams p = dict_params(params, cfg.stage.params);
            DesignReport r;
            {
                py::gil_scoped_release release;
                r = evaluate_design(cfg, p, out(dir));
            }
            return report_dict(r);
        },
        py::arg("config"), py::arg("params"), py::arg("out_dir") = py::none(),
        "Placement, plant and control stages for a given geometry.");

    m.def("modal_grammian", &modal_grammian, py::arg("values"), py::arg("zeta"), py::arg("omega"),
          "Closed-form modal grammian sum(values^2) / (4 zeta omega).");

    m.def(
        "tune_gain",
        [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::MatrixXd& c, const Eigen::MatrixXd& d,
           double bandwidth_hz, double alpha, double zeta_lp, const std::string& mode, double max_sensitivity) {
            return tuning_dict(tune_gain(siso(a, b, c, d), kTwoPi * bandwidth_hz,
                                         tuning(alpha, zeta_lp, mode, max_sensitivity)));
        },
        py::arg("a"), py::arg("b"), py::arg("c"), py::arg("d"), py::arg("bandwidth_hz"), py::arg("alpha") = 0.3,
        py::arg("zeta_lp") = 0.7, py::arg("mapping_mode") = "loopshaping", py::arg("max_sensitivity") = 2.0,
        "Controller gain giving unity loop gain at the bandwidth, with its loop metrics.");

    m.def(
        "max_bandwidth",
        [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::MatrixXd& c, const Eigen::MatrixXd& d,
           double lo_hz, double hi_hz, double alpha, double zeta_lp, const std::string& mode, double max_sensitivity) {
            return tuning_dict(max_bandwidth(siso(a, b, c, d), kTwoPi * lo_hz, kTwoPi * hi_hz,
                                             tuning(alpha, zeta_lp, mode, max_sensitivity)));
        },
        py::arg("a"), py::arg("b"), py::arg("c"), py::arg("d"), py::arg("lo_hz"), py::arg("hi_hz"),
        py::arg("alpha") = 0.3, py::arg("zeta_lp") = 0.7, py::arg("mapping_mode") = "loopshaping",
        py::arg("max_sensitivity") = 2.0, "Largest feasible bandwidth in [lo_hz, hi_hz].");

    m.def(
        "compare_reports",
        [](const std::filesystem::path& proposed, const std::filesystem::path& baseline) {
            py::list rows;
            for (const auto& r : compare(read_report_json(proposed), read_report_json(baseline))) {
                py::dict d;
                d["metric"] = r.metric;
                d["baseline"] = r.baseline ? py::cast(*r.baseline) : py::none();
                d["proposed"] = r.proposed ? py::cast(*r.proposed) : py::none();
                rows.append(d);
            }
            return rows;
        },
        py::arg("proposed"), py::arg("baseline"), "Metric rows from two report.json files.");
}
