#include "flexstage/config.hpp"

#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "flexstage/errors.hpp"
#include "json_util.hpp"

namespace flexstage {

double MagnetSpec::rotary_inertia() const {
    const double m = mass();
    const double ix = m * (size_y * size_y + thickness * thickness) / 12.0;
    const double iy = m * (size_x * size_x + thickness * thickness) / 12.0;
    return 0.5 * (ix + iy);
}

std::vector<PointMass> MagnetSpec::point_masses() const {
    std::vector<PointMass> out;
    for (const auto& p : locations) out.push_back({mass(), rotary_inertia(), p.x, p.y});
    return out;
}

FrequencyConstraints PipelineConfig::constraints() const {
    const double tp = 2.0 * std::numbers::pi;
    return {tp * omega_low_hz, tp * omega_high_hz, controlled_modes, constrained_modes};
}

DesignContext PipelineConfig::context() const {
    DesignContext ctx;
    ctx.base = stage;
    if (magnets) {
        const auto pm = magnets->point_masses();
        ctx.base.point_masses.insert(ctx.base.point_masses.end(), pm.begin(), pm.end());
    }
    ctx.material = material;
    ctx.resolution = resolution;
    ctx.assembly = assembly;
    ctx.modal.eigen.seed = seed;
    return ctx;
}

std::vector<Point2> PipelineConfig::fixed_actuators() const {
    if (!magnets || magnets->locations.empty())
        throw InputError("config: actuators fixed at magnets but no magnets are defined");
    return magnets->locations;
}

void PipelineConfig::validate() const {
    material.validate();
    bounds.validate();
    if (resolution < 4) throw InputError("config: mesh.resolution must be at least 4");
    constraints().validate();
    placement.validate();
    if (devices < 1) throw InputError("config: placement.devices must be positive");
    if (plant.flexible_modes < controlled_modes)
        throw InputError("config: plant must retain every controlled flexible mode");
    if (!(controller.target_bandwidth_hz > 0.0)) throw InputError("config: target bandwidth must be positive");
    if (!(controller.search_min_hz > 0.0 && controller.search_min_hz <= controller.target_bandwidth_hz))
        throw InputError("config: controller.search_min_hz must lie in (0, target]");
    if (actuator_mode == ActuatorMode::fixed_at_magnets) {
        const auto fixed = fixed_actuators();
        if (static_cast<int>(fixed.size()) != devices)
            throw InputError("config: number of magnets must equal placement.devices");
    }
    auto inside = [&](Point2 p, const char* what) {
        if (std::abs(p.x) > 0.5 * stage.side_x + 1e-12 || std::abs(p.y) > 0.5 * stage.side_y + 1e-12)
            throw InputError(std::string("config: ") + what + " location outside planform");
    };
    if (magnets)
        for (const auto& p : magnets->locations) inside(p, "magnet");
    for (const auto& p : baseline.devices) inside(p, "baseline device");
    if (baseline.devices.size() != 3) throw InputError("config: baseline needs exactly 3 devices");
    if (sweep) {
        SweepSpec s{sweep->start_hz, sweep->stop_hz, sweep->step_hz, sweep->warm_start};
        (void)sweep_levels(s);
    }
    if (grid.points < 2 || !(grid.min_hz > 0.0) || !(grid.max_hz > grid.min_hz))
        throw InputError("config: invalid frequency_grid");
    (void)build_geometry(stage, bounds);
}

namespace {

using nlohmann::json;

// Object view that rejects unknown keys and reports the offending path.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail("must be an object");
    }
    ~Section() = default;

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key);
    }

    template <typename T>
    T get(const std::string& key, T fallback) {
        if (!has(key)) return fallback;
        return as<T>(j_.at(key), key);
    }

    template <typename T>
    T require(const std::string& key) {
        if (!has(key)) fail("missing required key '" + key + "'");
        return as<T>(j_.at(key), key);
    }

    Section sub(const std::string& key) {
        if (!has(key)) fail("missing required section '" + key + "'");
        return Section(j_.at(key), path_ + "." + key);
    }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) fail("unknown key '" + it.key() + "'");
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw InputError("config: " + path_ + ": " + msg);
    }

    const std::string& path() const { return path_; }

private:
    template <typename T>
    T as(const json& v, const std::string& key) const {
        try {
            if constexpr (std::is_same_v<T, double>) {
                if (!v.is_number()) throw std::runtime_error("expected a number");
            } else if constexpr (std::is_same_v<T, int> || std::is_same_v<T, std::uint64_t>) {
                if (!v.is_number_integer()) throw std::runtime_error("expected an integer");
            } else if constexpr (std::is_same_v<T, bool>) {
                if (!v.is_boolean()) throw std::runtime_error("expected true or false");
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v.is_string()) throw std::runtime_error("expected a string");
            }
            return v.get<T>();
        } catch (const std::exception& e) {
            fail("key '" + key + "': " + e.what());
        }
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

GeometryParams read_params(Section s, const GeometryParams& fallback) {
    GeometryParams p = fallback;
    auto arr = p.to_array();
    for (std::size_t i = 0; i < arr.size(); ++i) arr[i] = s.get<double>(GeometryParams::names()[i], arr[i]);
    s.finish();
    return GeometryParams::from_array(arr);
}

std::vector<Point2> read_points(const json& j, const std::string& path) {
    if (!j.is_array()) throw InputError("config: " + path + ": expected an array of [x, y] pairs");
    std::vector<Point2> out;
    for (const auto& e : j) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
            throw InputError("config: " + path + ": expected an array of [x, y] pairs");
        out.push_back({e[0].get<double>(), e[1].get<double>()});
    }
    return out;
}

std::vector<int> read_ints(const json& j, const std::string& path) {
    if (!j.is_array()) throw InputError("config: " + path + ": expected an integer array");
    std::vector<int> out;
    for (const auto& e : j) {
        if (!e.is_number_integer()) throw InputError("config: " + path + ": expected an integer array");
        out.push_back(e.get<int>());
    }
    return out;
}

}  // namespace

PipelineConfig parse_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("config: invalid JSON: ") + e.what());
    }
    PipelineConfig cfg;
    Section root(doc, "$");
    cfg.name = root.get<std::string>("name", cfg.name);
    cfg.seed = root.get<std::uint64_t>("seed", cfg.seed);

    if (root.has("material")) {
        Section s = root.sub("material");
        cfg.material.youngs_modulus = s.get("youngs_modulus", cfg.material.youngs_modulus);
        cfg.material.poisson_ratio = s.get("poisson_ratio", cfg.material.poisson_ratio);
        cfg.material.density = s.get("density", cfg.material.density);
        s.finish();
    }
    {
        Section s = root.sub("stage");
        cfg.stage.side_x = s.get("side_x", cfg.stage.side_x);
        cfg.stage.side_y = s.get("side_y", cfg.stage.side_y);
        cfg.stage.rib_count_x = s.get("rib_count_x", cfg.stage.rib_count_x);
        cfg.stage.rib_count_y = s.get("rib_count_y", cfg.stage.rib_count_y);
        s.finish();
    }
    {
        Section g = root.sub("geometry");
        cfg.stage.params = read_params(g.sub("init"), cfg.stage.params);
        Section b = g.sub("bounds");
        cfg.bounds.min = read_params(b.sub("min"), cfg.stage.params);
        cfg.bounds.max = read_params(b.sub("max"), cfg.stage.params);
        b.finish();
        g.finish();
    }
    if (root.has("mesh")) {
        Section s = root.sub("mesh");
        cfg.resolution = s.get("resolution", cfg.resolution);
        const std::string shear = s.get<std::string>("shear", "mitc4");
        if (shear == "mitc4")
            cfg.assembly.shear = ShearTreatment::mitc4;
        else if (shear == "selective-reduced")
            cfg.assembly.shear = ShearTreatment::selective_reduced;
        else
            s.fail("shear must be 'mitc4' or 'selective-reduced'");
        cfg.assembly.rib_torsion_correction = s.get("rib_torsion_correction", true);
        s.finish();
    }
    {
        Section s = root.sub("constraints");
        cfg.omega_low_hz = s.get("omega_low_hz", cfg.omega_low_hz);
        cfg.omega_high_hz = s.get("omega_high_hz", cfg.omega_high_hz);
        cfg.controlled_modes = s.get("n", cfg.controlled_modes);
        cfg.constrained_modes = s.get("m", cfg.constrained_modes);
        s.finish();
    }
    if (root.has("sweep")) {
        Section s = root.sub("sweep");
        SweepConfig sw;
        sw.start_hz = s.require<double>("omega_high_start_hz");
        sw.stop_hz = s.require<double>("omega_high_stop_hz");
        sw.step_hz = s.get("step_hz", sw.step_hz);
        sw.warm_start = s.get("warm_start", sw.warm_start);
        if (s.has("select_omega_high_hz")) sw.select_hz = s.require<double>("select_omega_high_hz");
        s.finish();
        cfg.sweep = sw;
    }
    if (root.has("optimizer")) {
        Section s = root.sub("optimizer");
        cfg.optimizer.max_evaluations = s.get("max_evaluations", cfg.optimizer.max_evaluations);
        cfg.optimizer.initial_step = s.get("initial_step", cfg.optimizer.initial_step);
        cfg.optimizer.tolerance = s.get("tolerance", cfg.optimizer.tolerance);
        cfg.optimizer.polish = s.get("polish", cfg.optimizer.polish);
        if (s.has("penalty_schedule")) {
            const json& j = s.raw("penalty_schedule");
            if (!j.is_array() || j.empty()) s.fail("penalty_schedule must be a non-empty array");
            cfg.optimizer.penalty_schedule.clear();
            for (const auto& v : j) {
                if (!v.is_number()) s.fail("penalty_schedule must hold numbers");
                cfg.optimizer.penalty_schedule.push_back(v.get<double>());
            }
        }
        s.finish();
    }
    if (root.has("placement")) {
        Section s = root.sub("placement");
        cfg.placement.gamma = s.get("gamma", cfg.placement.gamma);
        if (s.has("controlled_modes"))
            cfg.placement.controlled = read_ints(s.raw("controlled_modes"), s.path() + ".controlled_modes");
        if (s.has("uncontrolled_modes"))
            cfg.placement.uncontrolled =
                read_ints(s.raw("uncontrolled_modes"), s.path() + ".uncontrolled_modes");
        cfg.devices = s.get("devices", cfg.devices);
        cfg.symmetric = s.get("symmetric", cfg.symmetric);
        const std::string act = s.get<std::string>("actuators", "optimized");
        if (act == "optimized")
            cfg.actuator_mode = ActuatorMode::optimized;
        else if (act == "fixed-at-magnets")
            cfg.actuator_mode = ActuatorMode::fixed_at_magnets;
        else
            s.fail("actuators must be 'optimized' or 'fixed-at-magnets'");
        if (s.has("domain")) {
            Section d = s.sub("domain");
            cfg.domain.full_planform = false;
            cfg.domain.x_min = d.require<double>("x_min");
            cfg.domain.x_max = d.require<double>("x_max");
            cfg.domain.y_min = d.require<double>("y_min");
            cfg.domain.y_max = d.require<double>("y_max");
            d.finish();
        }
        s.finish();
    }
    if (root.has("magnets")) {
        Section s = root.sub("magnets");
        MagnetSpec m;
        m.size_x = s.get("size_x", m.size_x);
        m.size_y = s.get("size_y", m.size_y);
        m.thickness = s.get("thickness", m.thickness);
        m.density = s.get("density", m.density);
        m.locations = read_points(s.raw("locations"), s.path() + ".locations");
        s.finish();
        if (!(m.size_x > 0 && m.size_y > 0 && m.thickness > 0 && m.density > 0))
            throw InputError("config: magnets need positive size, thickness and density");
        cfg.magnets = m;
    }
    if (root.has("plant")) {
        Section s = root.sub("plant");
        cfg.plant.flexible_modes = s.get("flexible_modes", cfg.plant.flexible_modes);
        cfg.plant.damping_ratio = s.get("damping_ratio", cfg.plant.damping_ratio);
        s.finish();
    }
    cfg.placement.damping_ratio = cfg.plant.damping_ratio;
    if (root.has("controller")) {
        Section s = root.sub("controller");
        auto& c = cfg.controller;
        c.alpha = s.get("alpha", c.alpha);
        c.zeta_lp = s.get("zeta_lp", c.zeta_lp);
        c.mode = mapping_mode_from_string(s.get<std::string>("mapping_mode", "loopshaping"));
        c.target_bandwidth_hz = s.get("target_bandwidth_hz", c.target_bandwidth_hz);
        const std::string pol = s.get<std::string>("bandwidth_policy", "max");
        if (pol == "max")
            c.policy = BandwidthPolicy::max;
        else if (pol == "target")
            c.policy = BandwidthPolicy::target;
        else
            s.fail("bandwidth_policy must be 'max' or 'target'");
        c.search_min_hz = s.get("search_min_hz", c.search_min_hz);
        c.max_sensitivity = s.get("max_sensitivity", c.max_sensitivity);
        s.finish();
    }
    if (root.has("frequency_grid")) {
        Section s = root.sub("frequency_grid");
        cfg.grid.min_hz = s.get("min_hz", cfg.grid.min_hz);
        cfg.grid.max_hz = s.get("max_hz", cfg.grid.max_hz);
        cfg.grid.points = s.get("points", cfg.grid.points);
        s.finish();
    }
    if (root.has("baseline")) {
        Section s = root.sub("baseline");
        cfg.baseline.design_bandwidth_hz = s.get("design_bandwidth_hz", cfg.baseline.design_bandwidth_hz);
        cfg.baseline.resonance_factor = s.get("resonance_factor", cfg.baseline.resonance_factor);
        if (s.has("devices")) cfg.baseline.devices = read_points(s.raw("devices"), s.path() + ".devices");
        s.finish();
    }
    root.finish();
    cfg.validate();
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("config: cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace flexstage
