#include "flexstage/geometry_opt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>

#include "flexstage/errors.hpp"
#include "flexstage/format.hpp"
#include "flexstage/mesh.hpp"
#include "flexstage/nelder_mead.hpp"
#include "json_util.hpp"

namespace flexstage {

void FrequencyConstraints::validate() const {
    if (n < 0 || m < 1 || n >= m) throw InputError("frequency constraints need 0 <= n < m");
    if (!(omega_high > 0.0)) throw InputError("omega_high must be positive");
    if (n > 0 && !(omega_low > 0.0 && omega_low < omega_high))
        throw InputError("frequency constraints need 0 < omega_low < omega_high");
}

GeometryInput with_params(const GeometryInput& base, const GeometryParams& params) {
    GeometryInput in = base;
    in.params = params;
    return in;
}

ModalModel analyze_stage(const StageGeometry& geometry, const DesignContext& ctx, int flexible_modes) {
    auto mesh = std::make_shared<const Mesh>(mesh_stage(geometry, ctx.resolution));
    const SystemMatrices sys = assemble(mesh, ctx.material, geometry.point_masses(), ctx.assembly);
    return solve_modes(sys, 3 + flexible_modes, ctx.modal);
}

namespace {

constexpr int kRestarts = 4;

std::vector<double> violations_from(const ModalModel& modal, const FrequencyConstraints& c) {
    if (modal.flexible_count() < c.m) throw NumericalError("too few flexible modes were resolved");
    std::vector<double> v;
    for (int i = 1; i <= c.n; ++i) v.push_back(modal.flexible_frequency(i) - c.omega_low);
    for (int j = c.n + 1; j <= c.m; ++j) v.push_back(c.omega_high - modal.flexible_frequency(j));
    return v;
}

}  // namespace

std::vector<double> constraint_values(const StageGeometry& geometry, const FrequencyConstraints& c,
                                      const DesignContext& ctx) {
    c.validate();
    return violations_from(analyze_stage(geometry, ctx, c.m), c);
}

std::vector<double> relative_violations(const std::vector<double>& v, const FrequencyConstraints& c) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        out[i] = v[i] / (static_cast<int>(i) < c.n ? c.omega_low : c.omega_high);
    return out;
}

namespace {

using Vec = std::array<double, GeometryParams::size>;

struct Trial {
    bool valid = false;
    double mass = 0.0;
    std::vector<double> rel;  // relative violations
    std::vector<double> raw;
    Eigen::VectorXd freqs;
    std::string error;

    double worst() const {
        double w = -INFINITY;
        for (double r : rel) w = std::max(w, r);
        return w;
    }
};

class GeometryProblem {
public:
    GeometryProblem(const GeometryBounds& b, const FrequencyConstraints& c, const DesignContext& ctx)
        : bounds_(b), c_(c), ctx_(ctx), lo_(b.min.to_array()), hi_(b.max.to_array()) {}

    Vec to_params(const std::vector<double>& u) const {
        Vec p{};
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double t = std::clamp(u[i], 0.0, 1.0);
            p[i] = lo_[i] + t * (hi_[i] - lo_[i]);
        }
        return p;
    }

    std::vector<double> to_unit(const Vec& p) const {
        std::vector<double> u(p.size());
        for (std::size_t i = 0; i < p.size(); ++i)
            u[i] = hi_[i] > lo_[i] ? (p[i] - lo_[i]) / (hi_[i] - lo_[i]) : 0.0;
        return u;
    }

    const Trial& trial(const Vec& p) {
        auto it = cache_.find(p);
        if (it != cache_.end()) return it->second;
        ++evaluations;
        Trial t;
        try {
            const StageGeometry g = build_geometry(with_params(ctx_.base, GeometryParams::from_array(p)), bounds_);
            const ModalModel modal = analyze_stage(g, ctx_, c_.m);
            t.raw = violations_from(modal, c_);
            t.rel = relative_violations(t.raw, c_);
            t.mass = total_mass(g, ctx_.material);
            t.freqs.resize(c_.m);
            for (int k = 1; k <= c_.m; ++k) t.freqs(k - 1) = modal.flexible_frequency(k);
            t.valid = true;
        } catch (const Error& e) {
            t.error = e.what();
        }
        auto [pos, inserted] = cache_.emplace(p, std::move(t));
        record(pos->first, pos->second);
        return pos->second;
    }

    double penalized(const std::vector<double>& u, double mu) {
        double outside = 0.0;
        for (double v : u) outside += std::max(0.0, -v) + std::max(0.0, v - 1.0);
        const Trial& t = trial(to_params(u));
        if (!t.valid) return 1e6 * (1.0 + outside);
        double pen = 0.0;
        for (double r : t.rel) pen += std::max(0.0, r);
        return t.mass / mass_ref + mu * (pen + outside);
    }

    bool strictly_feasible(const Trial& t) const { return t.valid && t.worst() <= 0.0; }

    void record(const Vec& p, const Trial& t) {
        if (!t.valid) return;
        if (t.worst() <= 0.0 && (!best_strict || t.mass < cache_.at(*best_strict).mass))
            best_strict = p;
        if (t.worst() <= tolerance && (!best_tol || t.mass < cache_.at(*best_tol).mass)) best_tol = p;
        if (!least_violated || t.worst() < cache_.at(*least_violated).worst()) least_violated = p;
    }

    const Trial& at(const Vec& p) const { return cache_.at(p); }

    int evaluations = 0;
    double mass_ref = 1.0;
    double tolerance = 0.01;
    std::optional<Vec> best_strict, best_tol, least_violated;
    const Vec& lo() const { return lo_; }

private:
    const GeometryBounds& bounds_;
    FrequencyConstraints c_;
    const DesignContext& ctx_;
    Vec lo_, hi_;
    std::map<Vec, Trial> cache_;
};

Vec lerp(const Vec& a, const Vec& b, double t) {
    Vec out{};
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + t * (b[i] - a[i]);
    return out;
}

// Largest t in [0, 1] with lerp(from, to, t) strictly feasible, assuming t = 0 is.
Vec bisect_feasible(GeometryProblem& prob, const Vec& from, const Vec& to, int iterations) {
    if (prob.strictly_feasible(prob.trial(to))) return to;
    double a = 0.0, b = 1.0;
    for (int k = 0; k < iterations; ++k) {
        const double mid = 0.5 * (a + b);
        if (prob.strictly_feasible(prob.trial(lerp(from, to, mid))))
            a = mid;
        else
            b = mid;
    }
    return lerp(from, to, a);
}

}  // namespace

GeometryResult optimize_geometry(const GeometryBounds& bounds, const FrequencyConstraints& c,
                                 const GeometryParams& init, const DesignContext& ctx,
                                 const GeometryOptOptions& opt) {
    bounds.validate();
    c.validate();
    (void)build_geometry(with_params(ctx.base, init), bounds);
    if (opt.max_evaluations < 10) throw InputError("geometry optimization budget is too small");

    GeometryProblem prob(bounds, c, ctx);
    prob.tolerance = opt.tolerance;
    const Vec p0 = init.to_array();
    const Trial& t0 = prob.trial(p0);
    if (!t0.valid) throw NumericalError("initial design could not be analyzed: " + t0.error);
    prob.mass_ref = t0.mass;

    const int polish_reserve = opt.polish ? std::min(30, opt.max_evaluations / 5) : 0;
    std::vector<double> u = prob.to_unit(p0);
    const auto stages = opt.penalty_schedule.size();
    for (std::size_t stage = 0; stage < stages; ++stage) {
        const double mu = opt.penalty_schedule[stage];
        const int stage_end =
            prob.evaluations + (opt.max_evaluations - polish_reserve - prob.evaluations) /
                                   static_cast<int>(stages - stage);
        double step = opt.initial_step;
        double last = INFINITY;
        for (int restart = 0; restart < kRestarts; ++restart) {
            const int left = stage_end - prob.evaluations;
            if (left <= 6) break;
            NelderMeadOptions nm;
            nm.max_evaluations = left;
            nm.initial_step = step;
            nm.x_tolerance = 1e-4;
            nm.f_tolerance = 1e-7;
            NelderMeadResult r =
                nelder_mead([&](const std::vector<double>& x) { return prob.penalized(x, mu); }, u, nm);
            u = r.x;
            for (double& v : u) v = std::clamp(v, 0.0, 1.0);
            if (!(r.value < last - 1e-7 * std::abs(last))) break;
            last = r.value;
            step *= 0.5;
        }
    }

    Vec chosen = prob.to_params(u);
    if (prob.best_strict) {
        const Vec feasible = *prob.best_strict;
        chosen = feasible;
        if (opt.polish) {
            const int iters = 8;
            if (prob.evaluations + iters <= opt.max_evaluations && chosen != prob.to_params(u))
                chosen = bisect_feasible(prob, chosen, prob.to_params(u), iters);
            if (prob.evaluations + 12 <= opt.max_evaluations)
                chosen = bisect_feasible(prob, chosen, prob.lo(), 12);
            if (prob.at(*prob.best_strict).mass < prob.at(chosen).mass) chosen = *prob.best_strict;
        }
    } else if (prob.best_tol) {
        chosen = *prob.best_tol;
    } else if (prob.least_violated) {
        chosen = *prob.least_violated;
    }

    const Trial& t = prob.trial(chosen);
    GeometryResult res;
    res.params = GeometryParams::from_array(chosen);
    res.evaluations = prob.evaluations;
    if (!t.valid) {
        res.message = "no analyzable design found: " + t.error;
        return res;
    }
    res.mass = t.mass;
    res.flexible_frequencies = t.freqs;
    res.violations = t.raw;
    res.feasible = t.worst() <= opt.tolerance;
    for (std::size_t i = static_cast<std::size_t>(c.n); i < t.rel.size(); ++i)
        if (std::abs(t.rel[i]) <= opt.tolerance) res.omega_high_active = true;
    if (!res.feasible) {
        std::string detail = "no feasible design within " + std::to_string(opt.max_evaluations) +
                             " evaluations; best iterate violations [Hz]:";
        for (std::size_t i = 0; i < t.raw.size(); ++i) {
            const int mode = static_cast<int>(i) + 1;
            detail += " mode " + std::to_string(mode) + ": " +
                      fmt_double(t.raw[i] / (2.0 * std::numbers::pi));
        }
        // Thickest section at the best iterate's rib pitch.
        Vec top = chosen;
        const Vec hi = bounds.max.to_array();
        for (std::size_t i = 0; i < 3; ++i) top[i] = hi[i];
        const Trial& stiff = prob.trial(top);
        if (stiff.valid)
            for (std::size_t i = static_cast<std::size_t>(c.n); i < stiff.rel.size(); ++i)
                if (stiff.rel[i] > opt.tolerance)
                    detail += "; bounds infeasible: flexible mode " + std::to_string(i + 1) +
                              " stays below omega_high at the maximum-thickness design";
        res.message = detail;
    }
    return res;
}

std::vector<double> sweep_levels(const SweepSpec& s) {
    if (!(s.step > 0.0) || !(s.omega_high_stop > 0.0) || s.omega_high_stop > s.omega_high_start)
        throw InputError("sweep needs start >= stop > 0 and a positive step");
    const int count = static_cast<int>(std::floor((s.omega_high_start - s.omega_high_stop) / s.step + 1e-9)) + 1;
    std::vector<double> out;
    for (int k = 0; k < count; ++k) out.push_back(s.omega_high_start - k * s.step);
    return out;
}

std::vector<SweepRecord> sweep_omega_high(const SweepSpec& spec, const GeometryBounds& bounds,
                                          const FrequencyConstraints& tmpl, const GeometryParams& init,
                                          const DesignContext& ctx, const SweepPlacement& place,
                                          const GeometryOptOptions& opt) {
    std::vector<SweepRecord> out;
    GeometryParams start = init;
    for (double wh : sweep_levels(spec)) {
        SweepRecord rec;
        rec.omega_high = wh;
        FrequencyConstraints c = tmpl;
        c.omega_high = wh;
        try {
            rec.design = optimize_geometry(bounds, c, spec.warm_start ? start : init, ctx, opt);
            if (!rec.design.feasible) throw InfeasibleError(rec.design.message);
            const StageGeometry g = build_geometry(with_params(ctx.base, rec.design.params), bounds);
            const ModalModel modal = analyze_stage(g, ctx, place.flexible_modes);
            const PlacementSolution sensors =
                optimize_placement(modal, place.domain, place.objective, place.device_count, place.symmetric);
            rec.sensors = sensors.locations;
            rec.jo = sensors.objective;
            if (place.fixed_actuators) {
                rec.actuators = *place.fixed_actuators;
                rec.ja = placement_objective(rec.actuators, place.objective, modal);
            } else {
                rec.actuators = sensors.locations;
                rec.ja = sensors.objective;
            }
            rec.feasible = true;
            if (spec.warm_start) start = rec.design.params;
        } catch (const Error& e) {
            rec.feasible = false;
            rec.error = e.what();
        }
        out.push_back(std::move(rec));
    }
    return out;
}

double sweep_level_hz(double omega_high) {
    return std::round(omega_high / (2.0 * std::numbers::pi) * 1e9) / 1e9;
}

void write_sweep_csv(const std::vector<SweepRecord>& records, const std::filesystem::path& path) {
    std::ofstream f(path);
    if (!f) throw InputError("cannot open output file " + path.string());
    f << "omega_high_hz,mass_kg,ja_plus_jo";
    for (const char* n : GeometryParams::names()) f << ',' << n;
    f << ",feasible\n";
    for (const auto& r : records) {
        f << fmt_double(sweep_level_hz(r.omega_high)) << ',' << fmt_double(r.design.mass)
          << ',' << fmt_double(r.ja_plus_jo());
        for (double v : r.design.params.to_array()) f << ',' << fmt_double(v);
        f << ',' << (r.feasible ? 1 : 0) << '\n';
    }
}

void write_sweep_json(const std::vector<SweepRecord>& records, const std::filesystem::path& path) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : records) {
        nlohmann::json e;
        e["omega_high_hz"] = sweep_level_hz(r.omega_high);
        nlohmann::json params;
        const auto v = r.design.params.to_array();
        for (std::size_t i = 0; i < v.size(); ++i) params[GeometryParams::names()[i]] = v[i];
        e["theta_p"] = params;
        e["mass_kg"] = r.design.mass;
        e["flexible_frequencies_hz"] = detail::vector_json(r.design.flexible_frequencies / two_pi);
        e["feasible"] = r.feasible;
        e["ja"] = r.ja;
        e["jo"] = r.jo;
        nlohmann::json act = nlohmann::json::array(), sen = nlohmann::json::array();
        for (const auto& p : r.actuators) act.push_back({p.x, p.y});
        for (const auto& p : r.sensors) sen.push_back({p.x, p.y});
        e["actuators"] = act;
        e["sensors"] = sen;
        e["error"] = r.error;
        arr.push_back(e);
    }
    detail::write_json_file(arr, path);
}

void write_geometry_json(const GeometryResult& r, const FrequencyConstraints& c,
                         const std::filesystem::path& path) {
    nlohmann::json doc;
    nlohmann::json params;
    const auto arr = r.params.to_array();
    for (std::size_t i = 0; i < arr.size(); ++i) params[GeometryParams::names()[i]] = arr[i];
    doc["theta_p"] = params;
    doc["mass_kg"] = r.mass;
    nlohmann::json f = nlohmann::json::array();
    for (Eigen::Index i = 0; i < r.flexible_frequencies.size(); ++i)
        f.push_back(r.flexible_frequencies(i) / (2.0 * std::numbers::pi));
    doc["flexible_frequencies_hz"] = f;
    nlohmann::json v = nlohmann::json::array();
    for (double x : r.violations) v.push_back(x / (2.0 * std::numbers::pi));
    doc["violations_hz"] = v;
    doc["omega_low_hz"] = c.omega_low / (2.0 * std::numbers::pi);
    doc["omega_high_hz"] = c.omega_high / (2.0 * std::numbers::pi);
    doc["n"] = c.n;
    doc["m"] = c.m;
    doc["feasible"] = r.feasible;
    doc["omega_high_active"] = r.omega_high_active;
    doc["evaluations"] = r.evaluations;
    if (!r.message.empty()) doc["message"] = r.message;
    detail::write_json_file(doc, path);
}

}  // namespace flexstage
