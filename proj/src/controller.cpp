#include "flexstage/controller.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <vector>

#include <Eigen/Eigenvalues>

#include "flexstage/errors.hpp"
#include "flexstage/format.hpp"

namespace flexstage {

std::string to_string(MappingMode mode) {
    return mode == MappingMode::loopshaping ? "loopshaping" : "inverted";
}

MappingMode mapping_mode_from_string(const std::string& name) {
    if (name == "loopshaping") return MappingMode::loopshaping;
    if (name == "inverted") return MappingMode::inverted;
    throw InputError("unknown mapping_mode '" + name + "' (expected loopshaping or inverted)");
}

void ControllerParams::validate() const {
    if (!(omega_bw > 0.0)) throw InputError("controller bandwidth must be positive");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("controller alpha must lie in (0, 1)");
    if (!(zeta_lp > 0.0 && zeta_lp < 1.0)) throw InputError("low-pass damping must lie in (0, 1)");
    if (!(kp > 0.0) || !std::isfinite(kp)) throw InputError("controller gain must be positive");
    if (!(omega_int > 0.0 && omega_d > 0.0 && omega_lp > 0.0))
        throw InputError("controller corner frequencies must be positive");
}

Complex ControllerParams::evaluate(Complex s) const {
    const Complex pi = (s + omega_int) / s;
    const Complex lead = s / omega_d + 1.0;
    const Complex lp = omega_lp * omega_lp / (s * s + 2.0 * zeta_lp * omega_lp * s + omega_lp * omega_lp);
    return kp * pi * lead * lp;
}

StateSpace ControllerParams::realization() const {
    validate();
    StateSpace pi;
    pi.a = Eigen::MatrixXd::Zero(1, 1);
    pi.b = Eigen::MatrixXd::Ones(1, 1);
    pi.c = Eigen::MatrixXd::Constant(1, 1, omega_int);
    pi.d = Eigen::MatrixXd::Ones(1, 1);

    StateSpace lead = second_order(omega_lp, zeta_lp, omega_lp * omega_lp);
    lead.c(0, 1) = 1.0 / omega_d;

    StateSpace c = series(pi, lead);
    c.c *= kp;
    c.d *= kp;
    return c;
}

ControllerParams controller_from_bandwidth(double omega_bw, double alpha, double kp,
                                           MappingMode mode, double zeta_lp) {
    ControllerParams c;
    c.omega_bw = omega_bw;
    c.alpha = alpha;
    c.kp = kp;
    c.zeta_lp = zeta_lp;
    c.mode = mode;
    if (mode == MappingMode::loopshaping) {
        c.omega_int = alpha * alpha * omega_bw;
        c.omega_d = alpha * omega_bw;
        c.omega_lp = omega_bw / alpha;
    } else {
        c.omega_int = omega_bw / (alpha * alpha);
        c.omega_d = omega_bw / alpha;
        c.omega_lp = alpha * omega_bw;
    }
    c.validate();
    return c;
}

FrequencyResponse loop_gain(const FrequencyResponse& g, const ControllerParams& c) {
    if (g.inputs() != 1 || g.outputs() != 1) throw InputError("loop gain needs a SISO response");
    FrequencyResponse out = g;
    for (std::size_t i = 0; i < g.grid.size(); ++i)
        out.values[i](0, 0) = g.values[i](0, 0) * c.evaluate(Complex(0.0, g.grid[i]));
    return out;
}

LoopResponse loop_response(const StateSpace& g, const ControllerParams& c,
                           const std::vector<double>& grid) {
    const FrequencyResponse l = loop_gain(frequency_response(g, grid), c);
    LoopResponse r;
    r.grid = grid;
    for (const auto& v : l.values) {
        const Complex lv = v(0, 0);
        r.loop.push_back(lv);
        r.sensitivity.push_back(1.0 / (1.0 + lv));
        r.complementary.push_back(lv / (1.0 + lv));
    }
    return r;
}

void write_loop_csv(const LoopResponse& r, const std::filesystem::path& path) {
    std::ofstream f(path);
    if (!f) throw InputError("cannot open output file " + path.string());
    f << "frequency_hz,L_re,L_im,S_re,S_im,T_re,T_im\n";
    for (std::size_t i = 0; i < r.grid.size(); ++i) {
        f << fmt_double(r.grid[i] / (2.0 * std::numbers::pi));
        for (const auto* v : {&r.loop, &r.sensitivity, &r.complementary})
            f << ',' << fmt_double((*v)[i].real()) << ',' << fmt_double((*v)[i].imag());
        f << '\n';
    }
}

namespace {

bool eigenvalues_stable(const Eigen::VectorXcd& ev) {
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        const double mag = std::abs(ev(i));
        if (mag == 0.0 || !(ev(i).real() < -1e-10 * mag)) return false;
    }
    return true;
}

Eigen::VectorXcd system_poles(const StateSpace& s) {
    if (s.states() == 0) return {};
    Eigen::EigenSolver<Eigen::MatrixXd> es(s.a, false);
    if (es.info() != Eigen::Success) throw NumericalError("closed-loop eigenvalue computation failed");
    return es.eigenvalues();
}

double sens_mag(const StateSpace& g, const ControllerParams& c, double w) {
    const Complex s(0.0, w);
    return 1.0 / std::abs(1.0 + g.evaluate_siso(s) * c.evaluate(s));
}

}  // namespace

bool closed_loop_stable(const StateSpace& g, const StateSpace& k) {
    return eigenvalues_stable(system_poles(feedback(g, k)));
}

SensitivityPeak sensitivity_peak(const StateSpace& g, const ControllerParams& c, double reference,
                                 const SensitivityOptions& opt) {
    if (!(reference > 0.0)) throw InputError("sensitivity search needs a positive reference");
    if (!closed_loop_stable(g, c.realization()))
        throw InfeasibleError("closed loop is unstable; sensitivity peak undefined");

    const double l0 = std::log10(reference) - opt.decades_below;
    const double l1 = std::log10(reference) + opt.decades_above;
    const int n = std::max(2, static_cast<int>(std::ceil((l1 - l0) * opt.points_per_decade)) + 1);
    std::vector<double> logs;
    for (int i = 0; i < n; ++i) logs.push_back(l0 + (l1 - l0) * i / (n - 1));
    // Sample plant and controller pole frequencies explicitly.
    auto add_poles = [&](const StateSpace& s) {
        const Eigen::VectorXcd p = system_poles(s);
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            const double w = std::abs(p(i).imag());
            if (w > 0.0 && std::log10(w) > l0 && std::log10(w) < l1) logs.push_back(std::log10(w));
        }
    };
    add_poles(g);
    add_poles(feedback(g, c.realization()));
    std::sort(logs.begin(), logs.end());
    logs.erase(std::unique(logs.begin(), logs.end()), logs.end());

    std::vector<double> vals(logs.size());
    for (std::size_t i = 0; i < logs.size(); ++i) vals[i] = sens_mag(g, c, std::pow(10.0, logs[i]));

    std::vector<std::size_t> maxima;
    for (std::size_t i = 0; i < logs.size(); ++i) {
        const bool left = i == 0 || vals[i] >= vals[i - 1];
        const bool right = i + 1 == logs.size() || vals[i] >= vals[i + 1];
        if (left && right) maxima.push_back(i);
    }
    std::stable_sort(maxima.begin(), maxima.end(),
                     [&](std::size_t a, std::size_t b) { return vals[a] > vals[b]; });
    if (static_cast<int>(maxima.size()) > opt.peaks_refined) maxima.resize(opt.peaks_refined);

    SensitivityPeak best{-1.0, 0.0};
    for (std::size_t i = 0; i < logs.size(); ++i)
        if (vals[i] > best.value) best = {vals[i], std::pow(10.0, logs[i])};

    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    for (std::size_t idx : maxima) {
        double a = logs[idx == 0 ? 0 : idx - 1];
        double b = logs[std::min(idx + 1, logs.size() - 1)];
        // dense pass inside the bracket
        const int m = std::max(3, static_cast<int>(std::ceil((b - a) * opt.refined_points_per_decade)) + 1);
        double arg = logs[idx], top = vals[idx];
        for (int k = 0; k < m; ++k) {
            const double x = a + (b - a) * k / (m - 1);
            const double v = sens_mag(g, c, std::pow(10.0, x));
            if (v > top) {
                top = v;
                arg = x;
            }
        }
        const double h = (b - a) / (m - 1);
        a = std::max(a, arg - h);
        b = std::min(b, arg + h);
        double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
        double f1 = sens_mag(g, c, std::pow(10.0, x1)), f2 = sens_mag(g, c, std::pow(10.0, x2));
        const double ln_tol = std::log10(1.0 + opt.tolerance) * 1e-3;
        while (b - a > ln_tol) {
            if (f1 > f2) {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - phi * (b - a);
                f1 = sens_mag(g, c, std::pow(10.0, x1));
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + phi * (b - a);
                f2 = sens_mag(g, c, std::pow(10.0, x2));
            }
        }
        for (auto [x, v] : {std::pair{arg, top}, std::pair{x1, f1}, std::pair{x2, f2}})
            if (v > best.value) best = {v, std::pow(10.0, x)};
    }
    return best;
}

double crossover_frequency(const StateSpace& g, const ControllerParams& c, double from, double to) {
    if (!(from > 0.0 && to > from)) throw InputError("crossover search needs 0 < from < to");
    auto mag = [&](double lw) {
        const Complex s(0.0, std::pow(10.0, lw));
        return std::abs(g.evaluate_siso(s) * c.evaluate(s));
    };
    const double l0 = std::log10(from), l1 = std::log10(to);
    const int n = static_cast<int>(std::ceil((l1 - l0) * 200.0)) + 1;
    double prev_l = l0, prev = mag(l0);
    for (int i = 1; i < n; ++i) {
        const double l = l0 + (l1 - l0) * i / (n - 1);
        const double v = mag(l);
        if (prev >= 1.0 && v < 1.0) {
            double a = prev_l, b = l;
            for (int k = 0; k < 60; ++k) {
                const double mid = 0.5 * (a + b);
                if (mag(mid) >= 1.0)
                    a = mid;
                else
                    b = mid;
            }
            return std::pow(10.0, 0.5 * (a + b));
        }
        prev_l = l;
        prev = v;
    }
    return 0.0;
}

TuningResult tune_gain(const StateSpace& g, double omega_bw, const TuningOptions& opt) {
    TuningResult r;
    r.controller = controller_from_bandwidth(omega_bw, opt.alpha, 1.0, opt.mode, opt.zeta_lp);
    const Complex s(0.0, omega_bw);
    // Kp from |L(j w_bw)| = 1.
    const double unit = std::abs(g.evaluate_siso(s) * r.controller.evaluate(s));
    if (!(unit > 0.0) || !std::isfinite(unit)) {
        r.reason = "no gain achieves crossover at the target bandwidth";
        return r;
    }
    r.controller.kp = 1.0 / unit;

    r.metrics.stable = closed_loop_stable(g, r.controller.realization());
    if (!r.metrics.stable) {
        r.reason = "closed loop is unstable";
        return r;
    }
    const SensitivityPeak peak = sensitivity_peak(g, r.controller, omega_bw, opt.sensitivity);
    r.metrics.sensitivity_peak = peak.value;
    r.metrics.peak_frequency = peak.frequency;
    r.metrics.bandwidth = crossover_frequency(g, r.controller, omega_bw * 1e-2, omega_bw * 1e2);
    if (peak.value > opt.max_sensitivity) {
        r.reason = "sensitivity peak " + fmt_double(peak.value) + " exceeds " +
                   fmt_double(opt.max_sensitivity);
        return r;
    }
    r.feasible = true;
    return r;
}

TuningResult max_bandwidth(const StateSpace& g, double lo, double hi, const TuningOptions& opt) {
    if (!(lo > 0.0 && hi >= lo)) throw InputError("bandwidth search range must satisfy 0 < lo <= hi");
    TuningResult top = tune_gain(g, hi, opt);
    if (top.feasible) return top;

    const int coarse = std::max(2, static_cast<int>(std::ceil(std::log10(hi / lo) * 20.0)) + 1);
    double above = hi;
    for (int i = 1; i < coarse; ++i) {
        const double w = hi * std::pow(lo / hi, static_cast<double>(i) / (coarse - 1));
        TuningResult t = tune_gain(g, w, opt);
        if (!t.feasible) {
            above = w;
            continue;
        }
        double a = w, b = above;
        TuningResult best = t;
        while (b / a > 1.01) {
            const double mid = std::sqrt(a * b);
            TuningResult tm = tune_gain(g, mid, opt);
            if (tm.feasible) {
                a = mid;
                best = tm;
            } else {
                b = mid;
            }
        }
        return best;
    }
    throw InfeasibleError("no feasible bandwidth in the search range: " + top.reason);
}

StateSpace block_diagonal(const std::vector<StateSpace>& systems) {
    int n = 0, ni = 0, no = 0;
    for (const auto& s : systems) {
        s.validate();
        n += s.states();
        ni += s.inputs();
        no += s.outputs();
    }
    StateSpace out;
    out.a = Eigen::MatrixXd::Zero(n, n);
    out.b = Eigen::MatrixXd::Zero(n, ni);
    out.c = Eigen::MatrixXd::Zero(no, n);
    out.d = Eigen::MatrixXd::Zero(no, ni);
    int x = 0, i = 0, o = 0;
    for (const auto& s : systems) {
        out.a.block(x, x, s.states(), s.states()) = s.a;
        out.b.block(x, i, s.states(), s.inputs()) = s.b;
        out.c.block(o, x, s.outputs(), s.states()) = s.c;
        out.d.block(o, i, s.outputs(), s.inputs()) = s.d;
        x += s.states();
        i += s.inputs();
        o += s.outputs();
    }
    return out;
}

ClosedLoopModes closed_loop_modes(const StateSpace& g, const Eigen::VectorXd& freqs,
                                  const StateSpace& k) {
    const int modes = static_cast<int>(freqs.size());
    if (g.states() != 2 * modes) throw InputError("closed-loop modes: plant is not in modal form");
    const StateSpace cl = feedback(g, k);
    Eigen::EigenSolver<Eigen::MatrixXd> es(cl.a, true);
    if (es.info() != Eigen::Success) throw NumericalError("closed-loop eigenvalue computation failed");

    ClosedLoopModes out;
    out.eigenvalues = es.eigenvalues();
    out.stable = eigenvalues_stable(out.eigenvalues);
    out.damping = Eigen::VectorXd::Zero(modes);
    const Eigen::MatrixXcd& v = es.eigenvectors();

    Eigen::MatrixXd share = Eigen::MatrixXd::Zero(modes, out.eigenvalues.size());
    for (Eigen::Index j = 0; j < out.eigenvalues.size(); ++j) {
        double total = 0.0;
        for (int i = 0; i < modes; ++i) {
            const double e = std::norm(v(2 * i + 1, j)) + freqs(i) * freqs(i) * std::norm(v(2 * i, j));
            share(i, j) = e;
            total += e;
        }
        if (total > 0.0) share.col(j) /= total;
    }
    // Oscillatory poles carrying (within 1%) the largest share of mode i; among those, the one
    // nearest the open-loop pole.
    Eigen::VectorXd zeta = Eigen::VectorXd::Zero(modes);
    for (int i = 0; i < modes; ++i)
        if (freqs(i) > 0.0) zeta(i) = -g.a(2 * i + 1, 2 * i + 1) / (2.0 * freqs(i));
    for (int i = 0; i < modes; ++i) {
        auto pick = [&](bool oscillatory) {
            double top = 0.0;
            std::vector<Eigen::Index> cand;
            for (Eigen::Index j = 0; j < out.eigenvalues.size(); ++j) {
                const Complex l = out.eigenvalues(j);
                if (l.imag() < 0.0) continue;
                if (oscillatory && !(l.imag() > 1e-9 * std::abs(l))) continue;
                cand.push_back(j);
                top = std::max(top, share(i, j));
            }
            const Complex open(-zeta(i) * freqs(i), freqs(i) * std::sqrt(std::max(0.0, 1.0 - zeta(i) * zeta(i))));
            Eigen::Index best = -1;
            for (Eigen::Index j : cand) {
                if (share(i, j) < 0.99 * top) continue;
                if (best < 0 || std::abs(out.eigenvalues(j) - open) < std::abs(out.eigenvalues(best) - open))
                    best = j;
            }
            return best;
        };
        Eigen::Index best = pick(true);
        if (best < 0) best = pick(false);
        if (best >= 0) out.damping(i) = damping_ratio(out.eigenvalues(best));
    }
    return out;
}

ClosedLoopReport closed_loop_metrics(const PlantModel& plant,
                                     const std::vector<ControllerParams>& controllers,
                                     const SensitivityOptions& opt) {
    if (!plant.decoupled()) throw InputError("closed-loop metrics need a decoupled plant");
    if (controllers.size() != plant.decoupling.dofs.size())
        throw InputError("one controller per controlled DOF is required");

    std::vector<StateSpace> blocks;
    for (const auto& c : controllers) blocks.push_back(c.realization());
    const StateSpace diag = block_diagonal(blocks);
    const StateSpace k = series(series(static_gain(plant.decoupling.ty), diag),
                                static_gain(plant.decoupling.tu));

    ClosedLoopReport rep;
    rep.modes = closed_loop_modes(plant.system, plant.frequencies, k);
    for (std::size_t i = 0; i < controllers.size(); ++i) {
        const StateSpace ch = plant.decoupled_channel(static_cast<int>(i));
        LoopMetrics m;
        m.stable = closed_loop_stable(ch, blocks[i]);
        const double w = controllers[i].omega_bw;
        m.bandwidth = crossover_frequency(ch, controllers[i], w * 1e-2, w * 1e2);
        if (m.stable) {
            const SensitivityPeak p = sensitivity_peak(ch, controllers[i], w, opt);
            m.sensitivity_peak = p.value;
            m.peak_frequency = p.frequency;
        }
        rep.channels.push_back(m);
    }
    return rep;
}

}  // namespace flexstage
