#include "flexstage/placement.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include "flexstage/errors.hpp"
#include "flexstage/format.hpp"
#include "flexstage/plant.hpp"
#include "json_util.hpp"

namespace flexstage {

double modal_grammian(const Eigen::VectorXd& values, double zeta, double omega) {
    if (!(zeta > 0.0)) throw InputError("grammian needs a positive damping ratio");
    if (!(omega > 0.0)) throw InputError("grammian needs a positive frequency");
    return values.squaredNorm() / (4.0 * zeta * omega);
}

void PlacementObjectiveSpec::validate() const {
    if (!(gamma >= 0.0)) throw InputError("gamma must be non-negative");
    if (controlled.empty()) throw InputError("placement needs at least one controlled mode");
    for (int c : controlled) {
        if (c < 1) throw InputError("mode index out of range");
        if (std::find(uncontrolled.begin(), uncontrolled.end(), c) != uncontrolled.end())
            throw InputError("controlled and uncontrolled mode sets overlap");
    }
    for (int u : uncontrolled)
        if (u < 1) throw InputError("mode index out of range");
    if (!(damping_ratio > 0.0)) throw InputError("damping ratio must be positive");
}

bool PlacementDomain::contains(Point2 p) const {
    if (full_planform) return true;
    const double tol = 1e-12;
    return p.x >= x_min - tol && p.x <= x_max + tol && p.y >= y_min - tol && p.y <= y_max + tol;
}

double PlacementSolution::controlled_sum() const {
    double s = 0.0;
    for (const auto& g : grammians)
        if (g.controlled) s += g.value;
    return s;
}

double PlacementSolution::uncontrolled_sum() const {
    double s = 0.0;
    for (const auto& g : grammians)
        if (!g.controlled) s += g.value;
    return s;
}

namespace {

void check_mode(const ModalModel& modal, int k) {
    if (k < 1 || k > modal.flexible_count()) throw InputError("mode index out of range");
}

struct Weights {
    std::vector<int> modes;  // overall column indices
    std::vector<double> weights;
};

// Objective = sum_k sum_i weight_i * phi_i(p_k)^2.
Weights objective_weights(const ModalModel& modal, const PlacementObjectiveSpec& spec) {
    spec.validate();
    Weights w;
    const double z = spec.damping_ratio;
    for (int c : spec.controlled) {
        check_mode(modal, c);
        w.modes.push_back(modal.rigid_count + c - 1);
        w.weights.push_back(1.0 / (4.0 * z * modal.flexible_frequency(c)));
    }
    for (int u : effective_uncontrolled_modes(modal, spec)) {
        w.modes.push_back(modal.rigid_count + u - 1);
        w.weights.push_back(-spec.gamma / (4.0 * z * modal.flexible_frequency(u)));
    }
    return w;
}

double node_term(const ModalModel& modal, const Weights& w, int node) {
    double s = 0.0;
    for (std::size_t i = 0; i < w.modes.size(); ++i) {
        const double phi = modal.shapes(kDofsPerNode * node + dof_w, w.modes[i]);
        s += w.weights[i] * phi * phi;
    }
    return s;
}

std::vector<int> candidate_nodes(const Mesh& mesh, const PlacementDomain& domain) {
    std::vector<int> out;
    for (int n = 0; n < mesh.node_count(); ++n)
        if (domain.contains(mesh.nodes[n])) out.push_back(n);
    if (out.empty()) throw InputError("placement candidate set is empty");
    return out;
}

}  // namespace

std::vector<int> effective_uncontrolled_modes(const ModalModel& modal,
                                              const PlacementObjectiveSpec& spec) {
    std::set<int> out;
    for (int u : spec.uncontrolled) {
        check_mode(modal, u);
        out.insert(u);
    }
    if (spec.close_degenerate_modes) {
        std::set<int> extra;
        for (int u : out) {
            const double f = modal.flexible_frequency(u);
            for (int k = 1; k <= modal.flexible_count(); ++k) {
                if (std::find(spec.controlled.begin(), spec.controlled.end(), k) !=
                    spec.controlled.end())
                    continue;
                if (std::abs(modal.flexible_frequency(k) - f) <= 1e-6 * f) extra.insert(k);
            }
        }
        out.insert(extra.begin(), extra.end());
    }
    return {out.begin(), out.end()};
}

std::vector<ModeGrammian> placement_grammians(const std::vector<Point2>& locations,
                                              const PlacementObjectiveSpec& spec,
                                              const ModalModel& modal) {
    spec.validate();
    std::vector<Eigen::VectorXd> samples;
    samples.reserve(locations.size());
    for (const auto& p : locations) samples.push_back(sample_mode_shape(modal, p));

    auto grammian = [&](int k, bool controlled) {
        check_mode(modal, k);
        const int col = modal.rigid_count + k - 1;
        Eigen::VectorXd v(static_cast<Eigen::Index>(locations.size()));
        for (std::size_t d = 0; d < samples.size(); ++d) v(static_cast<Eigen::Index>(d)) = samples[d](col);
        const double w = modal.flexible_frequency(k);
        return ModeGrammian{k, w, modal_grammian(v, spec.damping_ratio, w), controlled};
    };
    std::vector<ModeGrammian> out;
    for (int c : spec.controlled) out.push_back(grammian(c, true));
    for (int u : effective_uncontrolled_modes(modal, spec)) out.push_back(grammian(u, false));
    return out;
}

double placement_objective(const std::vector<Point2>& locations, const PlacementObjectiveSpec& spec,
                           const ModalModel& modal) {
    double obj = 0.0;
    for (const auto& g : placement_grammians(locations, spec, modal))
        obj += g.controlled ? g.value : -spec.gamma * g.value;
    return obj;
}

PlacementSolution optimize_placement(const ModalModel& modal, const PlacementDomain& domain,
                                     const PlacementObjectiveSpec& spec, int count, bool symmetric) {
    if (!modal.mesh) throw InputError("placement needs a meshed modal model");
    const Mesh& mesh = *modal.mesh;
    const Weights w = objective_weights(modal, spec);
    const std::vector<int> candidates = candidate_nodes(mesh, domain);
    if (count < 1 || count > static_cast<int>(candidates.size()))
        throw InputError("device count exceeds candidate count");

    std::vector<int> chosen;
    if (!symmetric) {
        std::vector<std::pair<double, int>> scored;
        scored.reserve(candidates.size());
        for (int n : candidates) scored.emplace_back(node_term(modal, w, n), n);
        std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            return a.first > b.first || (a.first == b.first && a.second < b.second);
        });
        for (int i = 0; i < count; ++i) chosen.push_back(scored[static_cast<std::size_t>(i)].second);
        std::sort(chosen.begin(), chosen.end());
    } else {
        if (count != 4) throw InputError("symmetric placement places exactly 4 devices");
        const double tol = 1e-9 * std::max(mesh.x_lines.back() - mesh.x_lines.front(),
                                           mesh.y_lines.back() - mesh.y_lines.front());
        double best = -INFINITY;
        std::vector<int> best_orbit;
        for (int n : candidates) {
            const Point2 p = mesh.nodes[n];
            if (!(p.x > tol && p.y > tol)) continue;
            std::vector<int> orbit{n};
            bool ok = true;
            for (Point2 q : {Point2{-p.x, p.y}, Point2{-p.x, -p.y}, Point2{p.x, -p.y}}) {
                const int m = mesh.find_node(q.x, q.y, tol);
                if (m < 0 || !domain.contains(mesh.nodes[m])) {
                    ok = false;
                    break;
                }
                orbit.push_back(m);
            }
            if (!ok) continue;
            double v = 0.0;
            for (int m : orbit) v += node_term(modal, w, m);
            if (v > best) {
                best = v;
                best_orbit = orbit;
            }
        }
        if (best_orbit.empty()) throw InputError("no mirror-symmetric candidate orbit in domain");
        chosen = best_orbit;
    }

    PlacementSolution sol;
    sol.gamma = spec.gamma;
    sol.nodes = chosen;
    for (int n : chosen) sol.locations.push_back(mesh.nodes[n]);
    sol.grammians = placement_grammians(sol.locations, spec, modal);
    sol.objective = 0.0;
    for (const auto& g : sol.grammians) sol.objective += g.controlled ? g.value : -spec.gamma * g.value;
    return sol;
}

void write_placement_heatmap_csv(const ModalModel& modal, const PlacementDomain& domain,
                                 const PlacementObjectiveSpec& spec,
                                 const std::filesystem::path& path) {
    if (!modal.mesh) throw InputError("placement needs a meshed modal model");
    const Weights w = objective_weights(modal, spec);
    std::ofstream f(path);
    if (!f) throw InputError("cannot open output file " + path.string());
    f << "x,y,objective\n";
    for (int n : candidate_nodes(*modal.mesh, domain)) {
        const Point2 p = modal.mesh->nodes[n];
        f << fmt_double(p.x) << ',' << fmt_double(p.y) << ',' << fmt_double(node_term(modal, w, n))
          << '\n';
    }
}

void write_placement_json(const PlacementSolution& sol, const std::filesystem::path& path) {
    nlohmann::json doc;
    doc["gamma"] = sol.gamma;
    doc["objective"] = sol.objective;
    nlohmann::json locs = nlohmann::json::array();
    for (std::size_t i = 0; i < sol.locations.size(); ++i)
        locs.push_back({{"x", sol.locations[i].x},
                        {"y", sol.locations[i].y},
                        {"node", i < sol.nodes.size() ? sol.nodes[i] : -1}});
    doc["locations"] = locs;
    nlohmann::json gs = nlohmann::json::array();
    for (const auto& g : sol.grammians)
        gs.push_back({{"mode", g.mode},
                      {"frequency_hz", g.frequency / (2.0 * std::numbers::pi)},
                      {"grammian", g.value},
                      {"controlled", g.controlled}});
    doc["grammians"] = gs;
    detail::write_json_file(doc, path);
}

}  // namespace flexstage
