#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <Eigen/Dense>

#include "flexstage/errors.hpp"
#include "flexstage/placement.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace flexstage;

namespace {

std::set<std::pair<long, long>> keyed(const std::vector<Point2>& pts) {
    std::set<std::pair<long, long>> s;
    for (const auto& p : pts) s.insert({std::lround(p.x * 1e9), std::lround(p.y * 1e9)});
    return s;
}

ModalModel case1_like(int res = 12) {
    GeometryInput in = testing::ribbed_stage();
    in.params = {1e-3, 0.0198, 1e-3, 0.0798, 0.0757};
    return testing::modes_of(in, res, 13);
}

}  // namespace

TEST_CASE("modal grammian closed form") {
    Eigen::VectorXd v(1);
    v << 1.0;
    CHECK(modal_grammian(v, 0.01, testing::kTwoPi * 50.0) == doctest::Approx(0.0795774715).epsilon(1e-9));
    CHECK(modal_grammian(Eigen::VectorXd::Zero(3), 0.01, 100.0) == 0.0);
    CHECK_THROWS_AS(modal_grammian(v, 0.0, 100.0), InputError);
    CHECK_THROWS_AS(modal_grammian(v, 0.01, 0.0), InputError);
}

TEST_CASE("modal grammian matches Lyapunov solves on random 5-mode models") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> logf(1.0, 3.3), logz(-3.0, -1.0), val(-2.0, 2.0);
    std::uniform_int_distribution<int> devices(1, 4);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int modes = 5, nd = devices(rng);
        Eigen::VectorXd w(modes), z(modes);
        Eigen::MatrixXd phi(modes, nd);
        for (int i = 0; i < modes; ++i) {
            w(i) = testing::kTwoPi * std::pow(10.0, logf(rng));
            z(i) = std::pow(10.0, logz(rng));
            for (int d = 0; d < nd; ++d) phi(i, d) = val(rng);
        }
        // Scaled modal coordinates (omega q, q').
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * modes, 2 * modes), b = Eigen::MatrixXd::Zero(2 * modes, nd);
        for (int i = 0; i < modes; ++i) {
            a(2 * i, 2 * i + 1) = w(i);
            a(2 * i + 1, 2 * i) = -w(i);
            a(2 * i + 1, 2 * i + 1) = -2.0 * z(i) * w(i);
            b.row(2 * i + 1) = phi.row(i);
        }
        const Eigen::MatrixXd g = oracle::lyapunov(a, b);
        for (int i = 0; i < modes; ++i) {
            const double closed = modal_grammian(phi.row(i).transpose(), z(i), w(i));
            const double trace = 0.5 * (g(2 * i, 2 * i) + g(2 * i + 1, 2 * i + 1));
            worst = std::max(worst, std::abs(trace - closed) / closed);
            worst = std::max(worst, std::abs(g(2 * i, 2 * i) - closed) / closed);
        }
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("placement objective arithmetic") {
    const ModalModel modal = case1_like(8);
    PlacementObjectiveSpec spec;
    const std::vector<Point2> pts{{0.05, 0.03}, {-0.1, 0.02}};
    const auto gs = placement_grammians(pts, spec, modal);
    double ctrl = 0.0, unc = 0.0;
    for (const auto& g : gs) (g.controlled ? ctrl : unc) += g.value;
    CHECK(placement_objective(pts, spec, modal) == doctest::Approx(ctrl - 50.0 * unc).epsilon(1e-12));
    spec.gamma = 0.0;
    CHECK(placement_objective(pts, spec, modal) == doctest::Approx(ctrl).epsilon(1e-12));
    spec.uncontrolled = {1};
    CHECK_THROWS_AS(spec.validate(), InputError);
    spec = {};
    spec.uncontrolled = {40};
    CHECK_THROWS_AS(placement_objective(pts, spec, modal), InputError);
}

TEST_CASE("devices on a nodal line see no grammian") {
    // The first flexible mode of a free uniform square plate is the twist w ~ x y.
    const ModalModel modal = testing::modes_of(testing::uniform_plate(), 12, 7);
    PlacementObjectiveSpec spec;
    spec.uncontrolled = {};
    const auto on = placement_grammians({{0.0, 0.1}, {0.1, 0.0}}, spec, modal);
    const auto off = placement_grammians({{0.1, 0.1}}, spec, modal);
    CHECK(on.front().value < 1e-12 * off.front().value);
}

TEST_CASE("degenerate uncontrolled modes are closed under equal frequency") {
    const ModalModel modal = testing::modes_of(testing::uniform_plate(), 12, 9);
    PlacementObjectiveSpec spec;
    spec.uncontrolled = {2};
    const auto eff = effective_uncontrolled_modes(modal, spec);
    // The square plate has a degenerate pair; whichever listed mode belongs to it pulls in its partner.
    bool paired = false;
    for (int k = 2; k + 1 < modal.flexible_count(); ++k)
        if (std::abs(modal.flexible_frequency(k) - modal.flexible_frequency(k + 1)) < 1e-6 * modal.flexible_frequency(k))
            paired = paired || k == 2;
    if (paired) CHECK(eff.size() == 2);
    else CHECK(eff.size() == 1);
    spec.close_degenerate_modes = false;
    CHECK(effective_uncontrolled_modes(modal, spec).size() == 1);
}

TEST_CASE("full search equals brute force over node pairs") {
    const ModalModel modal = case1_like(6);
    PlacementObjectiveSpec spec;
    const PlacementDomain domain;
    const PlacementSolution sol = optimize_placement(modal, domain, spec, 2, false);
    double best = -INFINITY;
    const auto& nodes = modal.mesh->nodes;
    for (std::size_t i = 0; i < nodes.size(); ++i)
        for (std::size_t j = i + 1; j < nodes.size(); ++j)
            best = std::max(best, placement_objective({nodes[i], nodes[j]}, spec, modal));
    CHECK(sol.objective == doctest::Approx(best).epsilon(1e-12));
    CHECK(sol.objective == doctest::Approx(placement_objective(sol.locations, spec, modal)).epsilon(1e-12));
}

TEST_CASE("symmetric search equals brute force over mirror orbits") {
    const ModalModel modal = case1_like(8);
    PlacementObjectiveSpec spec;
    const PlacementSolution sol = optimize_placement(modal, {}, spec, 4, true);
    double best = -INFINITY;
    for (const auto& p : modal.mesh->nodes) {
        if (p.x <= 0.0 || p.y <= 0.0) continue;
        best = std::max(best, placement_objective({p, {-p.x, p.y}, {-p.x, -p.y}, {p.x, -p.y}}, spec, modal));
    }
    CHECK(sol.objective == doctest::Approx(best).epsilon(1e-12));
    CHECK_THROWS_AS(optimize_placement(modal, {}, spec, 3, true), InputError);
}

TEST_CASE("placement properties on a case-1-like stage") {
    const ModalModel modal = case1_like();
    PlacementObjectiveSpec g0;
    g0.gamma = 0.0;
    PlacementObjectiveSpec g50;
    const auto s0 = optimize_placement(modal, {}, g0, 4, true);
    const auto s50 = optimize_placement(modal, {}, g50, 4, true);
    for (const auto& p : s0.locations) {
        CHECK(std::abs(std::abs(p.x) - 0.15) < 1e-12);
        CHECK(std::abs(std::abs(p.y) - 0.15) < 1e-12);
    }
    // Uncontrolled sums measured with the gamma = 50 mode set in both cases.
    const auto unc = [&](const std::vector<Point2>& pts) {
        double u = 0.0;
        for (const auto& g : placement_grammians(pts, g50, modal))
            if (!g.controlled) u += g.value;
        return u;
    };
    CHECK(unc(s50.locations) < unc(s0.locations));

    // Actuator and sensor problems coincide when the domains coincide.
    const auto act = optimize_placement(modal, {}, g50, 4, true);
    CHECK(keyed(act.locations) == keyed(s50.locations));

    // Mirror closure.
    std::vector<Point2> mirrored;
    for (const auto& p : s50.locations) {
        mirrored.push_back({-p.x, p.y});
        mirrored.push_back({p.x, -p.y});
    }
    for (const auto& k : keyed(mirrored)) CHECK(keyed(s50.locations).count(k) == 1);
}

TEST_CASE("placement domain restricts candidates") {
    const ModalModel modal = case1_like(8);
    PlacementDomain d;
    d.full_planform = false;
    d.x_min = -0.08;
    d.x_max = 0.08;
    d.y_min = -0.08;
    d.y_max = 0.08;
    const auto sol = optimize_placement(modal, d, {}, 4, true);
    for (const auto& p : sol.locations) CHECK(d.contains(p));
}
