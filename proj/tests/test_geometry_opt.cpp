#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "flexstage/errors.hpp"
#include "flexstage/geometry_opt.hpp"
#include "flexstage/nelder_mead.hpp"
#include "support.hpp"

using namespace flexstage;

namespace {

DesignContext stage_context(int resolution) {
    DesignContext ctx;
    ctx.base = testing::ribbed_stage();
    ctx.resolution = resolution;
    return ctx;
}

GeometryBounds stage_bounds() {
    GeometryBounds b;
    b.min = {0.001, 0.005, 0.001, 0.06, 0.06};
    b.max = {0.012, 0.04, 0.005, 0.0985, 0.0985};
    return b;
}

FrequencyConstraints band(double low_hz, double high_hz, int n = 1, int m = 2) {
    FrequencyConstraints c;
    c.omega_low = testing::kTwoPi * low_hz;
    c.omega_high = testing::kTwoPi * high_hz;
    c.n = n;
    c.m = m;
    return c;
}

const GeometryParams kInit{0.003, 0.02, 0.003, 0.09, 0.09};

}  // namespace

TEST_CASE("Nelder-Mead minimizes the Rosenbrock function") {
    int calls = 0;
    auto rosen = [&](const std::vector<double>& x) {
        ++calls;
        return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
    };
    NelderMeadOptions opt;
    opt.max_evaluations = 4000;
    opt.initial_step = 0.5;
    const NelderMeadResult r = nelder_mead(rosen, {-1.2, 1.0}, opt);
    CHECK(r.converged);
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(r.evaluations == calls);
    CHECK(r.evaluations <= opt.max_evaluations);
}

TEST_CASE("Nelder-Mead respects the budget and never returns worse than the start") {
    auto bowl = [](const std::vector<double>& x) { return std::abs(x[0] - 3.0) + std::abs(x[1] + 2.0); };
    NelderMeadOptions opt;
    opt.max_evaluations = 15;
    const NelderMeadResult r = nelder_mead(bowl, {0.0, 0.0}, opt);
    CHECK(r.evaluations <= 15);
    CHECK(r.value <= bowl({0.0, 0.0}));
    CHECK(r.value == bowl(r.x));
    const NelderMeadResult again = nelder_mead(bowl, {0.0, 0.0}, opt);
    CHECK(again.x == r.x);
}

TEST_CASE("constraint values follow the sign convention") {
    const DesignContext ctx = stage_context(8);
    const auto g = build_geometry(with_params(ctx.base, kInit));
    const ModalModel modal = analyze_stage(g, ctx, 2);
    const auto c = band(50.0, 500.0);
    const std::vector<double> v = constraint_values(g, c, ctx);
    REQUIRE(v.size() == 2);
    CHECK(v[0] == doctest::Approx(modal.flexible_frequency(1) - c.omega_low));
    CHECK(v[1] == doctest::Approx(c.omega_high - modal.flexible_frequency(2)));
    const auto rel = relative_violations(v, c);
    CHECK(rel[0] == doctest::Approx(v[0] / c.omega_low));
    CHECK(rel[1] == doctest::Approx(v[1] / c.omega_high));
    // Upper-band rows only when n = 0.
    CHECK(constraint_values(g, band(50.0, 500.0, 0, 1), ctx).size() == 1);
}

TEST_CASE("frequency constraint validation") {
    CHECK_NOTHROW(band(50.0, 500.0).validate());
    CHECK_THROWS_AS(band(500.0, 50.0).validate(), InputError);
    CHECK_THROWS_AS(band(50.0, 500.0, 3, 2).validate(), InputError);
    CHECK_THROWS_AS(band(50.0, 500.0, 0, 0).validate(), InputError);
}

TEST_CASE("optimized stage meets the band constraints and passes a finer-mesh recheck") {
    const DesignContext ctx = stage_context(16);
    const auto c = band(50.0, 500.0);
    GeometryOptOptions opt;
    opt.max_evaluations = 150;
    const GeometryResult r = optimize_geometry(stage_bounds(), c, kInit, ctx, opt);
    REQUIRE(r.feasible);
    CHECK(r.evaluations <= opt.max_evaluations);
    CHECK(r.omega_high_active);
    const auto g = build_geometry(with_params(ctx.base, r.params));
    CHECK(r.mass == doctest::Approx(total_mass(g, ctx.material)));
    CHECK(r.mass < total_mass(build_geometry(with_params(ctx.base, kInit)), ctx.material));

    const DesignContext fine = stage_context(24);
    for (double rel : relative_violations(constraint_values(g, c, fine), c)) {
        MESSAGE("finer-mesh relative violation " << rel);
        CHECK(rel <= opt.tolerance);
    }

    // Identical inputs give identical iterates.
    const GeometryResult again = optimize_geometry(stage_bounds(), c, kInit, ctx, opt);
    CHECK(again.params.to_array() == r.params.to_array());
    CHECK(again.evaluations == r.evaluations);
}

TEST_CASE("a loose upper band drives the design to the minimum-mass corner") {
    const DesignContext ctx = stage_context(8);
    const auto c = band(10.0, 20.0, 0, 1);
    GeometryOptOptions opt;
    opt.max_evaluations = 120;
    const GeometryResult r = optimize_geometry(stage_bounds(), c, kInit, ctx, opt);
    REQUIRE(r.feasible);
    const double corner = total_mass(build_geometry(with_params(ctx.base, stage_bounds().min)), ctx.material);
    CHECK(r.mass == doctest::Approx(corner).epsilon(1e-3));
}

TEST_CASE("unreachable upper band reports infeasible bounds with the mode index") {
    const DesignContext ctx = stage_context(6);
    GeometryOptOptions opt;
    opt.max_evaluations = 40;
    const GeometryResult r = optimize_geometry(stage_bounds(), band(50.0, 20000.0), kInit, ctx, opt);
    CHECK_FALSE(r.feasible);
    CHECK_MESSAGE(r.message.find("bounds infeasible: flexible mode 2") != std::string::npos, r.message);
    CHECK(r.violations.size() == 2);
}

TEST_CASE("bad optimizer inputs are rejected") {
    const DesignContext ctx = stage_context(6);
    GeometryOptOptions tiny;
    tiny.max_evaluations = 5;
    CHECK_THROWS_AS(optimize_geometry(stage_bounds(), band(50.0, 500.0), kInit, ctx, tiny), InputError);
    GeometryParams outside = kInit;
    outside.base_thickness = 0.5;
    CHECK_THROWS_AS(optimize_geometry(stage_bounds(), band(50.0, 500.0), outside, ctx), InputError);
}

TEST_CASE("sweep levels run from the start down to the stop") {
    SweepSpec s;
    s.omega_high_start = testing::kTwoPi * 600.0;
    s.omega_high_stop = testing::kTwoPi * 300.0;
    s.step = testing::kTwoPi * 10.0;
    const auto levels = sweep_levels(s);
    REQUIRE(levels.size() == 31);
    CHECK(sweep_level_hz(levels.front()) == 600.0);
    CHECK(sweep_level_hz(levels.back()) == 300.0);
    for (std::size_t i = 1; i < levels.size(); ++i) CHECK(levels[i] < levels[i - 1]);
    s.step = 0.0;
    CHECK_THROWS_AS(sweep_levels(s), InputError);
}

TEST_CASE("short sweep records every step and writes its tables") {
    const DesignContext ctx = stage_context(6);
    SweepSpec s;
    s.omega_high_start = testing::kTwoPi * 520.0;
    s.omega_high_stop = testing::kTwoPi * 500.0;
    s.step = testing::kTwoPi * 10.0;
    SweepPlacement place;
    place.flexible_modes = 5;
    GeometryOptOptions opt;
    opt.max_evaluations = 60;
    const auto warm = sweep_omega_high(s, stage_bounds(), band(50.0, 500.0), kInit, ctx, place, opt);
    s.warm_start = false;
    const auto cold = sweep_omega_high(s, stage_bounds(), band(50.0, 500.0), kInit, ctx, place, opt);
    REQUIRE(warm.size() == 3);
    REQUIRE(cold.size() == 3);
    for (std::size_t i = 0; i < warm.size(); ++i) {
        CHECK(warm[i].feasible == cold[i].feasible);
        if (warm[i].feasible) {
            CHECK(warm[i].sensors.size() == 4);
            CHECK(warm[i].actuators.size() == 4);
            CHECK(std::isfinite(warm[i].ja_plus_jo()));
        }
    }

    const auto dir = std::filesystem::temp_directory_path() / "flexstage_sweep_test";
    std::filesystem::create_directories(dir);
    write_sweep_csv(warm, dir / "sweep.csv");
    write_sweep_json(warm, dir / "sweep_steps.json");
    std::ifstream f(dir / "sweep.csv");
    std::string header;
    std::getline(f, header);
    CHECK(header ==
          "omega_high_hz,mass_kg,ja_plus_jo,base_thickness,rib_height,rib_width,rib_spacing_x,"
          "rib_spacing_y,feasible");
    int rows = 0;
    for (std::string line; std::getline(f, line);) ++rows;
    CHECK(rows == 3);
    std::filesystem::remove_all(dir);
}
