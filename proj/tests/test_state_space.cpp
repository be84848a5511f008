#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "flexstage/errors.hpp"
#include "flexstage/state_space.hpp"

using namespace flexstage;

namespace {

StateSpace random_system(std::mt19937_64& rng, int n, int m, int p) {
    std::normal_distribution<double> g;
    StateSpace s;
    s.a = Eigen::MatrixXd::NullaryExpr(n, n, [&] { return g(rng); }) - 3.0 * Eigen::MatrixXd::Identity(n, n);
    s.b = Eigen::MatrixXd::NullaryExpr(n, m, [&] { return g(rng); });
    s.c = Eigen::MatrixXd::NullaryExpr(p, n, [&] { return g(rng); });
    s.d = 0.1 * Eigen::MatrixXd::NullaryExpr(p, m, [&] { return g(rng); });
    return s;
}

}  // namespace

TEST_CASE("second-order and double-integrator responses match their formulas") {
    const Complex s(0.0, 7.0);
    CHECK(std::abs(second_order(5.0, 0.1, 2.0).evaluate_siso(s) - 2.0 / (s * s + 1.0 * s + 25.0)) < 1e-14);
    CHECK(std::abs(double_integrator(3.0).evaluate_siso(s) - 3.0 / (s * s)) < 1e-14);
    CHECK_THROWS_AS(double_integrator().evaluate_siso(Complex(0.0, 0.0)), NumericalError);
}

TEST_CASE("series and feedback compose transfer matrices") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const StateSpace g = random_system(rng, 4, 2, 2);
        const StateSpace k = random_system(rng, 3, 2, 2);
        const Complex s(0.3, 1.0 + trial);
        const Eigen::MatrixXcd gs = g.evaluate(s), ks = k.evaluate(s);
        CHECK((series(k, g).evaluate(s) - gs * ks).norm() < 1e-10 * (1.0 + (gs * ks).norm()));
        const Eigen::MatrixXcd l = gs * ks;
        const Eigen::MatrixXcd t = (Eigen::MatrixXcd::Identity(2, 2) + l).inverse() * l;
        CHECK((feedback(g, k).evaluate(s) - t).norm() < 1e-9 * (1.0 + t.norm()));
    }
}

TEST_CASE("S + T = 1 pointwise for SISO loops") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const StateSpace g = random_system(rng, 3, 1, 1);
        const StateSpace k = random_system(rng, 2, 1, 1);
        for (double w : {0.1, 1.0, 10.0, 100.0}) {
            const Complex s(0.0, w);
            const Complex l = g.evaluate_siso(s) * k.evaluate_siso(s);
            const Complex t = feedback(g, k).evaluate_siso(s);
            const Complex sens = 1.0 / (1.0 + l);
            CHECK(std::abs(sens + t - 1.0) < 1e-12 * (1.0 + std::abs(t)));
        }
    }
}

TEST_CASE("siso_channel, static_gain and validation") {
    std::mt19937_64 rng(3);
    const StateSpace g = random_system(rng, 3, 2, 3);
    const Complex s(0.0, 2.0);
    CHECK(std::abs(siso_channel(g, 2, 1).evaluate_siso(s) - g.evaluate(s)(2, 1)) < 1e-14);
    CHECK_THROWS_AS(siso_channel(g, 3, 0), InputError);
    Eigen::MatrixXd k(1, 2);
    k << 2, 3;
    CHECK(static_gain(k).evaluate(s)(0, 1) == Complex(3.0, 0.0));
    StateSpace bad = g;
    bad.b.resize(2, 2);
    CHECK_THROWS_AS(bad.validate(), InputError);
}

TEST_CASE("damping ratio of poles") {
    CHECK(damping_ratio(Complex(0.0, 0.0)) == 0.0);
    CHECK(damping_ratio(Complex(-1.0, 0.0)) == doctest::Approx(1.0));
    CHECK(damping_ratio(std::polar(1.0, std::acos(-0.3))) == doctest::Approx(0.3));
}
