#include <doctest.h>

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "flexstage/geometry.hpp"
#include "flexstage/modal.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace flexstage;

using oracle::rayleigh_ritz_first_elastic;

TEST_CASE("Rayleigh-Ritz oracle converges and agrees with the thin-plate constant") {
    const MaterialSpec mat;
    const double a = 0.3, h = 3e-3;
    const double w8 = rayleigh_ritz_first_elastic(a, h, mat, 8);
    const double w12 = rayleigh_ritz_first_elastic(a, h, mat, 12);
    CHECK(w12 <= w8 * (1.0 + 1e-12));
    CHECK(std::abs(w12 - w8) < 1e-4 * w12);
    // Non-dimensional frequency of the free square plate's twisting mode is near 13.5 for nu ~ 0.3.
    const double d = mat.youngs_modulus * h * h * h / (12.0 * (1.0 - mat.poisson_ratio * mat.poisson_ratio));
    const double lambda = w12 * a * a * std::sqrt(mat.density * h / d);
    CHECK(lambda > 12.5);
    CHECK(lambda < 14.5);
}

TEST_CASE("FE first elastic frequency of the free plate matches the Rayleigh-Ritz oracle") {
    const MaterialSpec mat;
    const double a = 0.3, h = 3e-3;
    const double oracle = rayleigh_ritz_first_elastic(a, h, mat, 12);
    double previous = 1e9;
    for (int res : {8, 16, 24}) {
        const auto modal = testing::modes_of(testing::uniform_plate(a, h), res, 4);
        REQUIRE(modal.rigid_count == 3);
        const double err = std::abs(modal.flexible_frequency(1) - oracle) / oracle;
        MESSAGE("resolution " << res << " relative error " << err);
        if (res == 16) CHECK(err < 0.02);
        CHECK(err < previous);
        previous = err;
    }
}
