#pragma once

#include <complex>

#include <Eigen/Core>

namespace flexstage {

using Complex = std::complex<double>;

/// Continuous-time linear system  x' = A x + B u,  y = C x + D u.
struct StateSpace {
    Eigen::MatrixXd a;
    Eigen::MatrixXd b;
    Eigen::MatrixXd c;
    Eigen::MatrixXd d;

    int states() const { return static_cast<int>(a.rows()); }
    int inputs() const { return static_cast<int>(b.cols()); }
    int outputs() const { return static_cast<int>(c.rows()); }

    /// Transfer matrix C (sI - A)^-1 B + D. Throws NumericalError at a pole.
    Eigen::MatrixXcd evaluate(Complex s) const;
    /// SISO shortcut; requires one input and one output.
    Complex evaluate_siso(Complex s) const;

    void validate() const;
};

/// Static gain k (no states).
StateSpace static_gain(const Eigen::MatrixXd& k);

/// k / s^2.
StateSpace double_integrator(double gain = 1.0);

/// k / (s^2 + 2 zeta w s + w^2).
StateSpace second_order(double omega, double zeta, double gain = 1.0);

/// second(first(u)): output of `first` feeds the input of `second`.
StateSpace series(const StateSpace& first, const StateSpace& second);

/// Negative-feedback loop u = K (r - y), y = G u. Returns the map r -> y (complementary
/// sensitivity); states are [x_G; x_K]. Requires I + D_G D_K invertible.
StateSpace feedback(const StateSpace& plant, const StateSpace& controller);

/// Selects input `in` and output `out` of a MIMO system.
StateSpace siso_channel(const StateSpace& sys, int out, int in);

/// Damping ratio -Re(lambda)/|lambda|; 0 for lambda = 0.
double damping_ratio(Complex lambda);

}  // namespace flexstage
