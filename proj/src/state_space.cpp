#include "flexstage/state_space.hpp"

#include <Eigen/LU>

#include "flexstage/errors.hpp"

namespace flexstage {

void StateSpace::validate() const {
    const auto n = a.rows();
    if (a.cols() != n || b.rows() != n || c.cols() != n || d.rows() != c.rows() ||
        d.cols() != b.cols())
        throw InputError("state-space dimensions are inconsistent");
}

Eigen::MatrixXcd StateSpace::evaluate(Complex s) const {
    Eigen::MatrixXcd out = d.cast<Complex>();
    if (states() == 0) return out;
    Eigen::MatrixXcd m = -a.cast<Complex>();
    m.diagonal().array() += s;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(m);
    if (!(lu.rcond() > 0.0)) throw NumericalError("frequency point coincides with a system pole");
    Eigen::MatrixXcd x = lu.solve(b.cast<Complex>());
    if (!x.allFinite()) throw NumericalError("frequency point coincides with a system pole");
    out += c.cast<Complex>() * x;
    return out;
}

Complex StateSpace::evaluate_siso(Complex s) const {
    if (inputs() != 1 || outputs() != 1) throw InputError("system is not SISO");
    return evaluate(s)(0, 0);
}

StateSpace static_gain(const Eigen::MatrixXd& k) {
    StateSpace sys;
    sys.a.resize(0, 0);
    sys.b.resize(0, k.cols());
    sys.c.resize(k.rows(), 0);
    sys.d = k;
    return sys;
}

StateSpace double_integrator(double gain) {
    StateSpace sys;
    sys.a = Eigen::MatrixXd::Zero(2, 2);
    sys.a(0, 1) = 1.0;
    sys.b = Eigen::MatrixXd::Zero(2, 1);
    sys.b(1, 0) = gain;
    sys.c = Eigen::MatrixXd::Zero(1, 2);
    sys.c(0, 0) = 1.0;
    sys.d = Eigen::MatrixXd::Zero(1, 1);
    return sys;
}

StateSpace second_order(double omega, double zeta, double gain) {
    StateSpace sys = double_integrator(gain);
    sys.a(1, 0) = -omega * omega;
    sys.a(1, 1) = -2.0 * zeta * omega;
    return sys;
}

StateSpace series(const StateSpace& g1, const StateSpace& g2) {
    g1.validate();
    g2.validate();
    if (g1.outputs() != g2.inputs()) throw InputError("series: dimension mismatch");
    const int n1 = g1.states(), n2 = g2.states();
    StateSpace s;
    s.a = Eigen::MatrixXd::Zero(n1 + n2, n1 + n2);
    s.a.topLeftCorner(n1, n1) = g1.a;
    s.a.bottomLeftCorner(n2, n1) = g2.b * g1.c;
    s.a.bottomRightCorner(n2, n2) = g2.a;
    s.b.resize(n1 + n2, g1.inputs());
    s.b.topRows(n1) = g1.b;
    s.b.bottomRows(n2) = g2.b * g1.d;
    s.c.resize(g2.outputs(), n1 + n2);
    s.c.leftCols(n1) = g2.d * g1.c;
    s.c.rightCols(n2) = g2.c;
    s.d = g2.d * g1.d;
    return s;
}

StateSpace feedback(const StateSpace& g, const StateSpace& k) {
    g.validate();
    k.validate();
    if (g.outputs() != k.inputs() || k.outputs() != g.inputs())
        throw InputError("feedback: dimension mismatch");
    const int ng = g.states(), nk = k.states();
    const int ny = g.outputs();
    // u = K e, e = r - y, y = Cg x + Dg u  =>  (I + Dg Dk) y = Cg xg + Dg Ck xk + Dg Dk r.
    const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(ny, ny) + g.d * k.d;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
    if (!lu.isInvertible()) throw NumericalError("feedback loop is ill-posed (I + D_G D_K singular)");
    const Eigen::MatrixXd mi = lu.inverse();
    // y = Y1 x + Y2 r with x = [xg; xk]
    Eigen::MatrixXd y1(ny, ng + nk);
    y1.leftCols(ng) = mi * g.c;
    y1.rightCols(nk) = mi * g.d * k.c;
    const Eigen::MatrixXd y2 = mi * g.d * k.d;
    // u = Ck xk + Dk (r - y)
    Eigen::MatrixXd u1 = -k.d * y1;
    u1.rightCols(nk) += k.c;
    const Eigen::MatrixXd u2 = k.d - k.d * y2;
    // e = r - y
    const Eigen::MatrixXd e1 = -y1;
    const Eigen::MatrixXd e2 = Eigen::MatrixXd::Identity(ny, ny) - y2;

    StateSpace s;
    s.a.resize(ng + nk, ng + nk);
    s.a.topRows(ng) = g.b * u1;
    s.a.topLeftCorner(ng, ng) += g.a;
    s.a.bottomRows(nk) = k.b * e1;
    s.a.bottomRightCorner(nk, nk) += k.a;
    s.b.resize(ng + nk, ny);
    s.b.topRows(ng) = g.b * u2;
    s.b.bottomRows(nk) = k.b * e2;
    s.c = y1;
    s.d = y2;
    return s;
}

StateSpace siso_channel(const StateSpace& sys, int out, int in) {
    sys.validate();
    if (out < 0 || out >= sys.outputs() || in < 0 || in >= sys.inputs())
        throw InputError("channel index out of range");
    StateSpace s;
    s.a = sys.a;
    s.b = sys.b.col(in);
    s.c = sys.c.row(out);
    s.d = sys.d.block(out, in, 1, 1);
    return s;
}

double damping_ratio(Complex lambda) {
    const double mag = std::abs(lambda);
    if (mag == 0.0) return 0.0;
    return -lambda.real() / mag;
}

}  // namespace flexstage
