#include "flexstage/plant.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <vector>

#include <Eigen/LU>

#include "flexstage/errors.hpp"
#include "flexstage/format.hpp"
#include "json_util.hpp"

namespace flexstage {

std::string ControlledDof::name() const {
    switch (kind) {
        case Kind::z: return "z";
        case Kind::theta_x: return "theta_x";
        case Kind::theta_y: return "theta_y";
        case Kind::flexible: return "q" + std::to_string(3 + flexible_index);
    }
    return "?";
}

std::vector<ControlledDof> default_controlled_dofs(int flexible_count) {
    std::vector<ControlledDof> dofs{ControlledDof::z(), ControlledDof::theta_x(),
                                    ControlledDof::theta_y()};
    for (int k = 1; k <= flexible_count; ++k) dofs.push_back(ControlledDof::flexible(k));
    return dofs;
}

Eigen::VectorXd sample_mode_shape(const ModalModel& modal, Point2 p) {
    if (!modal.mesh) throw InputError("modal model has no mesh to sample");
    const Mesh& mesh = *modal.mesh;
    const Mesh::Location loc = mesh.locate(p.x, p.y);
    static constexpr double xs[4] = {-1.0, 1.0, 1.0, -1.0};
    static constexpr double ys[4] = {-1.0, -1.0, 1.0, 1.0};
    Eigen::VectorXd out = Eigen::VectorXd::Zero(modal.mode_count());
    const auto& conn = mesh.elements[loc.element];
    for (int a = 0; a < 4; ++a) {
        const double n = 0.25 * (1.0 + xs[a] * loc.xi) * (1.0 + ys[a] * loc.eta);
        if (n == 0.0) continue;
        out += n * modal.shapes.row(kDofsPerNode * conn[a] + dof_w).transpose();
    }
    return out;
}

PlantModel build_plant(const ModalModel& modal, const ActuatorSet& act, const SensorSet& sen,
                       const PlantOptions& options) {
    if (options.flexible_modes < 0) throw InputError("flexible mode count must be non-negative");
    const int keep = modal.rigid_count + options.flexible_modes;
    if (keep > modal.mode_count())
        throw InputError("modal model has fewer modes than the plant requests");
    if (act.locations.empty() || sen.locations.empty())
        throw InputError("plant needs at least one actuator and one sensor");

    PlantModel plant;
    plant.rigid_count = modal.rigid_count;
    plant.frequencies = modal.frequencies.head(keep);
    plant.damping.resize(keep);
    for (int i = 0; i < keep; ++i) {
        const double z = options.damping.empty() ? options.damping_ratio
                                                 : options.damping.at(static_cast<std::size_t>(i));
        if (!(z >= 0.0)) throw InputError("modal damping ratio must be non-negative");
        plant.damping(i) = z;
    }
    plant.actuators = act;
    plant.sensors = sen;

    const int na = static_cast<int>(act.locations.size());
    const int ns = static_cast<int>(sen.locations.size());
    plant.modal_input.resize(keep, na);
    plant.modal_output.resize(ns, keep);
    for (int k = 0; k < na; ++k)
        plant.modal_input.col(k) = sample_mode_shape(modal, act.locations[k]).head(keep);
    for (int k = 0; k < ns; ++k)
        plant.modal_output.row(k) = sample_mode_shape(modal, sen.locations[k]).head(keep).transpose();

    StateSpace& ss = plant.system;
    ss.a = Eigen::MatrixXd::Zero(2 * keep, 2 * keep);
    ss.b = Eigen::MatrixXd::Zero(2 * keep, na);
    ss.c = Eigen::MatrixXd::Zero(ns, 2 * keep);
    ss.d = Eigen::MatrixXd::Zero(ns, na);
    for (int i = 0; i < keep; ++i) {
        const double w = plant.frequencies(i);
        ss.a(2 * i, 2 * i + 1) = 1.0;
        ss.a(2 * i + 1, 2 * i) = -w * w;
        ss.a(2 * i + 1, 2 * i + 1) = -2.0 * plant.damping(i) * w;
        ss.b.row(2 * i + 1) = plant.modal_input.row(i);
        ss.c.col(2 * i) = plant.modal_output.col(i);
    }
    return plant;
}

Eigen::MatrixXd influence_matrix(const std::vector<Point2>& points, const Eigen::MatrixXd& shapes,
                                 int rigid_count, const std::vector<ControlledDof>& dofs) {
    const int n = static_cast<int>(points.size());
    Eigen::MatrixXd m(n, dofs.size());
    for (int k = 0; k < n; ++k) {
        for (std::size_t d = 0; d < dofs.size(); ++d) {
            const auto& dof = dofs[d];
            switch (dof.kind) {
                case ControlledDof::Kind::z: m(k, d) = 1.0; break;
                case ControlledDof::Kind::theta_x: m(k, d) = points[k].y; break;
                case ControlledDof::Kind::theta_y: m(k, d) = -points[k].x; break;
                case ControlledDof::Kind::flexible: {
                    const int col = rigid_count + dof.flexible_index - 1;
                    if (dof.flexible_index < 1 || col >= shapes.cols())
                        throw InputError("controlled flexible mode is not retained in the plant");
                    m(k, d) = shapes(k, col);
                    break;
                }
            }
        }
    }
    return m;
}

Decoupling decoupling_transforms(const PlantModel& plant, const std::vector<ControlledDof>& dofs) {
    const auto nd = dofs.size();
    if (dofs.empty()) throw InputError("no controlled DOFs given");
    if (plant.actuators.locations.size() != nd || plant.sensors.locations.size() != nd)
        throw InputError("decoupling needs as many actuators and sensors as controlled DOFs");

    const Eigen::MatrixXd s =
        influence_matrix(plant.sensors.locations, plant.modal_output, plant.rigid_count, dofs);
    const Eigen::MatrixXd a = influence_matrix(plant.actuators.locations,
                                               plant.modal_input.transpose(), plant.rigid_count, dofs);
    auto invert = [](const Eigen::MatrixXd& m) {
        Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
        const double scale = m.cwiseAbs().maxCoeff();
        lu.setThreshold(1e-10);
        if (!(scale > 0.0) || !lu.isInvertible()) throw InputError("singular decoupling matrix");
        return Eigen::MatrixXd(lu.inverse());
    };
    Decoupling out;
    out.dofs = dofs;
    out.ty = invert(s);
    out.tu = invert(a.transpose());
    return out;
}

StateSpace PlantModel::decoupled_system() const {
    if (!decoupled()) throw InputError("plant has no decoupling transforms");
    StateSpace s = system;
    s.b = system.b * decoupling.tu;
    s.c = decoupling.ty * system.c;
    s.d = decoupling.ty * system.d * decoupling.tu;
    return s;
}

StateSpace PlantModel::decoupled_channel(int k) const {
    if (!decoupled()) throw InputError("plant has no decoupling transforms");
    if (k < 0 || k >= static_cast<int>(decoupling.dofs.size()))
        throw InputError("decoupled channel index out of range");
    const Eigen::VectorXd b = modal_input * decoupling.tu.col(k);
    const Eigen::VectorXd c = (decoupling.ty.row(k) * modal_output).transpose();
    const Eigen::VectorXd residue = (b.array() * c.array()).abs().matrix();
    const double cut = kChannelResidueCut * residue.maxCoeff();
    std::vector<int> kept;
    for (int i = 0; i < residue.size(); ++i)
        if (residue(i) > cut) kept.push_back(i);

    const StateSpace full = siso_channel(decoupled_system(), k, k);
    const int n = static_cast<int>(kept.size());
    StateSpace s;
    s.a = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    s.b = Eigen::MatrixXd::Zero(2 * n, 1);
    s.c = Eigen::MatrixXd::Zero(1, 2 * n);
    s.d = full.d;
    for (int r = 0; r < n; ++r) {
        for (int q = 0; q < n; ++q)
            s.a.block<2, 2>(2 * r, 2 * q) = full.a.block<2, 2>(2 * kept[r], 2 * kept[q]);
        s.b.middleRows<2>(2 * r) = full.b.middleRows<2>(2 * kept[r]);
        s.c.middleCols<2>(2 * r) = full.c.middleCols<2>(2 * kept[r]);
    }
    return s;
}

std::vector<double> log_grid_hz(double f_lo, double f_hi, int points) {
    if (!(f_lo > 0.0) || !(f_hi > f_lo) || points < 2) throw InputError("invalid frequency grid");
    std::vector<double> grid(static_cast<std::size_t>(points));
    const double l0 = std::log10(f_lo), l1 = std::log10(f_hi);
    for (int i = 0; i < points; ++i) {
        const double f = std::pow(10.0, l0 + (l1 - l0) * i / (points - 1));
        grid[static_cast<std::size_t>(i)] = 2.0 * std::numbers::pi * f;
    }
    return grid;
}

FrequencyResponse frequency_response(const StateSpace& sys, const std::vector<double>& grid) {
    sys.validate();
    if (grid.empty()) throw InputError("frequency grid is empty");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw InputError("frequency grid must be strictly increasing");
    FrequencyResponse out;
    out.grid = grid;
    out.values.reserve(grid.size());
    for (double w : grid) out.values.push_back(sys.evaluate(Complex(0.0, w)));
    return out;
}

void write_frequency_response_csv(const FrequencyResponse& r, const std::filesystem::path& path,
                                  const std::vector<std::string>& out_names,
                                  const std::vector<std::string>& in_names) {
    std::ofstream f(path);
    if (!f) throw InputError("cannot open output file " + path.string());
    auto label = [](const std::vector<std::string>& names, int i, const char* prefix) {
        return i < static_cast<int>(names.size()) ? names[i] : prefix + std::to_string(i + 1);
    };
    f << "frequency_hz";
    for (int o = 0; o < r.outputs(); ++o)
        for (int i = 0; i < r.inputs(); ++i) {
            const std::string tag = label(out_names, o, "y") + "_" + label(in_names, i, "u");
            f << ',' << tag << "_re," << tag << "_im";
        }
    f << '\n';
    for (std::size_t k = 0; k < r.grid.size(); ++k) {
        f << fmt_double(r.grid[k] / (2.0 * std::numbers::pi));
        for (int o = 0; o < r.outputs(); ++o)
            for (int i = 0; i < r.inputs(); ++i)
                f << ',' << fmt_double(r.values[k](o, i).real()) << ','
                  << fmt_double(r.values[k](o, i).imag());
        f << '\n';
    }
}

void write_plant_json(const PlantModel& plant, const std::filesystem::path& path) {
    nlohmann::json doc;
    doc["frequencies_hz"] = detail::vector_json(plant.frequencies / (2.0 * std::numbers::pi));
    doc["damping"] = detail::vector_json(plant.damping);
    doc["rigid_count"] = plant.rigid_count;
    doc["A"] = detail::matrix_json(plant.system.a);
    doc["B"] = detail::matrix_json(plant.system.b);
    doc["C"] = detail::matrix_json(plant.system.c);
    doc["D"] = detail::matrix_json(plant.system.d);
    auto points = [](const std::vector<Point2>& pts) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& p : pts) arr.push_back({p.x, p.y});
        return arr;
    };
    doc["actuators"] = points(plant.actuators.locations);
    doc["sensors"] = points(plant.sensors.locations);
    if (plant.decoupled()) {
        nlohmann::json names = nlohmann::json::array();
        for (const auto& d : plant.decoupling.dofs) names.push_back(d.name());
        doc["controlled_dofs"] = names;
        doc["Tu"] = detail::matrix_json(plant.decoupling.tu);
        doc["Ty"] = detail::matrix_json(plant.decoupling.ty);
    } else {
        doc["Tu"] = nlohmann::json::array();
        doc["Ty"] = nlohmann::json::array();
    }
    detail::write_json_file(doc, path);
}

}  // namespace flexstage
