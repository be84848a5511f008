#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "flexstage/modal.hpp"
#include "flexstage/state_space.hpp"

namespace flexstage {

/// Vertical point-force actuators.
struct ActuatorSet {
    std::vector<Point2> locations;
};

/// Vertical displacement sensors.
struct SensorSet {
    std::vector<Point2> locations;
};

inline constexpr double kChannelResidueCut = 1e-9;

/// A generalized coordinate driven by one decoupled control channel.
struct ControlledDof {
    enum class Kind { z, theta_x, theta_y, flexible };
    Kind kind = Kind::z;
    int flexible_index = 0;  // 1-based, flexible kind only

    /// "z", "theta_x", "theta_y", or "q<k>" with k the overall mode number (rigid modes count).
    std::string name() const;

    static ControlledDof z() { return {Kind::z, 0}; }
    static ControlledDof theta_x() { return {Kind::theta_x, 0}; }
    static ControlledDof theta_y() { return {Kind::theta_y, 0}; }
    static ControlledDof flexible(int k) { return {Kind::flexible, k}; }
};

/// Rigid DOFs plus the first `flexible_count` flexible modes.
std::vector<ControlledDof> default_controlled_dofs(int flexible_count);

struct PlantOptions {
    int flexible_modes = 10;
    /// Modal damping ratio for every retained mode; overridden per mode by `damping` if non-empty.
    double damping_ratio = 0.01;
    std::vector<double> damping;
};

/// Measurement decoupling and actuation recoupling matrices.
struct Decoupling {
    std::vector<ControlledDof> dofs;
    Eigen::MatrixXd tu;  ///< actuators x dofs: DOF force commands -> actuator forces
    Eigen::MatrixXd ty;  ///< dofs x sensors: sensor readings -> DOF coordinates
};

/// Truncated modal plant. States are ordered [q1, q1', q2, q2', ...].
struct PlantModel {
    Eigen::VectorXd frequencies;  ///< rad/s
    Eigen::VectorXd damping;
    int rigid_count = 0;
    Eigen::MatrixXd modal_input;   ///< modes x actuators
    Eigen::MatrixXd modal_output;  ///< sensors x modes
    StateSpace system;
    ActuatorSet actuators;
    SensorSet sensors;
    Decoupling decoupling;  ///< empty until decoupling_transforms has been applied

    int mode_count() const { return static_cast<int>(frequencies.size()); }
    bool decoupled() const { return !decoupling.dofs.empty(); }
    /// Ty G Tu; requires decoupling.
    StateSpace decoupled_system() const;
    /// Channel k -> k of the decoupled system, keeping only modes whose residue in that channel
    /// exceeds kChannelResidueCut times the largest one. Dropped modes are numerically
    /// uncontrollable or unobservable there (e.g. the other rigid DOFs).
    StateSpace decoupled_channel(int k) const;
};

/// w-component of every mode of `modal` at (x, y), bilinear in the containing element.
Eigen::VectorXd sample_mode_shape(const ModalModel& modal, Point2 location);

PlantModel build_plant(const ModalModel& modal, const ActuatorSet& actuators,
                       const SensorSet& sensors, const PlantOptions& options = {});

/// Square influence matrix with rows [1, y, -x, phi_c(p) ...] for the given points.
Eigen::MatrixXd influence_matrix(const std::vector<Point2>& points, const Eigen::MatrixXd& shapes,
                                 int rigid_count, const std::vector<ControlledDof>& dofs);

/// Computes Tu and Ty for `dofs`; throws on a non-square or singular influence matrix.
Decoupling decoupling_transforms(const PlantModel& plant, const std::vector<ControlledDof>& dofs);

/// Frequency samples of a transfer matrix.
struct FrequencyResponse {
    std::vector<double> grid;  ///< rad/s, strictly increasing
    std::vector<Eigen::MatrixXcd> values;

    int outputs() const { return values.empty() ? 0 : static_cast<int>(values.front().rows()); }
    int inputs() const { return values.empty() ? 0 : static_cast<int>(values.front().cols()); }
};

/// `points` logarithmically spaced samples from f_lo to f_hi Hz, returned in rad/s.
std::vector<double> log_grid_hz(double f_lo_hz = 1.0, double f_hi_hz = 2000.0, int points = 600);

FrequencyResponse frequency_response(const StateSpace& sys, const std::vector<double>& grid);

/// Columns frequency_hz, then re/im for every (output, input) pair, output-major.
void write_frequency_response_csv(const FrequencyResponse& response,
                                  const std::filesystem::path& path,
                                  const std::vector<std::string>& output_names = {},
                                  const std::vector<std::string>& input_names = {});

/// JSON document with A, B, C, D, Tu, Ty, frequencies and damping.
void write_plant_json(const PlantModel& plant, const std::filesystem::path& path);

}  // namespace flexstage
