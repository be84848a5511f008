#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "flexstage/plant.hpp"
#include "flexstage/state_space.hpp"

namespace flexstage {

/// How the PID corners follow from the bandwidth and the ratio alpha.
enum class MappingMode {
    loopshaping,  ///< w_int = a^2 w_bw, w_d = a w_bw, w_lp = w_bw / a
    inverted,  ///< w_int = w_bw / a^2, w_d = w_bw / a, w_lp = a w_bw
};

std::string to_string(MappingMode mode);
MappingMode mapping_mode_from_string(const std::string& name);

/// C(s) = Kp (s + w_int)/s (s/w_d + 1) w_lp^2 / (s^2 + 2 z_lp w_lp s + w_lp^2).
struct ControllerParams {
    double omega_bw = 0.0;
    double alpha = 0.3;
    double kp = 1.0;
    double omega_int = 0.0;
    double omega_d = 0.0;
    double omega_lp = 0.0;
    double zeta_lp = 0.7;
    MappingMode mode = MappingMode::loopshaping;

    void validate() const;
    Complex evaluate(Complex s) const;
    /// Three-state realization: PI stage, then lead/low-pass stage, then Kp.
    StateSpace realization() const;
};

ControllerParams controller_from_bandwidth(double omega_bw, double alpha, double kp,
                                           MappingMode mode = MappingMode::loopshaping,
                                           double zeta_lp = 0.7);

/// L = G C pointwise on the response grid.
FrequencyResponse loop_gain(const FrequencyResponse& plant, const ControllerParams& controller);

struct LoopResponse {
    std::vector<double> grid;
    std::vector<Complex> loop, sensitivity, complementary;
};

LoopResponse loop_response(const StateSpace& plant, const ControllerParams& controller,
                           const std::vector<double>& grid);

/// Writes frequency_hz then re/im of L, S and T.
void write_loop_csv(const LoopResponse& response, const std::filesystem::path& path);

/// True when every closed-loop eigenvalue has Re < -1e-10 |lambda| (and no eigenvalue sits at 0).
bool closed_loop_stable(const StateSpace& plant, const StateSpace& controller);

struct SensitivityOptions {
    double decades_below = 2.0;  ///< search range relative to the reference frequency
    double decades_above = 2.0;
    int points_per_decade = 200;
    int refined_points_per_decade = 2000;
    int peaks_refined = 6;
    double tolerance = 1e-3;  ///< relative golden-section bracket width
};

struct SensitivityPeak {
    double value = 0.0;
    double frequency = 0.0;  // rad/s
};

/// Peak of |1/(1+GC)| around `reference` (rad/s). Throws InfeasibleError if the loop is unstable.
SensitivityPeak sensitivity_peak(const StateSpace& plant, const ControllerParams& controller,
                                 double reference, const SensitivityOptions& options = {});

/// First downward unity crossing of |L| at or above `from` rad/s, refined by bisection. 0 if none.
double crossover_frequency(const StateSpace& plant, const ControllerParams& controller, double from,
                           double to);

struct LoopMetrics {
    double bandwidth = 0.0;  ///< rad/s
    double sensitivity_peak = 0.0;
    double peak_frequency = 0.0;
    bool stable = false;
};

struct TuningResult {
    ControllerParams controller;
    LoopMetrics metrics;
    bool feasible = false;
    std::string reason;
};

struct TuningOptions {
    double alpha = 0.3;
    double zeta_lp = 0.7;
    MappingMode mode = MappingMode::loopshaping;
    double max_sensitivity = 2.0;
    SensitivityOptions sensitivity;
};

/// Sets Kp so |L(j w_bw)| = 1 and checks stability and the sensitivity bound.
TuningResult tune_gain(const StateSpace& plant, double omega_bw, const TuningOptions& options = {});

/// Largest feasible bandwidth in [lo, hi] to 1% (coarse downward scan, then bisection).
/// Throws InfeasibleError if no bandwidth in the range is feasible.
TuningResult max_bandwidth(const StateSpace& plant, double lo, double hi,
                           const TuningOptions& options = {});

struct ClosedLoopModes {
    bool stable = false;
    Eigen::VectorXcd eigenvalues;
    /// Per plant mode: the oscillatory pole carrying (within 1%) its largest energy share, nearest
    /// the open-loop pole among those; real poles only when no oscillatory pole qualifies.
    Eigen::VectorXd damping;
};

/// Eigen-analysis of a modal plant (states [q, q'] per mode) under negative feedback.
ClosedLoopModes closed_loop_modes(const StateSpace& plant, const Eigen::VectorXd& frequencies,
                                  const StateSpace& controller);

struct ClosedLoopReport {
    ClosedLoopModes modes;
    std::vector<LoopMetrics> channels;
};

/// Full MIMO loop Tu diag(C_k) Ty around the plant plus per-channel SISO metrics.
ClosedLoopReport closed_loop_metrics(const PlantModel& plant,
                                     const std::vector<ControllerParams>& controllers,
                                     const SensitivityOptions& options = {});

/// Block-diagonal stack of SISO systems.
StateSpace block_diagonal(const std::vector<StateSpace>& systems);

}  // namespace flexstage
