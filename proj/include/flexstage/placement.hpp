#pragma once

#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "flexstage/modal.hpp"

namespace flexstage {

/// Modal grammian of one lightly damped mode, |phi|^2 / (4 zeta omega), where `values` holds the
/// mode shape sampled at every device.
double modal_grammian(const Eigen::VectorXd& values, double zeta, double omega);

struct PlacementObjectiveSpec {
    double gamma = 50.0;
    std::vector<int> controlled{1};        // 1-based flexible mode indices
    std::vector<int> uncontrolled{2, 3, 4};
    double damping_ratio = 0.01;
    /// Add modes sharing a frequency (relative 1e-6) with a listed uncontrolled mode, so the
    /// penalty does not depend on the basis chosen inside a degenerate eigenspace.
    bool close_degenerate_modes = true;

    void validate() const;
};

/// Candidate region on the top surface. Default: the whole planform.
struct PlacementDomain {
    bool full_planform = true;
    double x_min = 0.0, x_max = 0.0, y_min = 0.0, y_max = 0.0;

    bool contains(Point2 p) const;
};

struct ModeGrammian {
    int mode = 0;  // 1-based flexible index
    double frequency = 0.0;
    double value = 0.0;
    bool controlled = false;
};

struct PlacementSolution {
    std::vector<Point2> locations;
    std::vector<int> nodes;
    std::vector<ModeGrammian> grammians;
    double objective = 0.0;
    double gamma = 0.0;

    double controlled_sum() const;
    double uncontrolled_sum() const;
};

/// Uncontrolled index list after degenerate-mode closure (sorted, unique).
std::vector<int> effective_uncontrolled_modes(const ModalModel& modal,
                                              const PlacementObjectiveSpec& spec);

/// Per-mode grammians for devices at `locations`.
std::vector<ModeGrammian> placement_grammians(const std::vector<Point2>& locations,
                                              const PlacementObjectiveSpec& spec,
                                              const ModalModel& modal);

/// Sum of controlled grammians minus gamma times the sum of uncontrolled grammians.
double placement_objective(const std::vector<Point2>& locations, const PlacementObjectiveSpec& spec,
                           const ModalModel& modal);

/// Exhaustive search over mesh nodes. The objective is a sum over devices, so the optimum of the
/// unconstrained family is the `count` best distinct nodes. With `symmetric`, `count` must be 4
/// and the search runs over one representative per mirror orbit with x > 0, y > 0.
/// Ties go to the lowest node index.
PlacementSolution optimize_placement(const ModalModel& modal, const PlacementDomain& domain,
                                     const PlacementObjectiveSpec& spec, int count, bool symmetric);

/// Per-candidate objective term for plotting: columns x, y, objective.
void write_placement_heatmap_csv(const ModalModel& modal, const PlacementDomain& domain,
                                 const PlacementObjectiveSpec& spec,
                                 const std::filesystem::path& path);

void write_placement_json(const PlacementSolution& solution, const std::filesystem::path& path);

}  // namespace flexstage
