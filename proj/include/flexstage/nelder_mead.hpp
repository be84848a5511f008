#pragma once

#include <functional>
#include <vector>

namespace flexstage {

struct NelderMeadOptions {
    int max_evaluations = 500;
    double initial_step = 0.1;  ///< simplex edge along each coordinate
    double f_tolerance = 1e-10;   ///< spread of simplex values
    double x_tolerance = 1e-7;   ///< simplex diameter (max-norm)
};

struct NelderMeadResult {
    std::vector<double> x;
    double value = 0.0;
    int evaluations = 0;
    bool converged = false;
};

/// Deterministic Nelder-Mead with standard coefficients (1, 2, 1/2, 1/2). The start point is
/// evaluated first; the best vertex never gets worse.
NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             const std::vector<double>& start, const NelderMeadOptions& options = {});

}  // namespace flexstage
