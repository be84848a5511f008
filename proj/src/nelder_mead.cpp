#include "flexstage/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "flexstage/errors.hpp"

namespace flexstage {

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             const std::vector<double>& start, const NelderMeadOptions& opt) {
    const std::size_t n = start.size();
    if (n == 0) throw InputError("nelder_mead: empty start point");
    if (opt.max_evaluations < 1) throw InputError("nelder_mead: evaluation budget must be positive");

    NelderMeadResult res;
    auto eval = [&](const std::vector<double>& x) {
        ++res.evaluations;
        const double v = f(x);
        return std::isnan(v) ? INFINITY : v;
    };

    std::vector<std::vector<double>> simplex(n + 1, start);
    std::vector<double> values(n + 1, INFINITY);
    values[0] = eval(start);
    for (std::size_t i = 1; i <= n && res.evaluations < opt.max_evaluations; ++i) {
        simplex[i][i - 1] += opt.initial_step;
        values[i] = eval(simplex[i]);
    }

    std::vector<std::size_t> order(n + 1);
    auto sort_simplex = [&] {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        std::vector<std::vector<double>> s2;
        std::vector<double> v2;
        for (std::size_t i : order) {
            s2.push_back(simplex[i]);
            v2.push_back(values[i]);
        }
        simplex.swap(s2);
        values.swap(v2);
    };
    auto point = [&](const std::vector<double>& c, const std::vector<double>& w, double t) {
        std::vector<double> p(n);
        for (std::size_t k = 0; k < n; ++k) p[k] = c[k] + t * (w[k] - c[k]);
        return p;
    };

    while (res.evaluations < opt.max_evaluations) {
        sort_simplex();
        double diam = 0.0;
        for (std::size_t i = 1; i <= n; ++i)
            for (std::size_t k = 0; k < n; ++k)
                diam = std::max(diam, std::abs(simplex[i][k] - simplex[0][k]));
        if (std::isfinite(values[n]) && values[n] - values[0] <= opt.f_tolerance &&
            diam <= opt.x_tolerance) {
            res.converged = true;
            break;
        }
        if (diam <= opt.x_tolerance * 1e-3) {
            res.converged = true;
            break;
        }

        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k) centroid[k] += simplex[i][k] / static_cast<double>(n);

        const auto xr = point(centroid, simplex[n], -1.0);
        const double fr = eval(xr);
        if (fr < values[0]) {
            if (res.evaluations >= opt.max_evaluations) {
                simplex[n] = xr;
                values[n] = fr;
                break;
            }
            const auto xe = point(centroid, simplex[n], -2.0);
            const double fe = eval(xe);
            if (fe < fr) {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if (fr < values[n - 1]) {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        if (res.evaluations >= opt.max_evaluations) break;
        const bool outside = fr < values[n];
        const auto xc = outside ? point(centroid, xr, 0.5) : point(centroid, simplex[n], 0.5);
        const double fc = eval(xc);
        if (fc < std::min(fr, values[n])) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        for (std::size_t i = 1; i <= n && res.evaluations < opt.max_evaluations; ++i) {
            simplex[i] = point(simplex[0], simplex[i], 0.5);
            values[i] = eval(simplex[i]);
        }
    }
    sort_simplex();
    res.x = simplex[0];
    res.value = values[0];
    return res;
}

}  // namespace flexstage
