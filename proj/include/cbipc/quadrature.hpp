#pragma once

#include <functional>

namespace cbipc {

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    int intervals = 0;
    bool converged = false;
};

// Globally adaptive Gauss-Kronrod (7/15) on a finite interval [a, b].
// Stops when the summed error estimate is below max(abs_tol, rel_tol*|value|).
QuadResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                              double abs_tol, double rel_tol, int max_intervals = 4000);

// Adds a panel result into an accumulator; start the accumulator with converged = true.
inline void accumulate(QuadResult& total, const QuadResult& part) {
    total.value += part.value;
    total.error += part.error;
    total.intervals += part.intervals;
    total.converged = total.converged && part.converged;
}

}  // namespace cbipc
