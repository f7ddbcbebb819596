#ifndef FSIMLAB_OPTIMIZE_HPP
#define FSIMLAB_OPTIMIZE_HPP

#include <functional>
#include <vector>

namespace fsimlab {

struct NelderMeadOptions {
    double f_tol = 1e-10;       // simplex spread termination
    int max_evals = 2000;
    double initial_step = 0.1;  // per-coordinate simplex extent
};

struct NelderMeadResult {
    std::vector<double> x;
    double f = 0.0;
    int evals = 0;
    bool converged = false;
};

/// Downhill simplex minimization; derivative-free, deterministic.
NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             const std::vector<double>& x0, const NelderMeadOptions& opt = {});

}  // namespace fsimlab

#endif
