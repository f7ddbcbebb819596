#include "fsimlab/optimize.hpp"

#include <algorithm>
#include <cmath>

namespace fsimlab {

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             const std::vector<double>& x0, const NelderMeadOptions& opt) {
    const std::size_t n = x0.size();
    NelderMeadResult result;
    if (n == 0) {
        result.x = x0;
        result.f = f(x0);
        result.evals = 1;
        result.converged = true;
        return result;
    }

    std::vector<std::vector<double>> verts(n + 1, x0);
    for (std::size_t i = 0; i < n; ++i) {
        const double step = (x0[i] != 0.0) ? opt.initial_step * std::abs(x0[i]) + opt.initial_step
                                           : opt.initial_step;
        verts[i + 1][i] += step;
    }

    int evals = 0;
    std::vector<double> fv(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        fv[i] = f(verts[i]);
        ++evals;
    }

    const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;
    while (evals < opt.max_evals) {
        std::vector<std::size_t> order(n + 1);
        for (std::size_t i = 0; i <= n; ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        std::vector<std::vector<double>> vs(n + 1);
        std::vector<double> fs(n + 1);
        for (std::size_t i = 0; i <= n; ++i) {
            vs[i] = verts[order[i]];
            fs[i] = fv[order[i]];
        }
        verts.swap(vs);
        fv.swap(fs);

        if (std::abs(fv[n] - fv[0]) <= opt.f_tol) {
            result.converged = true;
            break;
        }

        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) centroid[j] += verts[i][j] / n;

        auto blend = [&](double coef) {
            std::vector<double> p(n);
            for (std::size_t j = 0; j < n; ++j) p[j] = centroid[j] + coef * (centroid[j] - verts[n][j]);
            return p;
        };

        std::vector<double> xr = blend(alpha);
        const double fr = f(xr);
        ++evals;
        if (fr < fv[0]) {
            std::vector<double> xe = blend(gamma);
            const double fe = f(xe);
            ++evals;
            if (fe < fr) {
                verts[n] = xe;
                fv[n] = fe;
            } else {
                verts[n] = xr;
                fv[n] = fr;
            }
        } else if (fr < fv[n - 1]) {
            verts[n] = xr;
            fv[n] = fr;
        } else {
            std::vector<double> xc = blend(fr < fv[n] ? rho : -rho);
            const double fc = f(xc);
            ++evals;
            const double fbound = std::min(fr, fv[n]);
            if (fc < fbound) {
                verts[n] = xc;
                fv[n] = fc;
            } else {
                for (std::size_t i = 1; i <= n && evals < opt.max_evals; ++i) {
                    for (std::size_t j = 0; j < n; ++j)
                        verts[i][j] = verts[0][j] + sigma * (verts[i][j] - verts[0][j]);
                    fv[i] = f(verts[i]);
                    ++evals;
                }
            }
        }
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i <= n; ++i)
        if (fv[i] < fv[best]) best = i;
    result.x = verts[best];
    result.f = fv[best];
    result.evals = evals;
    return result;
}

}  // namespace fsimlab
