#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

namespace tpdc {

struct GoldenResult {
    double x{0.0};
    double fx{0.0};
    int evaluations{0};
};

// Minimize a unimodal f on [lo, hi] until the bracket is narrower than tol.
template <class F>
GoldenResult golden_section_minimize(F&& f, double lo, double hi, double tol, int max_iter = 500) {
    if (!(hi > lo)) throw std::invalid_argument("golden_section_minimize: empty interval");
    if (!(tol > 0.0)) throw std::invalid_argument("golden_section_minimize: tolerance must be positive");
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double c = b - r * (b - a);
    double d = a + r * (b - a);
    double fc = f(c), fd = f(d);
    int evals = 2;
    for (int it = 0; it < max_iter && (b - a) > tol; ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
        ++evals;
    }
    GoldenResult res;
    res.x = 0.5 * (a + b);
    res.fx = f(res.x);
    res.evaluations = evals + 1;
    return res;
}

}  // namespace tpdc
