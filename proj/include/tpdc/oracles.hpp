// oracles.hpp: independent cross-checks for the stationary expansion:
// direct time integration of the s_ij equation of motion, the linear
// two-oscillator transmission model, and quadrature of the radiation kernel.
#pragma once

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tpdc/bath.hpp"
#include "tpdc/steady_state.hpp"
#include "tpdc/units.hpp"

namespace tpdc {

// ------------------------------------------------------------ time domain

struct TimeDomainOptions {
    double t_final{200.0};          // ns
    int steps_per_period{40};       // dt = (2pi/omega_in) / steps_per_period
    int window_periods{10};         // averaging window length in drive periods
    double drift_tolerance{5e-3};   // between windows ending at 0.8, 0.9, 1.0 t_final
    std::size_t trace_samples{0};   // store this many evenly spaced snapshots of s
    std::optional<Eigen::MatrixXcd> initial;  // default: ground projector
};

struct TimeDomainResult {
    FluxResult flux;                          // averaged over the final window
    std::array<double, 3> window_F1{};        // windows ending at 0.8, 0.9, 1.0 t_final
    std::array<double, 3> window_F3{};
    double drift{0.0};
    double max_trace_error{0.0};
    double dt{0.0};
    long steps{0};
    Eigen::MatrixXcd final_state;
    std::vector<double> sample_times;
    std::vector<Eigen::MatrixXcd> samples;
};

// Fixed-step integrating-factor RK4 for
//   ds/dt = eta1 s + conj(E(t)) eta2 s + E(t) eta3 s,   E(t) = E_in e^{-i w t}.
// The free rotation i(e_i - e_j) is applied exactly; the remainder is RK4.
inline TimeDomainResult time_domain_steady_state(const ResponseTensors& rt, const BathSet& bath,
                                                 const DriveField& drive, const TimeDomainOptions& opt = {}) {
    if (!(drive.omega_in > 0.0)) throw std::invalid_argument("time_domain_steady_state: omega_in must be > 0");
    if (opt.steps_per_period < 40) throw std::invalid_argument("time_domain_steady_state: steps_per_period must be >= 40");
    const auto N = Eigen::Index(rt.n);
    const Eigen::Index n2 = N * N;
    const double period = two_pi / drive.omega_in;
    const double h = period / opt.steps_per_period;
    const long nsteps = std::max<long>(1, std::lround(opt.t_final / h));
    const long win = long(opt.window_periods) * opt.steps_per_period;
    if (win * 3 > nsteps) throw std::invalid_argument("time_domain_steady_state: t_final shorter than the averaging windows");

    Eigen::VectorXcd free(n2);
    for (Eigen::Index i = 0; i < N; ++i)
        for (Eigen::Index j = 0; j < N; ++j) free(i * N + j) = Complex(0.0, rt.energies(i) - rt.energies(j));
    Eigen::MatrixXcd R = rt.eta1;
    R.diagonal() -= free;
    const Eigen::VectorXcd half = (free * (0.5 * h)).array().exp();
    const Eigen::VectorXcd full = half.cwiseProduct(half);

    const SparseOperator eta2 = rt.eta2, eta3 = rt.eta3;
    auto rhs = [&](const Eigen::VectorXcd& s, double t) -> Eigen::VectorXcd {
        const Complex e = drive.E_in * std::exp(Complex(0.0, -drive.omega_in * t));
        Eigen::VectorXcd out = R * s;
        if (e != Complex(0.0)) out += std::conj(e) * (eta2 * s) + e * (eta3 * s);
        return out;
    };

    Eigen::VectorXcd s = Eigen::VectorXcd::Zero(n2);
    if (opt.initial) {
        if (opt.initial->rows() != N || opt.initial->cols() != N)
            throw std::invalid_argument("time_domain_steady_state: initial state has wrong size");
        s = flatten(*opt.initial);
    } else {
        s(0) = 1.0;
    }

    const FluxKernels k = flux_kernels(rt, bath);
    const Eigen::VectorXcd K1 = flatten(k.K1), K3 = flatten(k.K3);
    const double F = drive.flux();
    auto inst_fluxes = [&](const Eigen::VectorXcd& v, double t) {
        const Complex e = drive.E_in * std::exp(Complex(0.0, -drive.omega_in * t));
        const Eigen::MatrixXcd St = unflatten(v, rt.n).transpose() * e;
        const double f1 = two_pi * (K1.transpose() * v)(0).real();
        const double cross = (Complex(0.0, std::sqrt(two_pi)) *
                              ((k.cross.array() * St.array()).sum() - (k.cross.array() * St.conjugate().array()).sum()))
                                 .real();
        const double f3 = F + two_pi * (K3.transpose() * v)(0).real() + cross;
        return std::pair<double, double>{f1, f3};
    };
    auto trace_of = [&](const Eigen::VectorXcd& v) {
        Complex tr = 0.0;
        for (Eigen::Index j = 0; j < N; ++j) tr += v(j * N + j);
        return tr;
    };

    std::array<long, 3> window_end{std::lround(0.8 * double(nsteps)), std::lround(0.9 * double(nsteps)), nsteps};
    TimeDomainResult res;
    res.dt = h;
    res.steps = nsteps;
    std::array<double, 3> acc1{}, acc3{};
    const long sample_every = opt.trace_samples > 0 ? std::max<long>(1, nsteps / long(opt.trace_samples)) : 0;
    if (sample_every) {
        res.sample_times.push_back(0.0);
        res.samples.push_back(unflatten(s, rt.n));
    }
    for (long n = 0; n < nsteps; ++n) {
        const double t = double(n) * h;
        const Eigen::VectorXcd k1 = rhs(s, t);
        const Eigen::VectorXcd k2 = rhs(half.cwiseProduct(s + (0.5 * h) * k1), t + 0.5 * h);
        const Eigen::VectorXcd k3 = rhs(half.cwiseProduct(s) + (0.5 * h) * k2, t + 0.5 * h);
        const Eigen::VectorXcd k4 = rhs(full.cwiseProduct(s) + h * half.cwiseProduct(k3), t + h);
        s = full.cwiseProduct(s) + (h / 6.0) * (full.cwiseProduct(k1) + 2.0 * half.cwiseProduct(k2 + k3) + k4);
        const long step = n + 1;
        const double tn = double(step) * h;
        res.max_trace_error = std::max(res.max_trace_error, std::abs(trace_of(s) - Complex(1.0)));
        for (int w = 0; w < 3; ++w)
            if (step > window_end[std::size_t(w)] - win && step <= window_end[std::size_t(w)]) {
                const auto [f1, f3] = inst_fluxes(s, tn);
                acc1[std::size_t(w)] += f1;
                acc3[std::size_t(w)] += f3;
            }
        if (sample_every && step % sample_every == 0) {
            res.sample_times.push_back(tn);
            res.samples.push_back(unflatten(s, rt.n));
        }
    }
    for (std::size_t w = 0; w < 3; ++w) {
        res.window_F1[w] = acc1[w] / double(win);
        res.window_F3[w] = acc3[w] / double(win);
    }
    res.flux.F_in = F;
    res.flux.F1_out = res.window_F1[2];
    res.flux.F3_out = res.window_F3[2];
    res.final_state = unflatten(s, rt.n);
    if (F > 0.0) {
        const double ref = std::max(std::abs(res.window_F1[2]), 1e-300);
        res.drift = std::max(std::abs(res.window_F1[1] - res.window_F1[2]), std::abs(res.window_F1[0] - res.window_F1[2])) / ref;
        if (res.drift > opt.drift_tolerance) {
            std::ostringstream os;
            os << "time-domain fluxes not stationary: F1 windows " << res.window_F1[0] << ", " << res.window_F1[1]
               << ", " << res.window_F1[2] << " (drift " << res.drift << " > " << opt.drift_tolerance
               << "); increase t_final";
            throw ConvergenceError(os.str());
        }
    }
    return res;
}

// --------------------------------------------------------- two oscillators

struct TwoOscillatorParams {
    double omega_c{0.0};
    double g_eff{0.0};
    double kappa_1{0.0};
    double kappa_2{0.0};
    double omega_in{0.0};
};

// Stationary amplitudes from
//   d a1/dt = (-i w_c - k1/2) a1 - i g a2 - i sqrt(k1) b_in
//   d a2/dt = (-i w_c - k2/2) a2 - i g a1
// with d/dt -> -i w_in; returns T = <b_out,2>/<b_in,1> = -i sqrt(k2) a2 / b_in.
inline Complex two_oscillator_transmission(const TwoOscillatorParams& p) {
    if (p.kappa_1 < 0.0 || p.kappa_2 < 0.0) throw std::invalid_argument("two_oscillator_transmission: rates must be >= 0");
    const Complex I(0.0, 1.0);
    Eigen::Matrix2cd M;
    M << I * (p.omega_c - p.omega_in) + 0.5 * p.kappa_1, I * p.g_eff,
         I * p.g_eff, I * (p.omega_c - p.omega_in) + 0.5 * p.kappa_2;
    Eigen::Vector2cd b(-I * std::sqrt(p.kappa_1), 0.0);
    const Eigen::Vector2cd a = M.fullPivLu().solve(b);
    return -I * std::sqrt(p.kappa_2) * a(1);
}

// Resonant closed form i sqrt(k1 k2) g / (k1 k2 / 4 + g^2).
inline Complex two_oscillator_transmission_resonant(double g_eff, double kappa_1, double kappa_2) {
    const double den = 0.25 * kappa_1 * kappa_2 + g_eff * g_eff;
    if (den == 0.0) return 0.0;
    return Complex(0.0, std::sqrt(kappa_1 * kappa_2) * g_eff / den);
}

// ---------------------------------------------------------- quadrature

namespace detail {

// Complex integral over [a, b] by adaptive G7/K15 on the real and imaginary parts.
template <class F>
Complex gk_complex(F&& f, double a, double b, double tol, double* err_out) {
    using gk = boost::math::quadrature::gauss_kronrod<double, 15>;
    double e_re = 0.0, e_im = 0.0;
    const double re = gk::integrate([&](double k) { return f(k).real(); }, a, b, 12, tol, &e_re);
    const double im = gk::integrate([&](double k) { return f(k).imag(); }, a, b, 12, tol, &e_im);
    if (err_out) *err_out = std::hypot(e_re * std::max(std::abs(re), 1.0), e_im * std::max(std::abs(im), 1.0));
    return {re, im};
}

}  // namespace detail

struct RadiationKernelSample {
    double eps{0.0};
    double r{0.0};
    double t{0.0};
    Complex f_exact;
    Complex f_app;
    double error_estimate{0.0};
};

// f_app = -i sqrt(2pi) xi_eps theta(eps) theta(r) theta(t - r)
inline Complex radiation_kernel_approx(const BathChannel& c, double eps, double r, double t) {
    if (!(eps > 0.0) || r < 0.0 || r > t) return 0.0;
    return Complex(0.0, -std::sqrt(two_pi) * coupling_xi(c, eps));
}

// f(eps, r, t) = (1/sqrt(2pi)) int_0^kx dk xi_k/(k - eps) [e^{i(k-eps)(r-t)} - e^{i(k-eps)r}].
// The bracket is rewritten as e^{iu(2r-t)/2} 2i sin(-ut/2) with u = k - eps,
// which has the finite limit -it at u = 0.
inline RadiationKernelSample radiation_kernel(const BathChannel& c, double eps, double r, double t,
                                              double tol = 1e-9) {
    const double xi = std::sqrt(c.rate / two_pi);
    auto integrand = [&](double k) -> Complex {
        const double u = k - eps;
        const Complex phase = std::exp(Complex(0.0, 0.5 * u * (2.0 * r - t)));
        const double x = 0.5 * u * t;
        const double sinc = std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x;
        return xi * phase * Complex(0.0, -t) * sinc;
    };
    const double scale = std::max({std::abs(r), std::abs(t - r), 1.0});
    const double width = pi / (4.0 * scale);
    const auto panels = std::size_t(std::ceil(c.cutoff / width));
    Complex sum = 0.0;
    double err = 0.0;
    for (std::size_t k = 0; k < panels; ++k) {
        const double a = c.cutoff * double(k) / double(panels);
        const double b = c.cutoff * double(k + 1) / double(panels);
        double e = 0.0;
        sum += detail::gk_complex(integrand, a, b, tol, &e);
        err += e;
    }
    RadiationKernelSample s;
    s.eps = eps;
    s.r = r;
    s.t = t;
    s.f_exact = sum / std::sqrt(two_pi);
    s.f_app = radiation_kernel_approx(c, eps, r, t);
    s.error_estimate = err / std::sqrt(two_pi);
    if (!std::isfinite(s.error_estimate) || s.error_estimate > 1e-4 * std::max(xi, 1e-300))
        throw ConvergenceError("radiation_kernel: quadrature did not converge at r = " + std::to_string(r));
    return s;
}

inline std::vector<RadiationKernelSample> radiation_kernel_compare(const BathChannel& c, double eps,
                                                                   const std::vector<double>& r_grid, double t) {
    std::vector<RadiationKernelSample> out;
    out.reserve(r_grid.size());
    for (double r : r_grid) out.push_back(radiation_kernel(c, eps, r, t));
    return out;
}

// h(eps) = -i int_0^kx dk xi^2 / (k - eps - i eta), finite eta, by panelled
// quadrature with breakpoints clustered around k = eps.
inline Complex self_energy_quadrature(const BathChannel& c, double eps, double eta = from_khz(100.0)) {
    const double xi2 = c.rate / two_pi;
    auto integrand = [&](double k) -> Complex {
        const double u = k - eps;
        return xi2 * Complex(eta, -u) / (u * u + eta * eta);
    };
    std::vector<double> cuts{0.0, c.cutoff};
    for (int p = 0; p <= 8; ++p)
        for (double sgn : {-1.0, 1.0}) {
            const double x = eps + sgn * eta * std::pow(10.0, p);
            if (x > 0.0 && x < c.cutoff) cuts.push_back(x);
        }
    if (eps > 0.0 && eps < c.cutoff) cuts.push_back(eps);
    std::sort(cuts.begin(), cuts.end());
    Complex sum = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
        if (cuts[k + 1] > cuts[k]) sum += detail::gk_complex(integrand, cuts[k], cuts[k + 1], 1e-10, nullptr);
    return sum;
}

}  // namespace tpdc
