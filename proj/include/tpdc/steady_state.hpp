// steady_state.hpp: response tensors, the (p,q) stationary expansion in the
// drive amplitude, photon fluxes, and a harmonic-balance resummation for
// drives past the radius of convergence of that expansion.
//
// Superoperator vectors use row-major flattening: s_ij lives at i*N + j.
#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tpdc/bath.hpp"
#include "tpdc/fock_space.hpp"
#include "tpdc/spectrum.hpp"
#include "tpdc/units.hpp"

namespace tpdc {

struct DriveField {
    Complex E_in{0.0, 0.0};  // (photons/ns)^{1/2}
    double omega_in{0.0};    // rad/ns

    double flux() const { return std::norm(E_in); }
};

struct SolverOptions {
    int order{1};                          // max p = max q
    std::size_t n_lev{0};                  // 0 keeps every eigenstate
    LambShift lamb{LambShift::absorbed};
    double eps_floor{default_eps_floor};
    double order_tolerance{1e-2};          // allowed relative size of the highest order in F1
    double rcond_warning{1e-12};
};

using SparseOperator = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;

struct ResponseTensors {
    std::size_t n{0};
    Eigen::VectorXd energies;
    OperatorMatrix x, y, z;
    Eigen::MatrixXcd eta1;  // N^2 x N^2
    SparseOperator eta2;    // carries one power of conj(E_in)
    SparseOperator eta3;    // carries one power of E_in
    double drive_coupling{0.0};  // sqrt(2pi) xi^(3e)(omega_in)
    double omega_in{0.0};
    std::size_t index_lower{0};  // the dressed |g01>/|g30> pair
    std::size_t index_upper{0};
};

class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SingularSystemError : public std::runtime_error {
public:
    SingularSystemError(int p, int q, const std::string& what)
        : std::runtime_error("stationary solve (" + std::to_string(p) + "," + std::to_string(q) + "): " + what),
          p_(p), q_(q) {}
    int p() const { return p_; }
    int q() const { return q_; }

private:
    int p_, q_;
};

namespace detail {

// eta1 += A_mi A_jn (h_nj + h*_mi) - d_im sum_l A_jl A_ln h_nl - d_jn sum_l A_ml A_li h*_ml
inline void add_dissipator(Eigen::MatrixXcd& L, const OperatorMatrix& A, const OperatorMatrix& h) {
    const Eigen::Index N = A.rows();
    if (max_abs(h) == 0.0) return;
    OperatorMatrix B(N, N), C(N, N);
    for (Eigen::Index a = 0; a < N; ++a)
        for (Eigen::Index b = 0; b < N; ++b) {
            Complex sb = 0.0, sc = 0.0;
            for (Eigen::Index l = 0; l < N; ++l) {
                sb += A(a, l) * A(l, b) * h(b, l);
                sc += A(b, l) * A(l, a) * std::conj(h(b, l));
            }
            B(a, b) = sb;  // B[j,n]
            C(a, b) = sc;  // C[i,m]
        }
    for (Eigen::Index i = 0; i < N; ++i)
        for (Eigen::Index j = 0; j < N; ++j) {
            const Eigen::Index row = i * N + j;
            for (Eigen::Index m = 0; m < N; ++m) {
                const Complex ami = A(m, i);
                if (ami == Complex(0.0)) continue;
                const Complex hm = std::conj(h(m, i));
                for (Eigen::Index n = 0; n < N; ++n) L(row, m * N + n) += ami * A(j, n) * (h(n, j) + hm);
            }
            for (Eigen::Index n = 0; n < N; ++n) L(row, i * N + n) -= B(j, n);
            for (Eigen::Index m = 0; m < N; ++m) L(row, m * N + j) -= C(i, m);
        }
}

inline OperatorMatrix leading_block(const OperatorMatrix& A, std::size_t n) {
    return A.topLeftCorner(Eigen::Index(n), Eigen::Index(n));
}

}  // namespace detail

// Pair of dressed states with the largest |g01> + |g30> weight.
inline std::pair<std::size_t, std::size_t> anticrossing_indices(const Eigensystem& es) {
    std::optional<std::size_t> i01, i30;
    for (std::size_t k = 0; k < es.basis.size(); ++k) {
        const auto& b = es.basis[k];
        if (b.q == 0 && b.m == 0 && b.n == 1) i01 = k;
        if (b.q == 0 && b.m == 3 && b.n == 0) i30 = k;
    }
    if (!i01 || !i30) throw std::invalid_argument("eigensystem has no |g01>/|g30> basis states (n1_max < 3?)");
    std::vector<std::pair<double, std::size_t>> w;
    for (Eigen::Index j = 0; j < es.vectors.cols(); ++j)
        w.emplace_back(std::norm(es.vectors(Eigen::Index(*i01), j)) + std::norm(es.vectors(Eigen::Index(*i30), j)),
                       std::size_t(j));
    std::partial_sort(w.begin(), w.begin() + 2, w.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    return {std::min(w[0].second, w[1].second), std::max(w[0].second, w[1].second)};
}

inline ResponseTensors build_response_tensors(const Eigensystem& es, const BathSet& bath, const DriveField& drive,
                                              const SolverOptions& opt = {}) {
    if (!es.has_transition_matrices()) throw std::invalid_argument("build_response_tensors: eigensystem lacks x, y, z");
    bath.validate();
    const std::size_t D = es.size();
    const std::size_t N = opt.n_lev == 0 ? D : opt.n_lev;
    if (N > D) throw std::invalid_argument("build_response_tensors: n_lev exceeds the Hilbert dimension");
    ResponseTensors rt;
    if (!es.basis.empty()) {
        std::tie(rt.index_lower, rt.index_upper) = anticrossing_indices(es);
        if (rt.index_upper >= N)
            throw std::invalid_argument("build_response_tensors: n_lev = " + std::to_string(N) +
                                        " excludes the |g01>/|g30> branch (needs >= " +
                                        std::to_string(rt.index_upper + 1) + ")");
    }
    rt.n = N;
    rt.energies = es.energies.head(Eigen::Index(N));
    rt.x = detail::leading_block(es.x, N);
    rt.y = detail::leading_block(es.y, N);
    rt.z = detail::leading_block(es.z, N);
    rt.omega_in = drive.omega_in;

    const auto n2 = Eigen::Index(N * N);
    rt.eta1 = Eigen::MatrixXcd::Zero(n2, n2);
    for (Eigen::Index i = 0; i < Eigen::Index(N); ++i)
        for (Eigen::Index j = 0; j < Eigen::Index(N); ++j)
            rt.eta1(i * Eigen::Index(N) + j, i * Eigen::Index(N) + j) = Complex(0.0, rt.energies(i) - rt.energies(j));

    const SelfEnergyTable tab = build_self_energy_table(rt.energies, bath, opt.lamb, opt.eps_floor);
    detail::add_dissipator(rt.eta1, rt.x, tab[ChannelId::ext1] + tab[ChannelId::int1]);
    detail::add_dissipator(rt.eta1, rt.y, tab[ChannelId::ext3] + tab[ChannelId::int3]);
    detail::add_dissipator(rt.eta1, rt.z, tab[ChannelId::qubit]);

    // eta2_ijmn = i c (y_mi d_jn - y_jn d_im);  eta3_ijmn = conj(eta2_jinm)
    const double c = std::sqrt(two_pi) * coupling_xi(bath[ChannelId::ext3], drive.omega_in);
    rt.drive_coupling = c;
    std::vector<Eigen::Triplet<Complex>> t2, t3;
    const auto Ni = Eigen::Index(N);
    for (Eigen::Index i = 0; i < Ni && c != 0.0; ++i)
        for (Eigen::Index j = 0; j < Ni; ++j) {
            for (Eigen::Index m = 0; m < Ni; ++m)
                if (rt.y(m, i) != Complex(0.0)) t2.emplace_back(i * Ni + j, m * Ni + j, Complex(0.0, c) * rt.y(m, i));
            for (Eigen::Index n = 0; n < Ni; ++n)
                if (rt.y(j, n) != Complex(0.0)) t2.emplace_back(i * Ni + j, i * Ni + n, -Complex(0.0, c) * rt.y(j, n));
        }
    rt.eta2.resize(n2, n2);
    rt.eta2.setFromTriplets(t2.begin(), t2.end());
    for (const auto& t : t2) {
        const Eigen::Index i = t.row() / Ni, j = t.row() % Ni, m = t.col() / Ni, n = t.col() % Ni;
        t3.emplace_back(j * Ni + i, n * Ni + m, std::conj(t.value()));
    }
    rt.eta3.resize(n2, n2);
    rt.eta3.setFromTriplets(t3.begin(), t3.end());
    return rt;
}

// ---------------------------------------------------------------- solution

struct PerturbativeSolution {
    int order{0};
    std::size_t n{0};
    std::map<std::pair<int, int>, Eigen::MatrixXcd> coeff;  // s^(p,q) as N x N
    double min_rcond{1.0};
    std::vector<std::string> warnings;

    const Eigen::MatrixXcd& s(int p, int q) const {
        auto it = coeff.find({p, q});
        if (it == coeff.end())
            throw std::out_of_range("coefficient (" + std::to_string(p) + "," + std::to_string(q) + ") not computed");
        return it->second;
    }
    bool has(int p, int q) const { return coeff.count({p, q}) != 0; }
};

inline Eigen::VectorXcd flatten(const Eigen::MatrixXcd& S) {
    const Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> R = S;
    return Eigen::Map<const Eigen::VectorXcd>(R.data(), R.size());
}

inline Eigen::MatrixXcd unflatten(const Eigen::VectorXcd& v, std::size_t n) {
    return Eigen::Map<const Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        v.data(), Eigen::Index(n), Eigen::Index(n));
}

// (eta1 - i(p-q) w) s^(p,q) = -(eta2 s^(p-1,q) + eta3 s^(p,q-1)); for p = q the
// (0,0) row is replaced by the trace condition sum_j s_jj^(p,p) = delta_p0.
inline PerturbativeSolution solve_stationary(const ResponseTensors& rt, const SolverOptions& opt = {}) {
    if (opt.order < 1) throw std::invalid_argument("solve_stationary: order must be >= 1");
    const int P = opt.order;
    const auto N = Eigen::Index(rt.n);
    const Eigen::Index n2 = N * N;
    PerturbativeSolution sol;
    sol.order = P;
    sol.n = rt.n;

    std::map<int, Eigen::PartialPivLU<Eigen::MatrixXcd>> lu;
    auto factor = [&](int d, int p, int q) -> const Eigen::PartialPivLU<Eigen::MatrixXcd>& {
        auto it = lu.find(d);
        if (it != lu.end()) return it->second;
        Eigen::MatrixXcd M = rt.eta1;
        M.diagonal().array() -= Complex(0.0, double(d) * rt.omega_in);
        if (d == 0) {
            M.row(0).setZero();
            for (Eigen::Index j = 0; j < N; ++j) M(0, j * N + j) = 1.0;
        }
        Eigen::PartialPivLU<Eigen::MatrixXcd> f(M);
        // rcond() is only an estimate and misses exactly zero pivots
        const Eigen::VectorXd piv = f.matrixLU().diagonal().cwiseAbs();
        const double rc = std::min(f.rcond(), piv.maxCoeff() > 0.0 ? piv.minCoeff() / piv.maxCoeff() : 0.0);
        if (!(rc > 1e-15) || !std::isfinite(rc))
            throw SingularSystemError(p, q, "matrix is singular (rcond " + std::to_string(rc) + ")");
        if (rc < opt.rcond_warning)
            sol.warnings.push_back("ill-conditioned system at p-q=" + std::to_string(d) + " (rcond " +
                                   std::to_string(rc) + ")");
        sol.min_rcond = std::min(sol.min_rcond, rc);
        return lu.emplace(d, std::move(f)).first->second;
    };

    for (int total = 0; total <= 2 * P; ++total)
        for (int p = 0; p <= P; ++p) {
            const int q = total - p;
            if (q < 0 || q > P) continue;
            Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n2);
            if (p > 0) rhs -= rt.eta2 * flatten(sol.s(p - 1, q));
            if (q > 0) rhs -= rt.eta3 * flatten(sol.s(p, q - 1));
            if (p == q) rhs(0) = p == 0 ? 1.0 : 0.0;
            const Eigen::VectorXcd v = factor(p - q, p, q).solve(rhs);
            if (!v.allFinite()) throw SingularSystemError(p, q, "non-finite solution");
            sol.coeff[{p, q}] = unflatten(v, rt.n);
        }
    return sol;
}

// ------------------------------------------------------------------ fluxes

struct FluxResult {
    double F_in{0.0};
    double F1_out{0.0};
    double F3_out{0.0};
    double order_tail{0.0};  // |highest-order F1 term| / |F1|
    bool converged{true};

    double ratio1() const { return F_in > 0.0 ? F1_out / F_in : 0.0; }
    double ratio3() const { return F_in > 0.0 ? F3_out / F_in : 0.0; }
    double efficiency() const { return F_in > 0.0 ? F1_out / (3.0 * F_in) : 0.0; }
    double conservation_residual() const {
        return F_in > 0.0 ? std::abs(F1_out / 3.0 + F3_out - F_in) / F_in : 0.0;
    }
};

struct FluxKernels {
    OperatorMatrix K1, K3;  // sum_m conj(A_mi) A_mj xi(e_i - e_m) xi(e_j - e_m)
    OperatorMatrix cross;   // xi3(e_j - e_i) y_ij
};

inline FluxKernels flux_kernels(const ResponseTensors& rt, const BathSet& bath) {
    const auto N = Eigen::Index(rt.n);
    const BathChannel& c1 = bath[ChannelId::ext1];
    const BathChannel& c3 = bath[ChannelId::ext3];
    Eigen::MatrixXd X1(N, N), X3(N, N);
    for (Eigen::Index a = 0; a < N; ++a)
        for (Eigen::Index b = 0; b < N; ++b) {
            X1(a, b) = coupling_xi(c1, rt.energies(a) - rt.energies(b));
            X3(a, b) = coupling_xi(c3, rt.energies(a) - rt.energies(b));
        }
    FluxKernels k;
    k.K1 = OperatorMatrix::Zero(N, N);
    k.K3 = OperatorMatrix::Zero(N, N);
    k.cross = OperatorMatrix::Zero(N, N);
    for (Eigen::Index i = 0; i < N; ++i)
        for (Eigen::Index j = 0; j < N; ++j) {
            Complex a1 = 0.0, a3 = 0.0;
            for (Eigen::Index m = 0; m < N; ++m) {
                a1 += std::conj(rt.x(m, i)) * rt.x(m, j) * X1(i, m) * X1(j, m);
                a3 += std::conj(rt.y(m, i)) * rt.y(m, j) * X3(i, m) * X3(j, m);
            }
            k.K1(i, j) = a1;
            k.K3(i, j) = a3;
            k.cross(i, j) = X3(j, i) * rt.y(i, j);
        }
    return k;
}

namespace detail {
inline Complex contract(const OperatorMatrix& K, const Eigen::MatrixXcd& S) { return (K.array() * S.array()).sum(); }
}  // namespace detail

// Time-averaged fluxes at the drive amplitude. Only terms whose phase
// e^{i(p-q)w t} is cancelled by the explicit E_in(t) factors survive.
inline FluxResult fluxes(const PerturbativeSolution& sol, const ResponseTensors& rt, const BathSet& bath,
                         const DriveField& drive, double order_tolerance = 1e-2) {
    const FluxKernels k = flux_kernels(rt, bath);
    const double F = drive.flux();
    FluxResult r;
    r.F_in = F;
    if (F == 0.0) return r;
    double f1 = 0.0, f3 = F, last = 0.0;
    for (int p = 0; p <= sol.order; ++p) {
        const double w = std::pow(F, p);
        const double t1 = two_pi * w * detail::contract(k.K1, sol.s(p, p)).real();
        f1 += t1;
        f3 += two_pi * w * detail::contract(k.K3, sol.s(p, p)).real();
        last = t1;
    }
    // i sqrt(2pi) sum_ij xi3 y_ij [s_ji E_in - c.c.]; s_ji E_in is stationary for s^(p+1,p)
    for (int p = 0; p + 1 <= sol.order; ++p) {
        const Eigen::MatrixXcd St = sol.s(p + 1, p).transpose();
        const Complex a = detail::contract(k.cross, St);
        const Complex b = detail::contract(k.cross, St.conjugate());
        f3 += (Complex(0.0, std::sqrt(two_pi)) * std::pow(F, p + 1) * (a - b)).real();
    }
    r.F1_out = f1;
    r.F3_out = f3;
    r.order_tail = f1 != 0.0 ? std::abs(last) / std::abs(f1) : 0.0;
    r.converged = sol.order <= 1 || r.order_tail <= order_tolerance;
    return r;
}

// Weak-drive limit from the (1,1) and (1,0) coefficients, normalized to F_in = 1.
inline FluxResult linear_response(const PerturbativeSolution& sol, const ResponseTensors& rt, const BathSet& bath) {
    const FluxKernels k = flux_kernels(rt, bath);
    FluxResult r;
    r.F_in = 1.0;
    r.F1_out = two_pi * detail::contract(k.K1, sol.s(1, 1)).real();
    const Eigen::MatrixXcd St = sol.s(1, 0).transpose();
    r.F3_out = 1.0 + two_pi * detail::contract(k.K3, sol.s(1, 1)).real() +
               (Complex(0.0, std::sqrt(two_pi)) *
                (detail::contract(k.cross, St) - detail::contract(k.cross, St.conjugate())))
                   .real();
    return r;
}

// ((kappa_e/2)^2 + dw^2) / (10 kappa_e), photons/ns
inline double saturation_onset(double kappa_e, double delta_omega) {
    if (!(kappa_e > 0.0)) throw std::invalid_argument("saturation_onset: kappa_e must be > 0");
    return (0.25 * kappa_e * kappa_e + delta_omega * delta_omega) / (10.0 * kappa_e);
}

// ---------------------------------------------------------------- pipeline

struct PointEvaluation {
    FluxResult flux;
    double min_rcond{1.0};
    std::vector<std::string> warnings;
};

// eigensystem -> self-energies -> tensors -> solve -> fluxes.
// drive.E_in == 0 selects the linear-response (amplitude-free) ratios.
inline PointEvaluation evaluate_point(const Eigensystem& es, const BathSet& bath, const DriveField& drive,
                                      const SolverOptions& opt = {}) {
    const ResponseTensors rt = build_response_tensors(es, bath, drive, opt);
    const PerturbativeSolution sol = solve_stationary(rt, opt);
    PointEvaluation out;
    out.flux = drive.flux() == 0.0 ? linear_response(sol, rt, bath) : fluxes(sol, rt, bath, drive, opt.order_tolerance);
    out.min_rcond = sol.min_rcond;
    out.warnings = sol.warnings;
    return out;
}

// ------------------------------------------------------- harmonic balance

// Non-perturbative steady state. With c_d = sum_{p-q=d} conj(E_in)^p E_in^q s^(p,q) the
// order hierarchy resums to
//   (eta1 - i d w) c_d = -(conj(E_in) eta2 c_{d-1} + E_in eta3 c_{d+1}),  tr c_d = delta_d0,
// truncated at |d| <= K and solved by matrix continued fractions:
//   c_d = R_d c_{d-1} (d > 0),  c_d = L_d c_{d+1} (d < 0).
// K doubles until F1 and F3 settle. Valid past the radius of convergence of the
// order expansion.
struct HarmonicOptions {
    int initial_harmonics{4};
    int max_harmonics{128};
    double tolerance{1e-9};  // relative change of F1/F_in and F3/F_in between K and 2K
};

struct HarmonicSolution {
    int harmonics{0};
    double change{0.0};
    Eigen::MatrixXcd c0, c1;  // N x N
    FluxResult flux;
};

namespace detail {

inline HarmonicSolution harmonic_solve_fixed(const ResponseTensors& rt, const FluxKernels& k, Complex E, int K) {
    const auto N = Eigen::Index(rt.n);
    const Eigen::Index n2 = N * N;
    const Eigen::MatrixXcd up = std::conj(E) * Eigen::MatrixXcd(rt.eta2);    // couples c_{d-1} into row d
    const Eigen::MatrixXcd down = E * Eigen::MatrixXcd(rt.eta3);  // couples c_{d+1} into row d
    auto A = [&](int d) {
        Eigen::MatrixXcd M = rt.eta1;
        M.diagonal().array() -= Complex(0.0, double(d) * rt.omega_in);
        return M;
    };
    Eigen::MatrixXcd R = Eigen::MatrixXcd::Zero(n2, n2), L = R;
    for (int d = K; d >= 1; --d) {
        Eigen::MatrixXcd M = A(d) + down * R;
        R = -Eigen::PartialPivLU<Eigen::MatrixXcd>(M).solve(up);
    }
    for (int d = -K; d <= -1; ++d) {
        Eigen::MatrixXcd M = A(d) + up * L;
        L = -Eigen::PartialPivLU<Eigen::MatrixXcd>(M).solve(down);
    }
    Eigen::MatrixXcd M0 = A(0) + up * L + down * R;
    M0.row(0).setZero();
    for (Eigen::Index j = 0; j < N; ++j) M0(0, j * N + j) = 1.0;
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n2);
    rhs(0) = 1.0;
    const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(M0);
    const Eigen::VectorXd piv = lu.matrixLU().diagonal().cwiseAbs();
    if (!(piv.minCoeff() > 1e-15 * piv.maxCoeff())) throw SingularSystemError(0, 0, "harmonic balance: singular d=0 block");
    const Eigen::VectorXcd v0 = lu.solve(rhs);
    const Eigen::VectorXcd v1 = R * v0;
    if (!v0.allFinite() || !v1.allFinite()) throw SingularSystemError(0, 0, "harmonic balance: non-finite solution");

    HarmonicSolution h;
    h.harmonics = K;
    h.c0 = unflatten(v0, rt.n);
    h.c1 = unflatten(v1, rt.n);
    const double F = std::norm(E);
    FluxResult& r = h.flux;
    r.F_in = F;
    r.F1_out = two_pi * contract(k.K1, h.c0).real();
    const Eigen::MatrixXcd St = h.c1.transpose();
    r.F3_out = F + two_pi * contract(k.K3, h.c0).real() +
               (Complex(0.0, std::sqrt(two_pi)) * E * (contract(k.cross, St) - contract(k.cross, St.conjugate()))).real();
    r.converged = true;
    return h;
}

}  // namespace detail

inline HarmonicSolution harmonic_steady_state(const ResponseTensors& rt, const BathSet& bath, const DriveField& drive,
                                              const HarmonicOptions& opt = {}) {
    if (!(std::abs(drive.E_in) > 0.0)) throw std::invalid_argument("harmonic_steady_state: needs E_in != 0");
    if (opt.initial_harmonics < 1 || opt.max_harmonics < opt.initial_harmonics)
        throw std::invalid_argument("harmonic_steady_state: bad harmonic limits");
    const FluxKernels k = flux_kernels(rt, bath);
    HarmonicSolution prev = detail::harmonic_solve_fixed(rt, k, drive.E_in, opt.initial_harmonics);
    for (int K = 2 * opt.initial_harmonics; K <= opt.max_harmonics; K *= 2) {
        HarmonicSolution next = detail::harmonic_solve_fixed(rt, k, drive.E_in, K);
        const double d1 = std::abs(next.flux.ratio1() - prev.flux.ratio1());
        const double d3 = std::abs(next.flux.ratio3() - prev.flux.ratio3());
        next.change = std::max(d1, d3) / std::max(1.0, std::abs(next.flux.ratio1()));
        if (next.change <= opt.tolerance) return next;
        prev = std::move(next);
    }
    throw ConvergenceError("harmonic_steady_state: no convergence up to " + std::to_string(opt.max_harmonics) +
                           " harmonics (last change " + std::to_string(prev.change) + ")");
}

}  // namespace tpdc
