// spectrum.hpp: diagonalization of H_s, dressed-state labelling, the
// |g01>/|g30> anticrossing and dissipationless Rabi dynamics.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "tpdc/fock_space.hpp"
#include "tpdc/golden_section.hpp"
#include "tpdc/units.hpp"

namespace tpdc {

struct Eigensystem {
    Eigen::VectorXd energies;             // ascending
    OperatorMatrix vectors;               // columns |j> in the bare basis
    OperatorMatrix x, y, z;               // <i|X|j>, <i|Y|j>, <i|Z|j>
    std::vector<int> parity;              // per eigenstate, empty when unknown
    std::vector<BareStateIndex> basis;    // bare labels of the rows, empty when unknown

    std::size_t size() const { return static_cast<std::size_t>(energies.size()); }
    bool has_transition_matrices() const { return x.size() != 0; }
};

namespace detail {

// Rotate each eigenvector so its largest component is real and positive.
// A real symmetric H then yields real eigenvectors, and output is reproducible.
inline void fix_phases(OperatorMatrix& V) {
    for (Eigen::Index j = 0; j < V.cols(); ++j) {
        Eigen::Index k = 0;
        V.col(j).cwiseAbs().maxCoeff(&k);
        const Complex c = V(k, j);
        if (std::abs(c) > 0.0) V.col(j) *= std::conj(c) / std::abs(c);
    }
}

inline void check_hermitian(const OperatorMatrix& H) {
    if (H.rows() != H.cols() || H.rows() == 0)
        throw std::invalid_argument("eigendecompose: matrix must be square and non-empty");
    const double scale = max_abs(H);
    if (max_abs(H - H.adjoint()) > 1e-12 * std::max(scale, 1e-300))
        throw std::invalid_argument("eigendecompose: matrix is not Hermitian");
}

}  // namespace detail

// Energies and eigenvectors of an arbitrary Hermitian matrix.
inline Eigensystem eigendecompose(const OperatorMatrix& H) {
    detail::check_hermitian(H);
    Eigen::SelfAdjointEigenSolver<OperatorMatrix> solver(H);
    if (solver.info() != Eigen::Success) throw std::runtime_error("eigendecompose: solver failed");
    Eigensystem es;
    es.energies = solver.eigenvalues();
    es.vectors = solver.eigenvectors();
    detail::fix_phases(es.vectors);
    return es;
}

// Full eigensystem of the model. Each parity sector is diagonalized on its
// own so every eigenstate carries an exact parity label.
inline Eigensystem eigendecompose(const SystemModel& model) {
    const OperatorMatrix& H = model.hamiltonian;
    detail::check_hermitian(H);
    const auto D = static_cast<std::size_t>(H.rows());
    const double scale = max_abs(H);

    bool sectors_ok = model.parity.size() == D;
    for (std::size_t i = 0; sectors_ok && i < D; ++i)
        for (std::size_t j = 0; j < D; ++j)
            if (model.parity[i] != model.parity[j] &&
                std::abs(H(Eigen::Index(i), Eigen::Index(j))) > 1e-12 * scale) {
                sectors_ok = false;
                break;
            }

    Eigensystem es;
    if (!sectors_ok) {
        es = eigendecompose(H);
    } else {
        struct Pair {
            double energy;
            int parity;
            Eigen::VectorXcd vec;
        };
        std::vector<Pair> pairs;
        for (int sector : {1, -1}) {
            std::vector<Eigen::Index> idx;
            for (std::size_t i = 0; i < D; ++i)
                if (model.parity[i] == sector) idx.push_back(Eigen::Index(i));
            if (idx.empty()) continue;
            const auto n = Eigen::Index(idx.size());
            OperatorMatrix sub(n, n);
            for (Eigen::Index a = 0; a < n; ++a)
                for (Eigen::Index b = 0; b < n; ++b) sub(a, b) = H(idx[a], idx[b]);
            Eigen::SelfAdjointEigenSolver<OperatorMatrix> solver(sub);
            if (solver.info() != Eigen::Success) throw std::runtime_error("eigendecompose: solver failed");
            for (Eigen::Index k = 0; k < n; ++k) {
                Eigen::VectorXcd v = Eigen::VectorXcd::Zero(Eigen::Index(D));
                for (Eigen::Index a = 0; a < n; ++a) v(idx[a]) = solver.eigenvectors()(a, k);
                pairs.push_back(Pair{solver.eigenvalues()(k), sector, std::move(v)});
            }
        }
        std::stable_sort(pairs.begin(), pairs.end(),
                         [](const Pair& a, const Pair& b) { return a.energy < b.energy; });
        es.energies.resize(Eigen::Index(D));
        es.vectors.resize(Eigen::Index(D), Eigen::Index(D));
        for (std::size_t k = 0; k < D; ++k) {
            es.energies(Eigen::Index(k)) = pairs[k].energy;
            es.vectors.col(Eigen::Index(k)) = pairs[k].vec;
            es.parity.push_back(pairs[k].parity);
        }
        detail::fix_phases(es.vectors);
    }
    es.x = es.vectors.adjoint() * model.ops.X * es.vectors;
    es.y = es.vectors.adjoint() * model.ops.Y * es.vectors;
    es.z = es.vectors.adjoint() * model.ops.Z * es.vectors;
    es.basis = model.basis;
    return es;
}

inline Eigensystem eigendecompose(const SystemParams& p) { return eigendecompose(build_model(p)); }

// max_j ||H v_j - e_j v_j|| / max|e|
inline double eigen_residual(const OperatorMatrix& H, const Eigensystem& es) {
    const OperatorMatrix R = H * es.vectors - es.vectors * es.energies.asDiagonal();
    double worst = 0.0;
    for (Eigen::Index j = 0; j < R.cols(); ++j) worst = std::max(worst, R.col(j).norm());
    return worst / std::max(es.energies.cwiseAbs().maxCoeff(), 1e-300);
}

inline double unitarity_defect(const Eigensystem& es) {
    const auto n = es.vectors.cols();
    return max_abs(es.vectors.adjoint() * es.vectors - OperatorMatrix::Identity(n, n));
}

struct LabelResult {
    std::size_t index{0};
    double overlap{0.0};
    double runner_up{0.0};
    bool ambiguous{false};  // top two overlaps within 0.05
};

// Dressed state with maximum |<j|target>|^2.
inline LabelResult label_state(const Eigensystem& es, std::size_t target_flat) {
    if (target_flat >= std::size_t(es.vectors.rows())) throw std::out_of_range("label_state: bad bare index");
    LabelResult r;
    double best = -1.0, second = -1.0;
    for (Eigen::Index j = 0; j < es.vectors.cols(); ++j) {
        const double w = std::norm(es.vectors(Eigen::Index(target_flat), j));
        if (w > best) {
            second = best;
            best = w;
            r.index = std::size_t(j);
        } else if (w > second) {
            second = w;
        }
    }
    r.overlap = best;
    r.runner_up = std::max(second, 0.0);
    r.ambiguous = (best - r.runner_up) < 0.05;
    return r;
}

inline LabelResult label_state(const Eigensystem& es, const BareStateIndex& target) {
    return label_state(es, target.flat_index);
}

// ---------------------------------------------------------------- anticrossing

// The two dressed states carrying the |g01>, |g30> weight at one omega_q.
struct PairSample {
    double omega_q{0.0};
    double ground{0.0};
    double lower{0.0};  // absolute energies
    double upper{0.0};
    std::size_t lower_index{0};
    std::size_t upper_index{0};

    double splitting() const { return upper - lower; }
    double mean_transition() const { return 0.5 * (lower + upper) - ground; }
};

inline PairSample pair_from_eigensystem(const Eigensystem& es, const SystemParams& p, double omega_q) {
    const auto i01 = Eigen::Index(flat_index(p, 0, 0, 1));
    const auto i30 = Eigen::Index(flat_index(p, 0, 3, 0));
    std::vector<std::pair<double, std::size_t>> weight;
    for (Eigen::Index j = 0; j < es.vectors.cols(); ++j)
        weight.emplace_back(std::norm(es.vectors(i01, j)) + std::norm(es.vectors(i30, j)), std::size_t(j));
    std::partial_sort(weight.begin(), weight.begin() + 2, weight.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first; });
    const std::size_t a = std::min(weight[0].second, weight[1].second);
    const std::size_t b = std::max(weight[0].second, weight[1].second);
    PairSample s;
    s.omega_q = omega_q;
    s.ground = es.energies(0);
    s.lower = es.energies(Eigen::Index(a));
    s.upper = es.energies(Eigen::Index(b));
    s.lower_index = a;
    s.upper_index = b;
    return s;
}

inline PairSample anticrossing_pair(SystemParams p, double omega_q) {
    if (p.n1_max < 3) throw std::invalid_argument("anticrossing_pair: n1_max must be >= 3 to hold |g30>");
    p.omega_q = omega_q;
    const SystemModel model = build_model(p);
    return pair_from_eigensystem(eigendecompose(model), p, omega_q);
}

// Energies measured from the ground level.
struct BranchPoint {
    double omega_q{0.0};
    double eps_lower{0.0};
    double eps_upper{0.0};
    double eps_branch_a{0.0};  // followed by eigenvector continuation from the first grid point
    double eps_branch_b{0.0};
    double overlap_g01_a{0.0};  // |<a|g01>|^2
};

struct AnticrossingResult {
    double omega_q_opt{0.0};
    double g_eff{0.0};
    double omega_in_opt{0.0};
    double eps_lower{0.0};  // from ground, at the optimum
    double eps_upper{0.0};
    int evaluations{0};
    std::vector<BranchPoint> scan;
};

// Branch tracking across an omega_q grid. The two branches are seeded at the
// first grid point by bare overlap and then followed by maximum overlap with
// the previous point's eigenvectors.
inline std::vector<BranchPoint> scan_branches(const SystemParams& base, std::span<const double> omega_q_grid) {
    std::vector<BranchPoint> out;
    Eigen::VectorXcd prev_a, prev_b;
    const auto i01 = Eigen::Index(flat_index(base, 0, 0, 1));
    for (double wq : omega_q_grid) {
        SystemParams p = base;
        p.omega_q = wq;
        const Eigensystem es = eigendecompose(build_model(p));
        const PairSample pair = pair_from_eigensystem(es, p, wq);
        std::size_t ia = 0, ib = 0;
        if (prev_a.size() == 0) {
            const double w_lo = std::norm(es.vectors(i01, Eigen::Index(pair.lower_index)));
            const double w_hi = std::norm(es.vectors(i01, Eigen::Index(pair.upper_index)));
            ia = w_lo >= w_hi ? pair.lower_index : pair.upper_index;
            ib = w_lo >= w_hi ? pair.upper_index : pair.lower_index;
        } else {
            double best_a = -1.0, best_b = -1.0;
            for (Eigen::Index j = 0; j < es.vectors.cols(); ++j) {
                const double oa = std::norm(prev_a.dot(es.vectors.col(j)));
                const double ob = std::norm(prev_b.dot(es.vectors.col(j)));
                if (oa > best_a) { best_a = oa; ia = std::size_t(j); }
                if (ob > best_b) { best_b = ob; ib = std::size_t(j); }
            }
        }
        prev_a = es.vectors.col(Eigen::Index(ia));
        prev_b = es.vectors.col(Eigen::Index(ib));
        BranchPoint bp;
        bp.omega_q = wq;
        bp.eps_lower = pair.lower - pair.ground;
        bp.eps_upper = pair.upper - pair.ground;
        bp.eps_branch_a = es.energies(Eigen::Index(ia)) - pair.ground;
        bp.eps_branch_b = es.energies(Eigen::Index(ib)) - pair.ground;
        bp.overlap_g01_a = std::norm(es.vectors(i01, Eigen::Index(ia)));
        out.push_back(bp);
    }
    return out;
}

// Golden-section minimization of the pair splitting over omega_q in [lo, hi].
// g_eff is half the minimal splitting; omega_in_opt the mean transition energy.
inline AnticrossingResult find_optimum(const SystemParams& base, double lo, double hi,
                                       double tol = from_khz(1.0)) {
    if (!(hi > lo)) throw std::invalid_argument("find_optimum: empty omega_q window");
    auto splitting = [&](double wq) { return anticrossing_pair(base, wq).splitting(); };
    const GoldenResult g = golden_section_minimize(splitting, lo, hi, tol);
    const double f_lo = splitting(lo), f_hi = splitting(hi);
    if (g.x - lo < 2.0 * tol || hi - g.x < 2.0 * tol || !(g.fx < f_lo && g.fx < f_hi))
        throw std::domain_error("find_optimum: omega_q window does not bracket a splitting minimum");
    const PairSample at = anticrossing_pair(base, g.x);
    AnticrossingResult r;
    r.omega_q_opt = g.x;
    r.g_eff = 0.5 * at.splitting();
    r.omega_in_opt = at.mean_transition();
    r.eps_lower = at.lower - at.ground;
    r.eps_upper = at.upper - at.ground;
    r.evaluations = g.evaluations + 3;
    return r;
}

// Coarse scan of the splitting over [lo, hi], then golden-section inside the
// two grid cells around the coarse minimum. For windows that hold other
// avoided crossings or where the optimum position is only roughly known.
inline AnticrossingResult find_optimum_scanned(const SystemParams& base, double lo, double hi, int coarse_points = 41,
                                               double tol = from_khz(1.0)) {
    if (coarse_points < 3) throw std::invalid_argument("find_optimum_scanned: need >= 3 coarse points");
    if (!(hi > lo)) throw std::invalid_argument("find_optimum_scanned: empty omega_q window");
    std::vector<double> grid(static_cast<std::size_t>(coarse_points)), split(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        grid[k] = lo + (hi - lo) * double(k) / double(coarse_points - 1);
        split[k] = anticrossing_pair(base, grid[k]).splitting();
    }
    const auto k = std::size_t(std::min_element(split.begin(), split.end()) - split.begin());
    if (k == 0 || k + 1 == grid.size())
        throw std::domain_error("find_optimum_scanned: splitting minimum lies on the window edge");
    return find_optimum(base, grid[k - 1], grid[k + 1], tol);
}

// --------------------------------------------------------------------- Rabi

struct RabiTrace {
    std::vector<double> times;
    std::vector<double> p_initial;
    std::vector<double> p_partner;
    std::vector<double> p_other;
};

// |psi(t)> = sum_j exp(-i e_j t) |j><j|initial>
inline RabiTrace rabi_evolve(const Eigensystem& es, std::size_t initial_flat, std::size_t partner_flat,
                             std::span<const double> times) {
    const auto D = es.vectors.rows();
    if (initial_flat >= std::size_t(D) || partner_flat >= std::size_t(D))
        throw std::out_of_range("rabi_evolve: bad bare index");
    const Eigen::VectorXcd c = es.vectors.row(Eigen::Index(initial_flat)).adjoint();
    RabiTrace tr;
    tr.times.assign(times.begin(), times.end());
    Eigen::VectorXcd phased(c.size());
    for (double t : times) {
        for (Eigen::Index j = 0; j < c.size(); ++j)
            phased(j) = std::exp(Complex(0.0, -es.energies(j) * t)) * c(j);
        const Eigen::VectorXcd psi = es.vectors * phased;
        const double pi = std::norm(psi(Eigen::Index(initial_flat)));
        const double pp = std::norm(psi(Eigen::Index(partner_flat)));
        double rest = 0.0;
        for (Eigen::Index k = 0; k < D; ++k)
            if (std::size_t(k) != initial_flat && std::size_t(k) != partner_flat) rest += std::norm(psi(k));
        tr.p_initial.push_back(pi);
        tr.p_partner.push_back(pp);
        tr.p_other.push_back(rest);
    }
    return tr;
}

// Time of the first return of p_initial to a maximum after it has swung
// through its midpoint. Fast admixture beats alias on a coarse grid, so the
// coarse peak comes from a boxcar-smoothed trace and the vertex from a
// least-squares parabola through the raw samples around it.
inline double rabi_period(const RabiTrace& tr, std::size_t smoothing = 41) {
    const auto& p = tr.p_initial;
    const std::size_t n = p.size();
    if (n < 8 || tr.times.size() != n) throw std::invalid_argument("rabi_period: trace too short");
    const std::size_t half = std::min(smoothing / 2, n / 8);
    std::vector<double> s(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t a = k >= half ? k - half : 0;
        const std::size_t b = std::min(n - 1, k + half);
        double acc = 0.0;
        for (std::size_t i = a; i <= b; ++i) acc += p[i];
        s[k] = acc / double(b - a + 1);
    }
    const auto [mn, mx] = std::minmax_element(s.begin(), s.end());
    const double level = 0.5 * (*mn + *mx);
    std::size_t k = 0;
    while (k < n && s[k] >= level) ++k;
    while (k < n && s[k] < level) ++k;
    const std::size_t rise = k;
    while (k < n && s[k] >= level) ++k;
    const std::size_t fall = k;
    if (rise >= n || fall <= rise + 2) throw std::runtime_error("rabi_period: no complete oscillation in trace");
    const auto peak = std::size_t(std::max_element(s.begin() + long(rise), s.begin() + long(fall)) - s.begin());
    const std::size_t w = std::max<std::size_t>(2, (fall - rise) / 4);
    const std::size_t a = peak >= w ? peak - w : 0;
    const std::size_t b = std::min(n - 1, peak + w);
    // Fit p ~ c0 + c1 u + c2 u^2 with u = t - t_peak.
    Eigen::MatrixXd A(Eigen::Index(b - a + 1), 3);
    Eigen::VectorXd rhs(Eigen::Index(b - a + 1));
    for (std::size_t i = a; i <= b; ++i) {
        const double u = tr.times[i] - tr.times[peak];
        A(Eigen::Index(i - a), 0) = 1.0;
        A(Eigen::Index(i - a), 1) = u;
        A(Eigen::Index(i - a), 2) = u * u;
        rhs(Eigen::Index(i - a)) = p[i];
    }
    const Eigen::Vector3d coef = A.colPivHouseholderQr().solve(rhs);
    if (!(coef(2) < 0.0)) throw std::runtime_error("rabi_period: peak fit is not concave");
    return tr.times[peak] - 0.5 * coef(1) / coef(2) - tr.times.front();
}

}  // namespace tpdc
