#include <gtest/gtest.h>

#include <random>

#include "tpdc/spectrum.hpp"

using namespace tpdc;

namespace {

OperatorMatrix random_unitary(Eigen::Index n, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> d;
    OperatorMatrix A(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) A(i, j) = Complex(d(rng), d(rng));
    Eigen::HouseholderQR<OperatorMatrix> qr(A);
    return qr.householderQ();
}

}  // namespace

TEST(Spectrum, BareSpectrumAtZeroCoupling) {
    const SystemParams p = symmetric_system(from_ghz(10.3), 0.0);
    const Eigensystem es = eigendecompose(build_model(p));
    std::vector<double> expected;
    for (const auto& s : build_space(p)) expected.push_back(s.q * p.omega_q + s.m * p.omega_1 + s.n * p.omega_3);
    std::sort(expected.begin(), expected.end());
    for (std::size_t k = 0; k < expected.size(); ++k) EXPECT_NEAR(es.energies(Eigen::Index(k)), expected[k], 1e-12);
    for (const auto& s : build_space(p)) EXPECT_DOUBLE_EQ(label_state(es, s).overlap, 1.0);
}

TEST(Spectrum, ResidualUnitarityAndParitySelection) {
    const SystemModel m = build_model(symmetric_system(from_ghz(10.72), from_ghz(0.3)));
    const Eigensystem es = eigendecompose(m);
    EXPECT_LE(eigen_residual(m.hamiltonian, es), 1e-10);
    EXPECT_LE(unitarity_defect(es), 1e-10);
    EXPECT_LE(es.x.diagonal().cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE(es.y.diagonal().cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE(es.z.diagonal().cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE(hermiticity_defect(es.x), 1e-12);
    // x couples opposite parities only
    for (Eigen::Index i = 0; i < 42; ++i)
        for (Eigen::Index j = 0; j < 42; ++j)
            if (es.parity[std::size_t(i)] == es.parity[std::size_t(j)]) EXPECT_LE(std::abs(es.x(i, j)), 1e-10);
}

TEST(Spectrum, SectorAndDenseSolversAgree) {
    const SystemModel m = build_model(symmetric_system(from_ghz(9.735), from_ghz(1.0)));
    const Eigensystem a = eigendecompose(m);
    const Eigensystem b = eigendecompose(m.hamiltonian);
    EXPECT_LE((a.energies - b.energies).cwiseAbs().maxCoeff(), 1e-10 * a.energies.cwiseAbs().maxCoeff());
}

TEST(Spectrum, EigenvaluesInvariantUnderUnitarySimilarity) {
    const OperatorMatrix H = build_hamiltonian(symmetric_system(from_ghz(10.72), from_ghz(0.3)));
    const OperatorMatrix U = random_unitary(H.rows(), 7);
    OperatorMatrix H2 = U * H * U.adjoint();
    H2 = 0.5 * (H2 + H2.adjoint());
    const Eigensystem a = eigendecompose(H), b = eigendecompose(H2);
    EXPECT_LE((a.energies - b.energies).cwiseAbs().maxCoeff(), 1e-10 * a.energies.cwiseAbs().maxCoeff());
}

TEST(Spectrum, RejectsNonHermitian) {
    OperatorMatrix H = OperatorMatrix::Identity(4, 4);
    H(0, 1) = 1.0;
    EXPECT_THROW(eigendecompose(H), std::invalid_argument);
}

TEST(Spectrum, LabelsAtOptimumAreHalfAndHalf) {
    const SystemParams base = symmetric_system(0.0, from_ghz(0.3));
    const auto opt = find_optimum(base, from_ghz(10.6), from_ghz(10.85));
    SystemParams p = base;
    p.omega_q = opt.omega_q_opt;
    const Eigensystem es = eigendecompose(build_model(p));
    const PairSample pair = pair_from_eigensystem(es, p, p.omega_q);
    const auto i01 = Eigen::Index(flat_index(p, 0, 0, 1)), i30 = Eigen::Index(flat_index(p, 0, 3, 0));
    for (std::size_t j : {pair.lower_index, pair.upper_index}) {
        const double w01 = std::norm(es.vectors(i01, Eigen::Index(j)));
        const double w30 = std::norm(es.vectors(i30, Eigen::Index(j)));
        EXPECT_NEAR(w01, 0.5, 0.05);
        EXPECT_NEAR(w30, 0.5, 0.05);
    }
    EXPECT_TRUE(label_state(es, flat_index(p, 0, 0, 1)).ambiguous);
}

TEST(Spectrum, FarDetunedLabelIsClean) {
    const SystemParams p = symmetric_system(from_ghz(13.0), from_ghz(0.3));
    const Eigensystem es = eigendecompose(build_model(p));
    const auto l = label_state(es, flat_index(p, 0, 0, 1));
    EXPECT_GT(l.overlap, 0.99);
    EXPECT_FALSE(l.ambiguous);
}

TEST(Spectrum, OptimumAtG03) {
    const auto r = find_optimum(symmetric_system(0.0, from_ghz(0.3)), from_ghz(10.6), from_ghz(10.85));
    EXPECT_NEAR(to_ghz(r.omega_q_opt), 10.72, 10.72e-3);
    EXPECT_NEAR(to_khz(r.g_eff), 222.5, 2.5);
    EXPECT_NEAR(to_ghz(r.omega_in_opt), 8.9456, 1e-3);
    EXPECT_GT(r.g_eff, 0.0);
    EXPECT_GE(r.eps_upper, r.eps_lower);
    EXPECT_NEAR(r.omega_in_opt, 0.5 * (r.eps_lower + r.eps_upper), 1e-12);
}

TEST(Spectrum, OptimumInvariantUnderHalvedTolerance) {
    const SystemParams base = symmetric_system(0.0, from_ghz(0.3));
    const auto a = find_optimum(base, from_ghz(10.6), from_ghz(10.85), from_khz(1.0));
    const auto b = find_optimum(base, from_ghz(10.6), from_ghz(10.85), from_khz(0.5));
    EXPECT_LE(std::abs(a.omega_q_opt - b.omega_q_opt), from_khz(1.0));
}

TEST(Spectrum, WindowWithoutMinimumIsRejected) {
    EXPECT_THROW(find_optimum(symmetric_system(0.0, from_ghz(0.3)), from_ghz(11.0), from_ghz(11.5)), std::domain_error);
    EXPECT_THROW(find_optimum_scanned(symmetric_system(0.0, from_ghz(0.3)), from_ghz(11.0), from_ghz(11.5)),
                 std::domain_error);
}

TEST(Spectrum, WeakCouplingPerturbativeEnergies) {
    const double g = from_ghz(0.01);
    const SystemParams base = symmetric_system(0.0, g);
    const auto opt = find_optimum_scanned(base, from_ghz(10.5), from_ghz(11.1));
    const double w1 = base.omega_1, w3 = base.omega_3;
    const double limit = std::sqrt((3.0 * w3 * w3 - w1 * w1) / 2.0);
    EXPECT_NEAR(opt.omega_q_opt / limit, 1.0, 1e-3);
    EXPECT_NEAR(opt.omega_in_opt / w3, 1.0, 1e-4);

    // second-order energies, measured from the ground level, at the optimum
    // (the pair is degenerate to within g_eff ~ Hz there) and away from it
    for (double wq : {opt.omega_q_opt, from_ghz(12.0)}) {
        SystemParams p = base;
        p.omega_q = wq;
        const Eigensystem es = eigendecompose(build_model(p));
        const double e01 = w3 - g * g / (wq - w3) - g * g / (wq + w3);
        const double e30 = 3.0 * (w1 - g * g / (wq - w1) - g * g / (wq + w1));
        const PairSample pair = pair_from_eigensystem(es, p, wq);
        const double ground = es.energies(0);
        const double lo = std::min(e01, e30), hi = std::max(e01, e30);
        EXPECT_NEAR(pair.lower - ground, lo, from_khz(10.0));
        EXPECT_NEAR(pair.upper - ground, hi, from_khz(10.0));
    }
}

TEST(Spectrum, BranchScanFollowsAnticrossing) {
    std::vector<double> grid;
    for (int k = 0; k <= 20; ++k) grid.push_back(from_ghz(10.70 + 0.002 * k));
    const auto pts = scan_branches(symmetric_system(0.0, from_ghz(0.3)), grid);
    ASSERT_EQ(pts.size(), grid.size());
    for (const auto& p : pts) EXPECT_GE(p.eps_upper, p.eps_lower);
    // branch a starts |g01>-like and swaps character across the crossing
    EXPECT_GT(pts.front().overlap_g01_a, 0.6);
    EXPECT_LT(pts.back().overlap_g01_a, 0.4);
}

TEST(Spectrum, RabiConservesProbabilityAndStartsInInitialState) {
    const SystemParams p = symmetric_system(from_ghz(10.72), from_ghz(0.3));
    const Eigensystem es = eigendecompose(build_model(p));
    std::vector<double> t;
    for (int k = 0; k <= 200; ++k) t.push_back(5.0 * k);
    const auto tr = rabi_evolve(es, flat_index(p, 0, 0, 1), flat_index(p, 0, 3, 0), t);
    EXPECT_NEAR(tr.p_initial[0], 1.0, 1e-12);
    for (std::size_t k = 0; k < t.size(); ++k)
        EXPECT_NEAR(tr.p_initial[k] + tr.p_partner[k] + tr.p_other[k], 1.0, 1e-10);
}

TEST(Spectrum, RabiPeriodAtG03Optimum) {
    const SystemParams base = symmetric_system(0.0, from_ghz(0.3));
    const auto opt = find_optimum(base, from_ghz(10.6), from_ghz(10.85));
    SystemParams p = base;
    p.omega_q = opt.omega_q_opt;
    const Eigensystem es = eigendecompose(build_model(p));
    std::vector<double> t;
    for (int k = 0; k <= 5000; ++k) t.push_back(double(k));
    const auto tr = rabi_evolve(es, flat_index(p, 0, 0, 1), flat_index(p, 0, 3, 0), t);
    const double T = rabi_period(tr);
    EXPECT_NEAR(T, 2247.0, 22.47);
    EXPECT_NEAR(opt.g_eff * T / pi, 1.0, 0.02);
}

TEST(Spectrum, RabiPeriodOfCleanCosine) {
    RabiTrace tr;
    for (int k = 0; k <= 400; ++k) {
        const double t = 0.5 * k;
        tr.times.push_back(t);
        tr.p_initial.push_back(std::pow(std::cos(pi * t / 73.0), 2));
    }
    EXPECT_NEAR(rabi_period(tr), 73.0, 1e-2);
}

TEST(Spectrum, GoldenSectionFindsParabolaMinimum) {
    const auto r = golden_section_minimize([](double x) { return (x - 0.3) * (x - 0.3); }, -1.0, 2.0, 1e-9);
    EXPECT_NEAR(r.x, 0.3, 1e-8);
    EXPECT_THROW(golden_section_minimize([](double x) { return x; }, 1.0, 0.0, 1e-3), std::invalid_argument);
}
