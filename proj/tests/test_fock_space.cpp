#include <gtest/gtest.h>

#include "tpdc/fock_space.hpp"

using namespace tpdc;

TEST(FockSpace, DefaultTruncationHas42States) {
    const SystemParams p = symmetric_system(from_ghz(10.72), from_ghz(0.3));
    EXPECT_EQ(p.dimension(), 42u);
    EXPECT_EQ(build_space(p).size(), 42u);
}

TEST(FockSpace, MinimalTruncationHas8States) {
    EXPECT_EQ(build_space(symmetric_system(1.0, 0.1, 1, 1)).size(), 8u);
}

TEST(FockSpace, FlatIndexRoundTrip) {
    const SystemParams p = symmetric_system(1.0, 0.1);
    const auto basis = build_space(p);
    for (std::size_t k = 0; k < basis.size(); ++k) {
        EXPECT_EQ(basis[k].flat_index, k);
        EXPECT_EQ(bare_state(p, k), basis[k]);
        EXPECT_EQ(flat_index(p, basis[k].q, basis[k].m, basis[k].n), k);
    }
    EXPECT_EQ(flat_index(p, 0, 0, 1), 1u);
    EXPECT_EQ(flat_index(p, 1, 0, 0), 21u);
    EXPECT_EQ(to_string(bare_state(p, 0, 3, 0)), "g30");
}

TEST(FockSpace, RejectsInvalidParams) {
    SystemParams p = symmetric_system(1.0, 0.1);
    p.n3_max = 0;
    EXPECT_THROW(build_space(p), std::invalid_argument);
    p = symmetric_system(1.0, -0.1);
    EXPECT_THROW(build_model(p), std::invalid_argument);
    EXPECT_THROW(flat_index(symmetric_system(1.0, 0.1), 0, 7, 0), std::out_of_range);
}

TEST(FockSpace, LadderMatrixElements) {
    const SystemParams p = symmetric_system(1.0, 0.1);
    const auto ops = build_operators(p);
    const auto i10 = Eigen::Index(flat_index(p, 0, 1, 0));
    const auto i20 = Eigen::Index(flat_index(p, 0, 2, 0));
    EXPECT_NEAR(std::abs(ops.a1(i10, i20) - std::sqrt(2.0)), 0.0, 1e-15);

    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(42);
    v(Eigen::Index(flat_index(p, 0, 0, 2))) = 1.0;
    const Eigen::VectorXcd w = ops.a3 * (ops.a3 * v);
    EXPECT_NEAR(std::abs(w(Eigen::Index(flat_index(p, 0, 0, 0))) - std::sqrt(2.0)), 0.0, 1e-15);
    EXPECT_NEAR(w.norm(), std::sqrt(2.0), 1e-15);

    EXPECT_EQ(ops.X.diagonal().cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(hermiticity_defect(ops.X), 0.0);
    EXPECT_EQ(hermiticity_defect(ops.Y), 0.0);
    EXPECT_EQ(hermiticity_defect(ops.Z), 0.0);
}

TEST(FockSpace, BareLimitIsDiagonal) {
    SystemParams p = symmetric_system(from_ghz(10.0), 0.0);
    const OperatorMatrix H = build_hamiltonian(p);
    OperatorMatrix off = H;
    off.diagonal().setZero();
    EXPECT_EQ(max_abs(off), 0.0);
    const auto g01 = Eigen::Index(flat_index(p, 0, 0, 1));
    EXPECT_NEAR((H(g01, g01) - H(0, 0)).real(), p.omega_3, 1e-12);
}

TEST(FockSpace, HamiltonianHermitianAndParityConserving) {
    for (double g : {0.05, 0.3, 1.0})
        for (double wq : {9.0, 10.72, 13.0}) {
            const SystemParams p = symmetric_system(from_ghz(wq), from_ghz(g));
            const OperatorMatrix H = build_hamiltonian(p);
            const OperatorMatrix P = parity_operator(p);
            const double scale = max_abs(H);
            EXPECT_LE(max_abs(H - H.adjoint()), 1e-12 * scale);
            EXPECT_LE(max_abs(H * P - P * H), 1e-12 * scale);
        }
}

TEST(FockSpace, CouplingTermsConnectOppositeBareParityOfEachFactor) {
    // g1 X Z links |q m n> with |q' m+-1 n>, q' != q.
    const SystemParams p = symmetric_system(0.0, 1.0, 2, 1);
    SystemParams only1 = p;
    only1.g_3 = 0.0;
    const OperatorMatrix H = build_hamiltonian(only1);
    const auto basis = build_space(p);
    for (const auto& a : basis)
        for (const auto& b : basis) {
            const Complex h = H(Eigen::Index(a.flat_index), Eigen::Index(b.flat_index));
            if (a.flat_index == b.flat_index || h == Complex(0.0)) continue;
            EXPECT_NE(a.q, b.q);
            EXPECT_EQ(std::abs(a.m - b.m), 1);
            EXPECT_EQ(a.n, b.n);
        }
}
