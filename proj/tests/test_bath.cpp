#include <gtest/gtest.h>

#include <random>

#include "tpdc/bath.hpp"
#include "tpdc/oracles.hpp"

using namespace tpdc;

TEST(Bath, ChannelOperators) {
    EXPECT_EQ(coupled_operator(ChannelId::ext1), CoupledOperator::X);
    EXPECT_EQ(coupled_operator(ChannelId::int1), CoupledOperator::X);
    EXPECT_EQ(coupled_operator(ChannelId::ext3), CoupledOperator::Y);
    EXPECT_EQ(coupled_operator(ChannelId::int3), CoupledOperator::Y);
    EXPECT_EQ(coupled_operator(ChannelId::qubit), CoupledOperator::Z);
    for (ChannelId id : all_channels) EXPECT_EQ(channel_from_string(to_string(id)), id);
    EXPECT_THROW(channel_from_string("2e"), std::invalid_argument);
}

TEST(Bath, BoxCoupling) {
    const BathChannel c{ChannelId::ext1, from_khz(255.0)};
    const double xi = coupling_xi(c, from_ghz(3.0));
    EXPECT_DOUBLE_EQ(two_pi * xi * xi, c.rate);
    EXPECT_EQ(coupling_xi(c, -1.0), 0.0);
    EXPECT_EQ(coupling_xi(c, c.cutoff + 1.0), 0.0);
}

TEST(Bath, RejectsNegativeRate) {
    BathChannel c{ChannelId::qubit, -1.0};
    EXPECT_THROW(c.validate(), std::invalid_argument);
    EXPECT_THROW(symmetric_bath(-1.0), std::invalid_argument);
}

TEST(Bath, SelfEnergyExamples) {
    const BathChannel c{ChannelId::ext3, from_khz(255.0), from_ghz(20.0)};
    EXPECT_EQ(self_energy(c, 0.5 * c.cutoff).imag(), 0.0);
    EXPECT_EQ(self_energy(c, from_ghz(-1.0)).real(), 0.0);
    const Complex h = self_energy(c, from_ghz(9.0));
    EXPECT_NEAR(h.real(), c.rate / 2.0, 1e-18);
    EXPECT_NEAR(h.imag(), -(c.rate / two_pi) * std::log(11.0 / 9.0), 1e-18);
}

TEST(Bath, SelfEnergyRegularizedAtSingularPoints) {
    const BathChannel c{ChannelId::ext1, 0.01};
    EXPECT_EQ(self_energy(c, 0.0), Complex(0.0, 0.0));
    EXPECT_EQ(self_energy(c, c.cutoff).imag(), 0.0);
    EXPECT_EQ(self_energy(c, from_khz(0.5)).imag(), 0.0);
    EXPECT_NE(self_energy(c, from_khz(2.0)).imag(), 0.0);
}

TEST(Bath, RealPartStructure) {
    const BathChannel c{ChannelId::int1, 0.02};
    for (double e = -15.0; e <= 25.0; e += 0.37) {
        const Complex h = self_energy(c, from_ghz(e));
        EXPECT_GE(h.real(), 0.0);
        if (e > 0.0 && from_ghz(e) < c.cutoff) EXPECT_DOUBLE_EQ(h.real(), c.rate / 2.0);
        else EXPECT_EQ(h.real(), 0.0);
    }
}

TEST(Bath, QuadratureAgreesOnBothSigns) {
    // within 1% on [-15, 15] GHz outside 50 MHz of 0 and k_x
    const BathChannel c{ChannelId::ext1, from_khz(255.0)};
    for (double e = -15.0; e <= 15.0; e += 0.25) {
        if (std::abs(e) < 0.05) continue;
        const Complex a = self_energy(c, from_ghz(e)), q = self_energy_quadrature(c, from_ghz(e));
        EXPECT_LE(std::abs(a - q), 0.01 * std::abs(a)) << "eps = " << e << " GHz";
    }
}

TEST(Bath, TableMatchesQuadratureForRandomPairs) {
    const Eigensystem es = eigendecompose(build_model(symmetric_system(from_ghz(10.72), from_ghz(0.3))));
    BathSet bath = symmetric_bath(from_khz(255.0), from_khz(90.0), from_mhz(5.0));
    const SelfEnergyTable t = build_self_energy_table(es, bath);
    std::mt19937 rng(2024);
    std::uniform_int_distribution<int> state(0, 41), chan(0, 4);
    int n = 0;
    while (n < 20) {
        const int j = state(rng), i = state(rng);
        const ChannelId id = all_channels[std::size_t(chan(rng))];
        const double eps = es.energies(j) - es.energies(i);
        if (std::abs(eps) < from_mhz(50.0) || std::abs(eps) > from_ghz(15.0)) continue;
        const Complex q = self_energy_quadrature(bath[id], eps);
        const Complex h = t[id](j, i);
        EXPECT_LE(std::abs(h - q), 0.01 * std::abs(h));
        ++n;
    }
}

TEST(Bath, ZeroRatesGiveZeroTable) {
    const Eigensystem es = eigendecompose(build_model(symmetric_system(from_ghz(10.72), from_ghz(0.3))));
    const SelfEnergyTable t = build_self_energy_table(es, BathSet{});
    for (ChannelId id : all_channels) EXPECT_EQ(max_abs(t[id]), 0.0);
}

TEST(Bath, AbsorbedModeDropsLambShift) {
    Eigen::VectorXd e(3);
    e << 0.0, from_ghz(3.0), from_ghz(9.0);
    const BathSet b = symmetric_bath(0.01);
    const SelfEnergyTable full = build_self_energy_table(e, b, LambShift::explicit_shift);
    const SelfEnergyTable abs = build_self_energy_table(e, b, LambShift::absorbed);
    EXPECT_GT(full[ChannelId::ext1].imag().cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(abs[ChannelId::ext1].imag().cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ((full[ChannelId::ext1].real() - abs[ChannelId::ext1].real()).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(lamb_shift_from_string("explicit"), LambShift::explicit_shift);
    EXPECT_THROW(lamb_shift_from_string("none"), std::invalid_argument);
}
