// bath.hpp: box-spectrum waveguide channels and their self-energies.
#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tpdc/fock_space.hpp"
#include "tpdc/spectrum.hpp"
#include "tpdc/units.hpp"

namespace tpdc {

enum class ChannelId { ext1, int1, ext3, int3, qubit };
enum class CoupledOperator { X, Y, Z };

inline constexpr std::array<ChannelId, 5> all_channels{ChannelId::ext1, ChannelId::int1, ChannelId::ext3,
                                                       ChannelId::int3, ChannelId::qubit};

inline std::string to_string(ChannelId id) {
    switch (id) {
        case ChannelId::ext1: return "1e";
        case ChannelId::int1: return "1i";
        case ChannelId::ext3: return "3e";
        case ChannelId::int3: return "3i";
        case ChannelId::qubit: return "q";
    }
    return "?";
}

inline ChannelId channel_from_string(const std::string& s) {
    for (ChannelId id : all_channels)
        if (to_string(id) == s) return id;
    throw std::invalid_argument("unknown bath channel '" + s + "'");
}

inline CoupledOperator coupled_operator(ChannelId id) {
    switch (id) {
        case ChannelId::ext1:
        case ChannelId::int1: return CoupledOperator::X;
        case ChannelId::ext3:
        case ChannelId::int3: return CoupledOperator::Y;
        case ChannelId::qubit: return CoupledOperator::Z;
    }
    return CoupledOperator::Z;
}

inline constexpr double default_cutoff = from_ghz(20.0);
inline constexpr double default_eps_floor = from_khz(1.0);

struct BathChannel {
    ChannelId id{ChannelId::ext1};
    double rate{0.0};                // kappa or gamma, rad/ns
    double cutoff{default_cutoff};  // k_x, rad/ns

    CoupledOperator op() const { return coupled_operator(id); }
    void validate() const {
        if (!(rate >= 0.0) || !std::isfinite(rate))
            throw std::invalid_argument("bath channel " + to_string(id) + ": rate must be >= 0");
        if (!(cutoff > 0.0) || !std::isfinite(cutoff))
            throw std::invalid_argument("bath channel " + to_string(id) + ": cutoff must be > 0");
    }
};

// Five channels indexed by ChannelId.
struct BathSet {
    std::array<BathChannel, 5> channels{};

    BathSet() {
        for (std::size_t k = 0; k < 5; ++k) channels[k].id = all_channels[k];
    }
    BathChannel& operator[](ChannelId id) { return channels[std::size_t(id)]; }
    const BathChannel& operator[](ChannelId id) const { return channels[std::size_t(id)]; }
    double rate(ChannelId id) const { return (*this)[id].rate; }
    void set_cutoff(double kx) {
        for (auto& c : channels) c.cutoff = kx;
    }
    void validate() const {
        for (const auto& c : channels) c.validate();
    }
};

// kappa_1e = kappa_3e = kappa_e, kappa_1i = kappa_3i = kappa_i.
inline BathSet symmetric_bath(double kappa_e, double kappa_i = 0.0, double gamma = 0.0,
                              double cutoff = default_cutoff) {
    BathSet b;
    b[ChannelId::ext1].rate = kappa_e;
    b[ChannelId::ext3].rate = kappa_e;
    b[ChannelId::int1].rate = kappa_i;
    b[ChannelId::int3].rate = kappa_i;
    b[ChannelId::qubit].rate = gamma;
    b.set_cutoff(cutoff);
    b.validate();
    return b;
}

// xi(k) = theta(k) theta(k_x - k) sqrt(rate / 2pi)
inline double coupling_xi(const BathChannel& c, double k) {
    if (!(k > 0.0) || !(k < c.cutoff)) return 0.0;
    return std::sqrt(c.rate / two_pi);
}

// h(eps) = (rate/2) theta(eps) theta(k_x - eps) - i (rate/2pi) log(|k_x - eps| / |eps|).
// The log term is zeroed within eps_floor of its two singular points.
inline Complex self_energy(const BathChannel& c, double eps, double eps_floor = default_eps_floor) {
    const double re = (eps > 0.0 && eps < c.cutoff) ? 0.5 * c.rate : 0.0;
    double im = 0.0;
    if (std::abs(eps) >= eps_floor && std::abs(c.cutoff - eps) >= eps_floor)
        im = -(c.rate / two_pi) * std::log(std::abs(c.cutoff - eps) / std::abs(eps));
    return {re, im};
}

enum class LambShift { absorbed, explicit_shift };

inline std::string to_string(LambShift m) { return m == LambShift::absorbed ? "absorbed" : "explicit"; }

inline LambShift lamb_shift_from_string(const std::string& s) {
    if (s == "absorbed") return LambShift::absorbed;
    if (s == "explicit") return LambShift::explicit_shift;
    throw std::invalid_argument("lamb_shift must be 'absorbed' or 'explicit', got '" + s + "'");
}

// h[c](a, b) = h^(c)(eps_a - eps_b); the transition j -> i reads h[c](j, i).
struct SelfEnergyTable {
    std::array<OperatorMatrix, 5> h;

    const OperatorMatrix& operator[](ChannelId id) const { return h[std::size_t(id)]; }
    std::size_t size() const { return std::size_t(h[0].rows()); }
};

inline SelfEnergyTable build_self_energy_table(const Eigen::VectorXd& energies, const BathSet& bath,
                                               LambShift mode = LambShift::explicit_shift,
                                               double eps_floor = default_eps_floor) {
    bath.validate();
    const auto N = energies.size();
    SelfEnergyTable t;
    for (ChannelId id : all_channels) {
        OperatorMatrix m = OperatorMatrix::Zero(N, N);
        const BathChannel& c = bath[id];
        if (c.rate > 0.0)
            for (Eigen::Index a = 0; a < N; ++a)
                for (Eigen::Index b = 0; b < N; ++b) {
                    Complex v = self_energy(c, energies(a) - energies(b), eps_floor);
                    if (mode == LambShift::absorbed) v = Complex(v.real(), 0.0);
                    m(a, b) = v;
                }
        t.h[std::size_t(id)] = std::move(m);
    }
    return t;
}

inline SelfEnergyTable build_self_energy_table(const Eigensystem& es, const BathSet& bath,
                                               LambShift mode = LambShift::explicit_shift,
                                               double eps_floor = default_eps_floor) {
    return build_self_energy_table(es.energies, bath, mode, eps_floor);
}

}  // namespace tpdc
