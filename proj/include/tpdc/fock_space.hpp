// fock_space.hpp: truncated qubit x mode-1 x mode-3 Hilbert space, ladder
// operators, and the full (non-RWA) system Hamiltonian.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <complex>
#include <cstddef>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "tpdc/units.hpp"

namespace tpdc {

using Complex = std::complex<double>;
using OperatorMatrix = Eigen::MatrixXcd;

struct SystemParams {
    double omega_q{0.0};
    double omega_1{0.0};
    double omega_3{0.0};
    double g_1{0.0};
    double g_3{0.0};
    int n1_max{6};
    int n3_max{2};

    std::size_t dimension() const {
        return 2u * static_cast<std::size_t>(n1_max + 1) * static_cast<std::size_t>(n3_max + 1);
    }

    void validate() const {
        if (!(omega_q >= 0.0 && omega_1 >= 0.0 && omega_3 >= 0.0))
            throw std::invalid_argument("SystemParams: frequencies must be >= 0");
        if (!(g_1 >= 0.0 && g_3 >= 0.0))
            throw std::invalid_argument("SystemParams: couplings must be >= 0");
        if (n1_max < 1 || n3_max < 1)
            throw std::invalid_argument("SystemParams: photon truncations must be >= 1");
    }
};

// |q m n>: qubit level (0 = g, 1 = e), photons in mode 1, photons in mode 3.
struct BareStateIndex {
    int q{0};
    int m{0};
    int n{0};
    std::size_t flat_index{0};

    friend bool operator==(const BareStateIndex&, const BareStateIndex&) = default;
};

// Basis order: qubit slowest, then mode-1 count, then mode-3 count.
//   flat = (q*(n1_max+1) + m)*(n3_max+1) + n
inline std::size_t flat_index(const SystemParams& p, int q, int m, int n) {
    if (q < 0 || q > 1 || m < 0 || m > p.n1_max || n < 0 || n > p.n3_max)
        throw std::out_of_range("flat_index: label outside truncated space");
    return (static_cast<std::size_t>(q) * static_cast<std::size_t>(p.n1_max + 1) +
            static_cast<std::size_t>(m)) * static_cast<std::size_t>(p.n3_max + 1) +
           static_cast<std::size_t>(n);
}

inline BareStateIndex bare_state(const SystemParams& p, std::size_t flat) {
    if (flat >= p.dimension()) throw std::out_of_range("bare_state: index outside space");
    const auto d3 = static_cast<std::size_t>(p.n3_max + 1);
    const auto d1 = static_cast<std::size_t>(p.n1_max + 1);
    BareStateIndex s;
    s.n = static_cast<int>(flat % d3);
    s.m = static_cast<int>((flat / d3) % d1);
    s.q = static_cast<int>(flat / (d3 * d1));
    s.flat_index = flat;
    return s;
}

inline BareStateIndex bare_state(const SystemParams& p, int q, int m, int n) {
    return BareStateIndex{q, m, n, flat_index(p, q, m, n)};
}

// "g01", "e30", ...
inline std::string to_string(const BareStateIndex& s) {
    return std::string(1, s.q == 0 ? 'g' : 'e') + std::to_string(s.m) + std::to_string(s.n);
}

inline std::vector<BareStateIndex> build_space(const SystemParams& p) {
    p.validate();
    std::vector<BareStateIndex> basis;
    basis.reserve(p.dimension());
    for (int q = 0; q <= 1; ++q)
        for (int m = 0; m <= p.n1_max; ++m)
            for (int n = 0; n <= p.n3_max; ++n)
                basis.push_back(BareStateIndex{q, m, n, basis.size()});
    return basis;
}

struct SystemOperators {
    OperatorMatrix a1;
    OperatorMatrix a3;
    OperatorMatrix sigma;
    OperatorMatrix X;  // a1^dag + a1
    OperatorMatrix Y;  // a3^dag + a3
    OperatorMatrix Z;  // sigma^dag + sigma
};

inline SystemOperators build_operators(const SystemParams& p) {
    const auto basis = build_space(p);
    const auto D = static_cast<Eigen::Index>(basis.size());
    SystemOperators ops;
    ops.a1 = OperatorMatrix::Zero(D, D);
    ops.a3 = OperatorMatrix::Zero(D, D);
    ops.sigma = OperatorMatrix::Zero(D, D);
    for (const auto& s : basis) {
        const auto col = static_cast<Eigen::Index>(s.flat_index);
        if (s.m > 0)
            ops.a1(static_cast<Eigen::Index>(flat_index(p, s.q, s.m - 1, s.n)), col) = std::sqrt(double(s.m));
        if (s.n > 0)
            ops.a3(static_cast<Eigen::Index>(flat_index(p, s.q, s.m, s.n - 1)), col) = std::sqrt(double(s.n));
        if (s.q == 1)
            ops.sigma(static_cast<Eigen::Index>(flat_index(p, 0, s.m, s.n)), col) = 1.0;
    }
    ops.X = ops.a1.adjoint() + ops.a1;
    ops.Y = ops.a3.adjoint() + ops.a3;
    ops.Z = ops.sigma.adjoint() + ops.sigma;
    return ops;
}

// H = wq s^dag s + w1 a1^dag a1 + w3 a3^dag a3 + g1 X Z + g3 Y Z  (counter-rotating terms kept)
inline OperatorMatrix build_hamiltonian(const SystemParams& p, const SystemOperators& ops) {
    OperatorMatrix H = p.omega_q * (ops.sigma.adjoint() * ops.sigma) +
                       p.omega_1 * (ops.a1.adjoint() * ops.a1) +
                       p.omega_3 * (ops.a3.adjoint() * ops.a3) +
                       p.g_1 * (ops.X * ops.Z) + p.g_3 * (ops.Y * ops.Z);
    // X, Z commute; the products are Hermitian up to rounding.
    return 0.5 * (H + H.adjoint());
}

inline OperatorMatrix build_hamiltonian(const SystemParams& p) {
    return build_hamiltonian(p, build_operators(p));
}

// Eigenvalue of exp[i pi (a1^dag a1 + a3^dag a3 + sigma^dag sigma)] on each basis state.
inline std::vector<int> parity_labels(const SystemParams& p) {
    std::vector<int> parity;
    for (const auto& s : build_space(p)) parity.push_back(((s.q + s.m + s.n) % 2 == 0) ? 1 : -1);
    return parity;
}

inline OperatorMatrix parity_operator(const SystemParams& p) {
    const auto labels = parity_labels(p);
    OperatorMatrix P = OperatorMatrix::Zero(static_cast<Eigen::Index>(labels.size()),
                                            static_cast<Eigen::Index>(labels.size()));
    for (std::size_t k = 0; k < labels.size(); ++k)
        P(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = double(labels[k]);
    return P;
}

inline double max_abs(const OperatorMatrix& A) {
    return A.size() == 0 ? 0.0 : A.cwiseAbs().maxCoeff();
}

// max|A - A^dag| / max|A|
inline double hermiticity_defect(const OperatorMatrix& A) {
    const double scale = max_abs(A);
    if (scale == 0.0) return 0.0;
    return max_abs(A - A.adjoint()) / scale;
}

// Everything derived from one parameter set.
struct SystemModel {
    SystemParams params;
    std::vector<BareStateIndex> basis;
    SystemOperators ops;
    OperatorMatrix hamiltonian;
    std::vector<int> parity;
};

inline SystemModel build_model(const SystemParams& p) {
    p.validate();
    SystemModel model;
    model.params = p;
    model.basis = build_space(p);
    model.ops = build_operators(p);
    model.hamiltonian = build_hamiltonian(p, model.ops);
    model.parity = parity_labels(p);
    return model;
}

// Headline configuration: 3 w1 = w3 = 2pi x 9 GHz, g1 = g3 = g.
inline SystemParams symmetric_system(double omega_q, double g, int n1_max = 6, int n3_max = 2) {
    SystemParams p;
    p.omega_q = omega_q;
    p.omega_1 = from_ghz(3.0);
    p.omega_3 = from_ghz(9.0);
    p.g_1 = g;
    p.g_3 = g;
    p.n1_max = n1_max;
    p.n3_max = n3_max;
    return p;
}

}  // namespace tpdc
