#pragma once

// Site-basis operators built from their closed-form matrix elements.
// The infinite lattice is represented by the window m = -M..M with hard
// (open) truncation: every element whose row or column leaves the window is
// dropped, nothing wraps around.

#include <cmath>
#include <numbers>
#include <string>

#include "latticeccr/types.hpp"

namespace latticeccr {

namespace detail {

inline double alternating_sign(long d) noexcept { return (d % 2 == 0) ? 1.0 : -1.0; }

}  // namespace detail

/// x = a * sum_m |m> m <m|
inline OperatorMatrix build_position(const LatticeSpec& spec) {
    ComplexMatrix x = ComplexMatrix::Zero(spec.size(), spec.size());
    for (Eigen::Index i = 0; i < spec.size(); ++i) x(i, i) = spec.position(spec.site(i));
    return OperatorMatrix(std::move(x));
}

/// Phase operator theta = a k: <m|theta|n> = (-1)^(m-n) / (i (m-n)) for m != n.
inline OperatorMatrix build_phase_operator(const LatticeSpec& spec) {
    const auto n = spec.size();
    ComplexMatrix theta = ComplexMatrix::Zero(n, n);
    for (Eigen::Index row = 0; row < n; ++row) {
        for (Eigen::Index col = 0; col < n; ++col) {
            if (row == col) continue;
            const long d = static_cast<long>(row - col);
            // 1/(i d) = -i/d
            theta(row, col) = Complex(0.0, -detail::alternating_sign(d) / static_cast<double>(d));
        }
    }
    return OperatorMatrix(std::move(theta));
}

/// Quasi-momentum operator k = theta / a.
inline OperatorMatrix build_momentum(const LatticeSpec& spec) {
    return Complex(1.0 / spec.spacing()) * build_phase_operator(spec);
}

/// a^2 <m|k^2|n> = pi^2/3 delta_mn + 2 (-1)^(m-n) / (m-n)^2 (1 - delta_mn).
/// Note this is the closed form, not the square of the truncated k.
inline OperatorMatrix build_k_squared(const LatticeSpec& spec) {
    const auto n = spec.size();
    const double inv_a2 = 1.0 / (spec.spacing() * spec.spacing());
    ComplexMatrix k2 = ComplexMatrix::Zero(n, n);
    for (Eigen::Index row = 0; row < n; ++row) {
        for (Eigen::Index col = 0; col < n; ++col) {
            if (row == col) {
                k2(row, col) = std::numbers::pi * std::numbers::pi / 3.0 * inv_a2;
            } else {
                const double d = static_cast<double>(row - col);
                k2(row, col) = 2.0 * detail::alternating_sign(static_cast<long>(row - col)) / (d * d) * inv_a2;
            }
        }
    }
    return OperatorMatrix(std::move(k2));
}

/// T_n = sum_m |m+n><m| restricted to the window.
inline OperatorMatrix build_translation(const LatticeSpec& spec, long shift) {
    if (std::labs(shift) > 2L * spec.half_width()) {
        throw RangeError("translation by " + std::to_string(shift) +
                         " leaves an empty operator on a window of half width " +
                         std::to_string(spec.half_width()));
    }
    const auto n = spec.size();
    ComplexMatrix t = ComplexMatrix::Zero(n, n);
    for (Eigen::Index col = 0; col < n; ++col) {
        const Eigen::Index row = col + static_cast<Eigen::Index>(shift);
        if (row >= 0 && row < n) t(row, col) = 1.0;
    }
    return OperatorMatrix(std::move(t));
}

/// Site reflection |m> -> |-m>.
inline OperatorMatrix build_reflection(const LatticeSpec& spec) {
    const auto n = spec.size();
    ComplexMatrix r = ComplexMatrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) r(n - 1 - i, i) = 1.0;
    return OperatorMatrix(std::move(r));
}

/// Bloch state sqrt(a/2pi) e^{i a k m} truncated to the window. Improper:
/// not normalized, its norm grows with the window.
inline StateVector build_bloch_state(const LatticeSpec& spec, double k) {
    const double a = spec.spacing();
    const double edge = std::numbers::pi / a;
    if (!(k > -edge && k <= edge)) {
        throw RangeError("quasi-momentum " + std::to_string(k) +
                         " outside the first Brillouin zone (-pi/a, pi/a]");
    }
    const double prefactor = std::sqrt(a / (2.0 * std::numbers::pi));
    ComplexVector psi(spec.size());
    for (Eigen::Index i = 0; i < spec.size(); ++i) {
        const long m = spec.site(i);
        if (k == edge) {
            // exact alternating signs at the zone edge
            psi(i) = prefactor * detail::alternating_sign(m);
        } else {
            psi(i) = prefactor * std::exp(kI * (a * k * static_cast<double>(m)));
        }
    }
    return StateVector(spec.half_width(), std::move(psi));
}

inline OperatorMatrix build_kinetic(const LatticeSpec& spec, const HoppingSpec& hop) {
    if (hop.kind == HoppingKind::Quadratic) {
        return Complex(0.5) * build_k_squared(spec);
    }
    const HoppingAmplitudes amps = hopping_amplitudes(hop, spec);
    const auto n = spec.size();
    ComplexMatrix h = ComplexMatrix::Zero(n, n);
    h.diagonal().setConstant(-amps.t0);
    for (int r = 1; r <= amps.range(); ++r) {
        const double t = amps.tn[static_cast<std::size_t>(r - 1)];
        for (Eigen::Index col = 0; col + r < n; ++col) {
            h(col + r, col) -= t;
            h(col, col + r) -= t;
        }
    }
    return OperatorMatrix(std::move(h));
}

inline OperatorMatrix build_potential(const LatticeSpec& spec, const PotentialSpec& pot) {
    const RealVector v = potential_values(pot, spec);
    ComplexMatrix p = ComplexMatrix::Zero(spec.size(), spec.size());
    p.diagonal() = v.cast<Complex>();
    return OperatorMatrix(std::move(p));
}

inline OperatorMatrix build_hamiltonian(const LatticeSpec& spec, const HoppingSpec& hop,
                                        const PotentialSpec& pot) {
    OperatorMatrix h = build_kinetic(spec, hop) + build_potential(spec, pot);
    if (!h.is_hermitian()) {
        throw ToleranceError("Hamiltonian violates Hermiticity: error " +
                             std::to_string(h.hermiticity_error()));
    }
    return h;
}

/// AB - BA
inline OperatorMatrix commutator(const OperatorMatrix& lhs, const OperatorMatrix& rhs) {
    if (lhs.dimension() != rhs.dimension()) {
        throw DimensionError("commutator: dimensions " + std::to_string(lhs.dimension()) + " and " +
                             std::to_string(rhs.dimension()) + " differ");
    }
    return OperatorMatrix(lhs.entries() * rhs.entries() - rhs.entries() * lhs.entries(),
                          std::max(lhs.hermiticity_tol(), rhs.hermiticity_tol()));
}

}  // namespace latticeccr
