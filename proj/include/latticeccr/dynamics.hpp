#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "latticeccr/ccr.hpp"
#include "latticeccr/operators.hpp"
#include "latticeccr/spectral.hpp"

namespace latticeccr {

/// psi_n(0) ~ exp(-b (n - n0)^2) e^{i k0 a n}
struct GaussianPacketSpec {
    long n0 = 0;
    double packet_b = 0.2;
    double k0 = 0.0;

    bool operator==(const GaussianPacketSpec&) const = default;
};

/// Leakage is measured as the probability weight max(|psi_{-M}|^2, |psi_M|^2)
/// on the edge sites.
struct LeakagePolicy {
    double warn = 1e-10;
    double fail = 1e-6;
};

inline double leakage_weight(const StateVector& psi) {
    const double edge = psi.boundary_amplitude();
    return edge * edge;
}

inline StateVector make_gaussian(const LatticeSpec& spec, const GaussianPacketSpec& packet) {
    if (!(packet.packet_b > 0.0) || !std::isfinite(packet.packet_b)) {
        throw PreconditionError("make_gaussian: packet_b must be positive");
    }
    if (!spec.contains(packet.n0)) {
        throw RangeError("make_gaussian: center " + std::to_string(packet.n0) + " outside the window");
    }
    ComplexVector psi(spec.size());
    for (Eigen::Index i = 0; i < spec.size(); ++i) {
        const double m = spec.site(i);
        const double d = m - static_cast<double>(packet.n0);
        psi(i) = std::exp(-packet.packet_b * d * d) * std::exp(kI * (packet.k0 * spec.spacing() * m));
    }
    psi /= psi.norm();
    return StateVector(spec.half_width(), std::move(psi));
}

/// Exact spectral propagation psi(t) = sum_j e^{-i E_j t} v_j <v_j|psi(0)>.
/// Keeps a reference to `spectrum`, which must outlive the propagator.
class SpectralPropagator {
public:
    SpectralPropagator(const SpectrumResult& spectrum, const StateVector& psi0)
        : spectrum_(spectrum), half_width_(psi0.half_width()) {
        if (spectrum.eigenvectors.rows() != psi0.size()) {
            throw DimensionError("propagate: state dimension " + std::to_string(psi0.size()) +
                                 " does not match spectrum dimension " +
                                 std::to_string(spectrum.eigenvectors.rows()));
        }
        coefficients_ = spectrum.eigenvectors.adjoint() * psi0.amplitudes();
    }

    StateVector at(double t) const {
        ComplexVector phased(coefficients_.size());
        for (Eigen::Index j = 0; j < coefficients_.size(); ++j) {
            phased(j) = std::exp(-kI * (spectrum_.eigenvalues(j) * t)) * coefficients_(j);
        }
        return StateVector(half_width_, spectrum_.eigenvectors * phased);
    }

private:
    const SpectrumResult& spectrum_;
    int half_width_;
    ComplexVector coefficients_;
};

inline StateVector propagate(const StateVector& psi0, const SpectrumResult& spectrum, double t) {
    return SpectralPropagator(spectrum, psi0).at(t);
}

inline double mean_position(const StateVector& psi, const LatticeSpec& spec) {
    return position_expectation(psi.amplitudes(), spec) / psi.amplitudes().squaredNorm();
}

/// <T_n> = sum_m conj(psi_{m+n}) psi_m
inline Complex translation_expectation(const StateVector& psi, long shift) {
    const ComplexVector& v = psi.amplitudes();
    Complex sum{0.0};
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const Eigen::Index j = i + static_cast<Eigen::Index>(shift);
        if (j >= 0 && j < v.size()) sum += std::conj(v(j)) * v(i);
    }
    return sum;
}

/// Heisenberg-picture position in the linear potential H = kinetic - F x,
///   x(t) = x - sum_{n>0} [t_n T_n (e^{-i a n F t} - 1) / F + H.c.],
/// which follows from [x, T_n] = a n T_n and [T_n, H] = a n F T_n. All
/// expectation values are taken in the initial state; the result is periodic
/// with the Bloch period 2 pi / (a F).
class LinearPositionOracle {
public:
    LinearPositionOracle(const StateVector& psi0, const LatticeSpec& spec, const HoppingSpec& hop, double force)
        : spacing_(spec.spacing()), force_(force) {
        if (force == 0.0) {
            throw PreconditionError("exact_position_linear: F = 0 divides by zero; use free evolution");
        }
        if (psi0.half_width() != spec.half_width()) throw DimensionError("state and lattice windows differ");
        const HoppingAmplitudes amps = hopping_amplitudes(hop, spec);
        const double norm2 = psi0.amplitudes().squaredNorm();
        x0_ = mean_position(psi0, spec);
        weighted_.reserve(amps.tn.size());
        for (int n = 1; n <= amps.range(); ++n) {
            weighted_.push_back(amps.tn[static_cast<std::size_t>(n - 1)] * translation_expectation(psi0, n) / norm2);
        }
    }

    double operator()(double t) const {
        double x = x0_;
        for (std::size_t i = 0; i < weighted_.size(); ++i) {
            const double n = static_cast<double>(i + 1);
            const Complex phase = std::exp(-kI * (spacing_ * n * force_ * t)) - 1.0;
            x -= 2.0 * (weighted_[i] * phase).real() / force_;
        }
        return x;
    }

    double bloch_period() const { return 2.0 * std::numbers::pi / std::abs(spacing_ * force_); }

private:
    double spacing_;
    double force_;
    double x0_ = 0.0;
    std::vector<Complex> weighted_;  // t_n <T_n>
};

inline double exact_position_linear(const StateVector& psi0, const LatticeSpec& spec, const HoppingSpec& hop,
                                    double force, double t) {
    return LinearPositionOracle(psi0, spec, hop, force)(t);
}

inline double mean_momentum(const StateVector& psi, const LatticeSpec& spec) {
    return psi.expectation(build_momentum(spec)).real() / psi.amplitudes().squaredNorm();
}

/// CCR prediction x(t) = x + k t + F t^2 / 2 (free acceleration).
inline double ccr_position_linear(const StateVector& psi0, const LatticeSpec& spec, double force, double t) {
    return mean_position(psi0, spec) + mean_momentum(psi0, spec) * t + 0.5 * force * t * t;
}

/// CCR prediction for H = k^2/2 + c x^2/2: x cos(sqrt(c) t) + k sin(sqrt(c) t) / sqrt(c).
inline double ccr_position_harmonic(const StateVector& psi0, const LatticeSpec& spec, double c, double t) {
    if (!(c > 0.0)) throw PreconditionError("ccr_position_harmonic: c must be positive");
    const double w = std::sqrt(c);
    return mean_position(psi0, spec) * std::cos(w * t) + mean_momentum(psi0, spec) * std::sin(w * t) / w;
}

/// CCR solution for the 2pi-periodic kinetic term (1 - cos a k)/a^2 in a
/// linear potential: k(t) = k + F t, velocity sin(a k)/a, so
///   x(t) = x + <cos(a k) - cos(a k + a F t)> / (a^2 F)
/// with cos(a k) = (T_1 + T_-1)/2 and sin(a k) = (T_-1 - T_1)/(2i).
inline double ccr_position_periodic_kinetic(const StateVector& psi0, const LatticeSpec& spec, double force,
                                            double t) {
    if (force == 0.0) throw PreconditionError("ccr_position_periodic_kinetic: F must be nonzero");
    const double a = spec.spacing();
    const double norm2 = psi0.amplitudes().squaredNorm();
    const Complex forward = psi0.expectation(build_translation(spec, 1)) / norm2;
    const Complex backward = psi0.expectation(build_translation(spec, -1)) / norm2;
    const double cos_ak = (0.5 * (forward + backward)).real();
    const double sin_ak = ((backward - forward) / (2.0 * kI)).real();
    const double phi = a * force * t;
    const double cos_shifted = cos_ak * std::cos(phi) - sin_ak * std::sin(phi);
    return mean_position(psi0, spec) + (cos_ak - cos_shifted) / (a * a * force);
}

enum class CcrModel { None, LinearCCR, HarmonicCCR, PeriodicKineticCCR };

struct HamiltonianInputs {
    LatticeSpec spec;
    HoppingSpec hop;
    PotentialSpec pot;
};

struct TimeSeries {
    std::vector<double> times;
    std::vector<double> x_mean;
    std::vector<double> k_mean;
    std::vector<double> s_abs;
    std::vector<double> norm;
    std::vector<double> energy;
    std::vector<double> x_ccr;                                // NaN when no model is selected
    std::optional<std::vector<double>> x_exact_oracle;        // linear potentials only
    double max_leakage = 0.0;
    std::vector<std::string> warnings;
};

/// Samples <x>, <k>, |S_psi|, norm, <H> and the chosen CCR model along
/// `t_grid` (ascending, starting at 0).
inline TimeSeries run_timeseries(const HamiltonianInputs& inputs, const SpectrumResult& spectrum,
                                 const StateVector& psi0, const std::vector<double>& t_grid, CcrModel model,
                                 const LeakagePolicy& policy = {}) {
    const LatticeSpec& spec = inputs.spec;
    if (t_grid.empty() || t_grid.front() != 0.0) {
        throw PreconditionError("run_timeseries: time grid must start at 0");
    }
    for (std::size_t i = 1; i < t_grid.size(); ++i) {
        if (!(t_grid[i] > t_grid[i - 1])) throw PreconditionError("run_timeseries: time grid must ascend");
    }
    const bool linear = inputs.pot.kind == PotentialKind::Linear;
    if ((model == CcrModel::LinearCCR || model == CcrModel::PeriodicKineticCCR) && !linear) {
        throw PreconditionError("run_timeseries: linear CCR models need a linear potential");
    }
    if (model == CcrModel::HarmonicCCR && inputs.pot.kind != PotentialKind::Harmonic) {
        throw PreconditionError("run_timeseries: harmonic CCR model needs a harmonic potential");
    }

    const OperatorMatrix hamiltonian = build_hamiltonian(spec, inputs.hop, inputs.pot);
    const OperatorMatrix momentum = build_momentum(spec);
    const SpectralPropagator propagator(spectrum, psi0);
    std::optional<LinearPositionOracle> oracle;
    if (linear && inputs.pot.strength != 0.0) {
        oracle.emplace(psi0, spec, inputs.hop, inputs.pot.strength);
    }

    TimeSeries ts;
    if (oracle) ts.x_exact_oracle.emplace();
    for (double t : t_grid) {
        const StateVector psi = propagator.at(t);
        ts.times.push_back(t);
        ts.x_mean.push_back(mean_position(psi, spec));
        ts.k_mean.push_back(psi.expectation(momentum).real());
        ts.s_abs.push_back(std::abs(alternating_overlap(psi)));
        ts.norm.push_back(psi.norm());
        ts.energy.push_back(psi.expectation(hamiltonian).real());
        switch (model) {
            case CcrModel::None: ts.x_ccr.push_back(std::numeric_limits<double>::quiet_NaN()); break;
            case CcrModel::LinearCCR: ts.x_ccr.push_back(ccr_position_linear(psi0, spec, inputs.pot.strength, t)); break;
            case CcrModel::HarmonicCCR: ts.x_ccr.push_back(ccr_position_harmonic(psi0, spec, inputs.pot.strength, t)); break;
            case CcrModel::PeriodicKineticCCR:
                ts.x_ccr.push_back(ccr_position_periodic_kinetic(psi0, spec, inputs.pot.strength, t));
                break;
        }
        if (oracle) ts.x_exact_oracle->push_back((*oracle)(t));

        const double leak = leakage_weight(psi);
        ts.max_leakage = std::max(ts.max_leakage, leak);
        if (leak > policy.fail) {
            throw LeakageError("boundary weight " + std::to_string(leak) + " at t = " + std::to_string(t) +
                               " exceeds failure threshold " + std::to_string(policy.fail));
        }
    }
    if (ts.max_leakage > policy.warn) {
        ts.warnings.push_back("leakage: boundary weight reached " + std::to_string(ts.max_leakage) +
                              " (warn threshold " + std::to_string(policy.warn) + ")");
    }
    return ts;
}

inline TimeSeries run_timeseries(const HamiltonianInputs& inputs, const GaussianPacketSpec& packet,
                                 const std::vector<double>& t_grid, CcrModel model,
                                 const LeakagePolicy& policy = {}) {
    const SpectrumResult spectrum = eigensolve(build_hamiltonian(inputs.spec, inputs.hop, inputs.pot));
    return run_timeseries(inputs, spectrum, make_gaussian(inputs.spec, packet), t_grid, model, policy);
}

/// 0, dt, 2 dt, ... up to and including t_max (within dt * 1e-9).
inline std::vector<double> uniform_grid(double t_max, double dt) {
    if (!(dt > 0.0) || !(t_max >= 0.0)) throw PreconditionError("uniform_grid: need dt > 0 and t_max >= 0");
    std::vector<double> grid;
    const auto steps = static_cast<long>(std::floor(t_max / dt + 1e-9));
    grid.reserve(static_cast<std::size_t>(steps + 1));
    for (long i = 0; i <= steps; ++i) grid.push_back(static_cast<double>(i) * dt);
    return grid;
}

}  // namespace latticeccr
