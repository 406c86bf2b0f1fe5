#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "latticeccr/errors.hpp"

namespace latticeccr {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr Complex kI{0.0, 1.0};

/// Finite symmetric window m = -M..M standing in for the infinite lattice.
class LatticeSpec {
public:
    LatticeSpec(int half_width, double spacing) : half_width_(half_width), spacing_(spacing) {
        if (half_width < 1) {
            throw PreconditionError("LatticeSpec: half_width M must be >= 1, got " +
                                    std::to_string(half_width));
        }
        if (!(spacing > 0.0) || !std::isfinite(spacing)) {
            throw PreconditionError("LatticeSpec: spacing a must be positive and finite");
        }
    }

    int half_width() const noexcept { return half_width_; }
    double spacing() const noexcept { return spacing_; }
    Eigen::Index size() const noexcept { return 2 * static_cast<Eigen::Index>(half_width_) + 1; }

    int site(Eigen::Index i) const noexcept { return static_cast<int>(i) - half_width_; }
    bool contains(long m) const noexcept { return m >= -half_width_ && m <= half_width_; }

    Eigen::Index index(long m) const {
        if (!contains(m)) {
            throw RangeError("site " + std::to_string(m) + " outside window [-" +
                             std::to_string(half_width_) + ", " + std::to_string(half_width_) +
                             "]");
        }
        return static_cast<Eigen::Index>(m + half_width_);
    }

    double position(long m) const noexcept { return spacing_ * static_cast<double>(m); }

    bool operator==(const LatticeSpec&) const = default;

private:
    int half_width_;
    double spacing_;
};

/// Dense operator in the site basis. Hermiticity is a property that can be
/// queried, not a constructor invariant: translations and commutators are
/// stored in the same type.
class OperatorMatrix {
public:
    static constexpr double kDefaultHermiticityTol = 1e-12;

    explicit OperatorMatrix(ComplexMatrix entries, double hermiticity_tol = kDefaultHermiticityTol)
        : entries_(std::move(entries)), tol_(hermiticity_tol) {
        if (entries_.rows() != entries_.cols()) {
            throw DimensionError("OperatorMatrix must be square");
        }
    }

    const ComplexMatrix& entries() const noexcept { return entries_; }
    Eigen::Index dimension() const noexcept { return entries_.rows(); }
    double hermiticity_tol() const noexcept { return tol_; }

    Complex operator()(Eigen::Index row, Eigen::Index col) const { return entries_(row, col); }

    double hermiticity_error() const {
        if (entries_.size() == 0) return 0.0;
        return (entries_ - entries_.adjoint()).cwiseAbs().maxCoeff();
    }
    bool is_hermitian() const { return hermiticity_error() <= tol_; }

    bool is_real() const {
        return entries_.size() == 0 || entries_.imag().cwiseAbs().maxCoeff() == 0.0;
    }

    double max_abs() const { return entries_.size() == 0 ? 0.0 : entries_.cwiseAbs().maxCoeff(); }

    friend OperatorMatrix operator+(const OperatorMatrix& lhs, const OperatorMatrix& rhs) {
        check_same(lhs, rhs);
        return OperatorMatrix(lhs.entries_ + rhs.entries_, std::max(lhs.tol_, rhs.tol_));
    }
    friend OperatorMatrix operator-(const OperatorMatrix& lhs, const OperatorMatrix& rhs) {
        check_same(lhs, rhs);
        return OperatorMatrix(lhs.entries_ - rhs.entries_, std::max(lhs.tol_, rhs.tol_));
    }
    friend OperatorMatrix operator*(const OperatorMatrix& lhs, const OperatorMatrix& rhs) {
        check_same(lhs, rhs);
        return OperatorMatrix(lhs.entries_ * rhs.entries_, std::max(lhs.tol_, rhs.tol_));
    }
    friend OperatorMatrix operator*(Complex scale, const OperatorMatrix& op) {
        return OperatorMatrix(scale * op.entries_, op.tol_);
    }
    OperatorMatrix adjoint() const { return OperatorMatrix(entries_.adjoint(), tol_); }

private:
    static void check_same(const OperatorMatrix& lhs, const OperatorMatrix& rhs) {
        if (lhs.dimension() != rhs.dimension()) {
            throw DimensionError("operator dimensions differ: " + std::to_string(lhs.dimension()) +
                                 " vs " + std::to_string(rhs.dimension()));
        }
    }

    ComplexMatrix entries_;
    double tol_;
};

/// Amplitudes psi_m on the window m = -M..M.
class StateVector {
public:
    static constexpr double kNormTol = 1e-12;

    StateVector(int half_width, ComplexVector amplitudes)
        : half_width_(half_width), amplitudes_(std::move(amplitudes)) {
        if (amplitudes_.size() != 2 * static_cast<Eigen::Index>(half_width) + 1) {
            throw DimensionError("StateVector: expected " + std::to_string(2 * half_width + 1) +
                                 " amplitudes, got " + std::to_string(amplitudes_.size()));
        }
        if (!amplitudes_.allFinite()) {
            throw PreconditionError("StateVector: amplitudes must be finite");
        }
    }

    /// The site-localized state |m>.
    static StateVector site(const LatticeSpec& spec, long m) {
        ComplexVector v = ComplexVector::Zero(spec.size());
        v(spec.index(m)) = 1.0;
        return StateVector(spec.half_width(), std::move(v));
    }

    int half_width() const noexcept { return half_width_; }
    Eigen::Index size() const noexcept { return amplitudes_.size(); }
    const ComplexVector& amplitudes() const noexcept { return amplitudes_; }

    Complex at(long m) const {
        if (m < -half_width_ || m > half_width_) {
            throw RangeError("site " + std::to_string(m) + " outside state window");
        }
        return amplitudes_(static_cast<Eigen::Index>(m + half_width_));
    }

    double norm() const { return amplitudes_.norm(); }
    bool normalized() const { return std::abs(amplitudes_.squaredNorm() - 1.0) <= kNormTol; }

    StateVector normalized_copy() const {
        const double n = norm();
        if (n == 0.0) throw PreconditionError("cannot normalize the zero state");
        return StateVector(half_width_, amplitudes_ / n);
    }

    /// <this|op|this>
    Complex expectation(const OperatorMatrix& op) const {
        if (op.dimension() != size()) throw DimensionError("expectation: dimension mismatch");
        return amplitudes_.dot(op.entries() * amplitudes_);
    }

    /// Largest |psi_m| over the two edge sites m = +-M.
    double boundary_amplitude() const {
        return std::max(std::abs(amplitudes_(0)), std::abs(amplitudes_(size() - 1)));
    }

private:
    int half_width_;
    ComplexVector amplitudes_;
};

enum class HoppingKind { Quadratic, NearestNeighborCosine, Custom };

/// Kinetic term of the general hopping Hamiltonian
///   H_kin = -t0 * 1 - sum_{n>=1} t_n (T_n + T_n^dagger).
/// Quadratic is k^2/2 (all ranges), NearestNeighborCosine is (1 - cos a k)/a^2.
struct HoppingSpec {
    HoppingKind kind = HoppingKind::Quadratic;
    double t0 = 0.0;             // Custom only
    std::vector<double> tn{};    // Custom only, tn[n-1] = t_n

    static HoppingSpec quadratic() { return {}; }
    static HoppingSpec cosine() { return {HoppingKind::NearestNeighborCosine, 0.0, {}}; }
    static HoppingSpec custom(double t0, std::vector<double> tn) {
        return {HoppingKind::Custom, t0, std::move(tn)};
    }

    bool operator==(const HoppingSpec&) const = default;
};

struct HoppingAmplitudes {
    double t0 = 0.0;
    std::vector<double> tn;  // tn[n-1] = t_n

    int range() const noexcept { return static_cast<int>(tn.size()); }
};

/// On-site term and hopping amplitudes t_1..t_R for the window. Quadratic
/// hopping keeps every t_n with n <= 2M (the full dense band).
inline HoppingAmplitudes hopping_amplitudes(const HoppingSpec& hop, const LatticeSpec& spec) {
    const double a = spec.spacing();
    switch (hop.kind) {
        case HoppingKind::Quadratic: {
            HoppingAmplitudes out{-std::numbers::pi * std::numbers::pi / (6.0 * a * a), {}};
            const int range = 2 * spec.half_width();
            out.tn.reserve(static_cast<std::size_t>(range));
            for (int n = 1; n <= range; ++n) {
                const double sign = (n % 2 == 1) ? 1.0 : -1.0;
                out.tn.push_back(sign / (a * a * n * n));
            }
            return out;
        }
        case HoppingKind::NearestNeighborCosine:
            return {-1.0 / (a * a), {0.5 / (a * a)}};
        case HoppingKind::Custom:
            if (static_cast<long>(hop.tn.size()) > 2L * spec.half_width()) {
                throw RangeError("custom hopping range " + std::to_string(hop.tn.size()) +
                                 " exceeds 2M = " + std::to_string(2 * spec.half_width()));
            }
            for (double t : hop.tn) {
                if (!std::isfinite(t)) throw PreconditionError("custom hopping amplitudes must be finite");
            }
            return {hop.t0, hop.tn};
    }
    throw PreconditionError("unknown hopping kind");
}

enum class PotentialKind { Constant, Linear, Harmonic, Custom };

/// Local potential V_m. Linear(F) is V_m = -F a m (H = k^2/2 - F x);
/// Harmonic(c) is V_m = c (a m)^2 / 2.
struct PotentialSpec {
    PotentialKind kind = PotentialKind::Constant;
    double strength = 0.0;         // V0, F or c
    std::vector<double> values{};  // Custom only, m = -M..M

    static PotentialSpec constant(double v0) { return {PotentialKind::Constant, v0, {}}; }
    static PotentialSpec linear(double force) { return {PotentialKind::Linear, force, {}}; }
    static PotentialSpec harmonic(double c) { return {PotentialKind::Harmonic, c, {}}; }
    static PotentialSpec custom(std::vector<double> values) {
        return {PotentialKind::Custom, 0.0, std::move(values)};
    }

    /// True if V_{-m} = V_m for every window.
    bool is_even() const {
        if (kind == PotentialKind::Custom) {
            const auto n = values.size();
            for (std::size_t i = 0; i < n / 2; ++i) {
                if (values[i] != values[n - 1 - i]) return false;
            }
            return true;
        }
        return kind != PotentialKind::Linear || strength == 0.0;
    }

    bool operator==(const PotentialSpec&) const = default;
};

inline RealVector potential_values(const PotentialSpec& pot, const LatticeSpec& spec) {
    if (!std::isfinite(pot.strength)) throw PreconditionError("potential parameter must be finite");
    RealVector v(spec.size());
    for (Eigen::Index i = 0; i < spec.size(); ++i) {
        const double x = spec.position(spec.site(i));
        switch (pot.kind) {
            case PotentialKind::Constant: v(i) = pot.strength; break;
            case PotentialKind::Linear: v(i) = -pot.strength * x; break;
            case PotentialKind::Harmonic: v(i) = 0.5 * pot.strength * x * x; break;
            case PotentialKind::Custom:
                if (static_cast<Eigen::Index>(pot.values.size()) != spec.size()) {
                    throw DimensionError("custom potential needs " + std::to_string(spec.size()) +
                                         " values, got " + std::to_string(pot.values.size()));
                }
                v(i) = pot.values[static_cast<std::size_t>(i)];
                if (!std::isfinite(v(i))) throw PreconditionError("custom potential values must be finite");
                break;
        }
    }
    return v;
}

}  // namespace latticeccr
