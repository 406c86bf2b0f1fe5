#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "latticeccr/ccr.hpp"
#include "latticeccr/operators.hpp"

namespace latticeccr {

/// Full eigendecomposition. Columns of `eigenvectors` are orthonormal and
/// ordered like `eigenvalues` (ascending). Phase convention: the
/// largest-magnitude component of every eigenvector is real and positive
/// (the lowest site index wins among components equal to 1e-9 relative).
struct SpectrumResult {
    RealVector eigenvalues;
    ComplexMatrix eigenvectors;
    double residual_norm = 0.0;          // max_j |H v_j - E_j v_j|
    double orthonormality_error = 0.0;   // max |V^dagger V - 1|

    Eigen::Index size() const noexcept { return eigenvalues.size(); }

    StateVector state(Eigen::Index j) const {
        if (eigenvectors.rows() % 2 == 0) {
            throw DimensionError("SpectrumResult::state needs an odd (site window) dimension");
        }
        return StateVector(static_cast<int>((eigenvectors.rows() - 1) / 2), eigenvectors.col(j));
    }
};

namespace detail {

inline void fix_phase(ComplexMatrix& vectors) {
    for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
        auto col = vectors.col(j);
        const double largest = col.cwiseAbs().maxCoeff();
        if (largest == 0.0) continue;
        Eigen::Index pivot = 0;
        while (std::abs(col(pivot)) < largest * (1.0 - 1e-9)) ++pivot;
        const Complex phase = std::conj(col(pivot)) / std::abs(col(pivot));
        col *= phase;
        col(pivot) = std::abs(col(pivot));
    }
}

}  // namespace detail

/// Dense Hermitian eigendecomposition. `residual_tol` <= 0 selects the
/// default 1e-10 * max|H_ij| * N.
inline SpectrumResult eigensolve(const OperatorMatrix& hamiltonian, double residual_tol = 0.0) {
    if (!hamiltonian.is_hermitian()) {
        throw PreconditionError("eigensolve: operator is not Hermitian (error " +
                                std::to_string(hamiltonian.hermiticity_error()) + ")");
    }
    const auto n = hamiltonian.dimension();
    SpectrumResult out;
    if (n == 0) {
        out.eigenvalues.resize(0);
        out.eigenvectors.resize(0, 0);
        return out;
    }

    if (hamiltonian.is_real()) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(hamiltonian.entries().real());
        if (solver.info() != Eigen::Success) throw ConvergenceError("eigensolve: no convergence");
        out.eigenvalues = solver.eigenvalues();
        out.eigenvectors = solver.eigenvectors().cast<Complex>();
    } else {
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(hamiltonian.entries());
        if (solver.info() != Eigen::Success) throw ConvergenceError("eigensolve: no convergence");
        out.eigenvalues = solver.eigenvalues();
        out.eigenvectors = solver.eigenvectors();
    }
    detail::fix_phase(out.eigenvectors);

    const ComplexMatrix residual = hamiltonian.entries() * out.eigenvectors -
                                   out.eigenvectors * out.eigenvalues.cast<Complex>().asDiagonal();
    out.residual_norm = residual.colwise().norm().maxCoeff();
    out.orthonormality_error =
        (out.eigenvectors.adjoint() * out.eigenvectors - ComplexMatrix::Identity(n, n))
            .cwiseAbs()
            .maxCoeff();

    const double tol = residual_tol > 0.0
                           ? residual_tol
                           : 1e-10 * std::max(hamiltonian.max_abs(), 1e-300) * static_cast<double>(n);
    if (out.residual_norm > tol) {
        throw ToleranceError("eigensolve: residual " + std::to_string(out.residual_norm) +
                             " exceeds tolerance " + std::to_string(tol));
    }
    if (out.orthonormality_error > 1e-10) {
        throw ToleranceError("eigensolve: eigenvectors not orthonormal (error " +
                             std::to_string(out.orthonormality_error) + ")");
    }
    return out;
}

enum class Parity { Even, Odd, None };

inline const char* to_string(Parity p) {
    switch (p) {
        case Parity::Even: return "even";
        case Parity::Odd: return "odd";
        case Parity::None: return "none";
    }
    return "none";
}

struct EigenstateDiagnostics {
    Eigen::Index index = 0;
    Parity parity = Parity::None;
    double overlap = 0.0;  // |S_n|
    double center = 0.0;   // <x>
};

inline constexpr double kParityTol = 1e-8;

inline Parity classify_parity(const ComplexVector& v) {
    const auto n = v.size();
    double even_err = 0.0;
    double odd_err = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        even_err = std::max(even_err, std::abs(v(n - 1 - i) - v(i)));
        odd_err = std::max(odd_err, std::abs(v(n - 1 - i) + v(i)));
    }
    if (even_err < kParityTol) return Parity::Even;
    if (odd_err < kParityTol) return Parity::Odd;
    return Parity::None;
}

inline double position_expectation(const ComplexVector& v, const LatticeSpec& spec) {
    double x = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) x += std::norm(v(i)) * spec.position(spec.site(i));
    return x;
}

/// Re-projects adjacent eigenvector pairs with gap < `gap_tol` onto the
/// even and odd combinations when their span is reflection invariant.
/// Needed for bonding/antibonding pairs whose splitting is near rounding, where
/// the eigensolver returns an arbitrary mixture. Within a pair the even member
/// is placed first.
inline SpectrumResult symmetrize_pairs(const SpectrumResult& sr, const LatticeSpec& spec, double gap_tol) {
    if (sr.eigenvectors.rows() != spec.size()) throw DimensionError("spectrum and lattice windows differ");
    SpectrumResult out = sr;
    const auto n = sr.size();
    for (Eigen::Index j = 0; j + 1 < n;) {
        if (sr.eigenvalues(j + 1) - sr.eigenvalues(j) >= gap_tol) {
            ++j;
            continue;
        }
        ComplexMatrix pair(spec.size(), 2);
        pair.col(0) = sr.eigenvectors.col(j);
        pair.col(1) = sr.eigenvectors.col(j + 1);
        const ComplexMatrix reflected = pair.colwise().reverse();
        const ComplexMatrix block = pair.adjoint() * reflected;
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> solver(block);
        const auto& lambda = solver.eigenvalues();
        // odd (-1) eigenvalue first from the solver; both must be +-1 for a
        // reflection-invariant span
        if (std::abs(lambda(0) + 1.0) < 1e-6 && std::abs(lambda(1) - 1.0) < 1e-6) {
            ComplexMatrix rotated = pair * solver.eigenvectors();
            out.eigenvectors.col(j) = rotated.col(1);
            out.eigenvectors.col(j + 1) = rotated.col(0);
        }
        j += 2;
    }
    detail::fix_phase(out.eigenvectors);
    return out;
}

inline double default_pair_gap_tol(const SpectrumResult& sr) {
    const double scale = sr.size() == 0 ? 1.0 : sr.eigenvalues.cwiseAbs().maxCoeff();
    return 1e-6 * std::max(1.0, scale);
}

/// Per-state parity, |S_n| and <x>, after re-projecting near-degenerate
/// pairs (gap_tol <= 0 picks default_pair_gap_tol).
inline std::vector<EigenstateDiagnostics> diagnose_states(const SpectrumResult& sr, const LatticeSpec& spec,
                                                          double gap_tol = 0.0) {
    const SpectrumResult adapted =
        symmetrize_pairs(sr, spec, gap_tol > 0.0 ? gap_tol : default_pair_gap_tol(sr));
    std::vector<EigenstateDiagnostics> out;
    out.reserve(static_cast<std::size_t>(sr.size()));
    for (Eigen::Index j = 0; j < sr.size(); ++j) {
        const ComplexVector& v = adapted.eigenvectors.col(j);
        EigenstateDiagnostics d;
        d.index = j;
        d.parity = classify_parity(v);
        d.overlap = std::abs(alternating_overlap(StateVector(spec.half_width(), v)));
        d.center = position_expectation(v, spec);
        out.push_back(d);
    }
    return out;
}

/// Quantum number below which the equidistant continuum spectrum survives:
/// threshold_b / sqrt(a^4 c).
inline double threshold_estimate(double a, double c, double threshold_b = 3.0) {
    if (!(a > 0.0) || !(c > 0.0)) throw PreconditionError("threshold_estimate: a and c must be positive");
    return threshold_b / (a * a * std::sqrt(c));
}

struct SweepRow {
    double a = 0.0;
    double a_c14 = 0.0;   // a c^{1/4}
    int n = 0;
    double e_norm = 0.0;  // E_n / sqrt(c)
};

struct SweepResult {
    std::vector<SweepRow> rows;
    /// (a c^{1/4}, 3/(a c^{1/4})^2) for every grid point
    std::vector<std::pair<double, double>> reference;
};

/// Lowest `states_per_point` normalized eigenvalues of k^2/2 + c x^2/2 (or the
/// given kinetic term) for each spacing.
inline SweepResult harmonic_sweep(double c, const std::vector<double>& a_values, int states_per_point,
                                  int half_width = 100, const HoppingSpec& hop = HoppingSpec::quadratic()) {
    if (!(c > 0.0)) throw PreconditionError("harmonic_sweep: c must be positive");
    if (states_per_point < 1) throw PreconditionError("harmonic_sweep: states_per_point must be >= 1");
    const double c14 = std::pow(c, 0.25);
    SweepResult out;
    for (double a : a_values) {
        if (!(a > 0.0)) throw PreconditionError("harmonic_sweep: spacings must be positive");
        const LatticeSpec spec(half_width, a);
        const SpectrumResult sr = eigensolve(build_hamiltonian(spec, hop, PotentialSpec::harmonic(c)));
        const int count = std::min<int>(states_per_point, static_cast<int>(sr.size()));
        for (int n = 0; n < count; ++n) {
            out.rows.push_back({a, a * c14, n, sr.eigenvalues(n) / std::sqrt(c)});
        }
        out.reference.emplace_back(a * c14, threshold_estimate(a, c));
    }
    return out;
}

struct DegeneratePair {
    Eigen::Index lower = 0;
    Eigen::Index upper = 0;
    double gap = 0.0;
    double center_separation = 0.0;  // |<x>_lower - <x>_upper|
    double lobe_separation = 0.0;    // 2 <|x|> of the lower state
};

/// Non-overlapping adjacent pairs (n, n+1) with E_{n+1} - E_n < gap_tol.
inline std::vector<DegeneratePair> degenerate_pairs(const SpectrumResult& sr, const LatticeSpec& spec,
                                                    double gap_tol) {
    std::vector<DegeneratePair> out;
    if (sr.size() < 2) return out;
    const SpectrumResult adapted = symmetrize_pairs(sr, spec, gap_tol);
    for (Eigen::Index j = 0; j + 1 < sr.size();) {
        const double gap = sr.eigenvalues(j + 1) - sr.eigenvalues(j);
        if (gap >= gap_tol) {
            ++j;
            continue;
        }
        DegeneratePair p;
        p.lower = j;
        p.upper = j + 1;
        p.gap = gap;
        p.center_separation = std::abs(position_expectation(adapted.eigenvectors.col(j), spec) -
                                       position_expectation(adapted.eigenvectors.col(j + 1), spec));
        double abs_x = 0.0;
        for (Eigen::Index i = 0; i < spec.size(); ++i) {
            abs_x += std::norm(adapted.eigenvectors(i, j)) * std::abs(spec.position(spec.site(i)));
        }
        p.lobe_separation = 2.0 * abs_x;
        out.push_back(p);
        j += 2;
    }
    return out;
}

struct LadderReport {
    std::vector<Eigen::Index> states;     // interior states, ascending energy
    std::vector<double> centers;          // <x> of those states
    std::vector<double> interior_spacings;
    double mean_spacing = 0.0;
    double max_spacing_deviation = 0.0;   // max |spacing - |a F||
    std::vector<double> translation_residuals;
    double max_translation_residual = 0.0;
    Eigen::Index central_state = 0;       // interior state closest to the window center
    double tail_distance = 0.0;           // in sites
    double tail_amplitude = 0.0;          // max |psi_m| of central_state at |m - center| >= tail_distance
};

/// Wannier-Stark ladder diagnostics for H = kinetic - F x. Only states whose
/// center lies in the central `interior_fraction` of the window take part.
/// Translation residuals compare T_n psi_j with psi_{j+1} (n the rounded center
/// shift) minimized over a global phase.
inline LadderReport wannier_stark_analysis(const SpectrumResult& sr, const LatticeSpec& spec, double force,
                                           double interior_fraction = 0.5) {
    if (force == 0.0) throw PreconditionError("wannier_stark_analysis: F must be nonzero");
    if (!(interior_fraction > 0.0 && interior_fraction <= 1.0)) {
        throw PreconditionError("wannier_stark_analysis: interior_fraction must lie in (0, 1]");
    }
    if (sr.eigenvectors.rows() != spec.size()) throw DimensionError("spectrum and lattice windows differ");

    const double a = spec.spacing();
    const double limit = interior_fraction * spec.half_width() * a;
    LadderReport out;
    for (Eigen::Index j = 0; j < sr.size(); ++j) {
        const double center = position_expectation(sr.eigenvectors.col(j), spec);
        if (std::abs(center) <= limit) {
            out.states.push_back(j);
            out.centers.push_back(center);
        }
    }
    if (out.states.size() < 3) {
        throw InsufficientDataError("wannier_stark_analysis: only " + std::to_string(out.states.size()) +
                                    " interior states");
    }

    const double expected = std::abs(a * force);
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < out.states.size(); ++i) {
        const double spacing = sr.eigenvalues(out.states[i + 1]) - sr.eigenvalues(out.states[i]);
        out.interior_spacings.push_back(spacing);
        sum += spacing;
        out.max_spacing_deviation = std::max(out.max_spacing_deviation, std::abs(spacing - expected));

        const long shift = std::lround((out.centers[i + 1] - out.centers[i]) / a);
        const ComplexVector moved = build_translation(spec, shift).entries() * sr.eigenvectors.col(out.states[i]);
        const ComplexVector& target = sr.eigenvectors.col(out.states[i + 1]);
        const Complex overlap = target.dot(moved);
        const Complex phase = std::abs(overlap) > 0.0 ? overlap / std::abs(overlap) : Complex(1.0);
        const double residual = (moved - phase * target).norm();
        out.translation_residuals.push_back(residual);
        out.max_translation_residual = std::max(out.max_translation_residual, residual);
    }
    out.mean_spacing = sum / static_cast<double>(out.interior_spacings.size());

    std::size_t central = 0;
    for (std::size_t i = 1; i < out.centers.size(); ++i) {
        if (std::abs(out.centers[i]) < std::abs(out.centers[central])) central = i;
    }
    out.central_state = out.states[central];
    out.tail_distance = 0.5 * spec.half_width();
    const double center_site = out.centers[central] / a;
    for (Eigen::Index i = 0; i < spec.size(); ++i) {
        if (std::abs(spec.site(i) - center_site) >= out.tail_distance) {
            out.tail_amplitude = std::max(out.tail_amplitude, std::abs(sr.eigenvectors(i, out.central_state)));
        }
    }
    return out;
}

}  // namespace latticeccr
