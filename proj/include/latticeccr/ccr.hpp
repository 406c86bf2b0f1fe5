#pragma once

#include <string>
#include <vector>

#include "latticeccr/operators.hpp"

namespace latticeccr {

/// S_psi = sum_m (-1)^m psi_m. Proportional to the overlap with the
/// zone-edge Bloch state |pi/a>, which carries the whole CCR defect.
inline Complex alternating_overlap(const StateVector& psi) {
    Complex sum{0.0};
    const long half = psi.half_width();
    for (long m = -half; m <= half; ++m) sum += detail::alternating_sign(m) * psi.at(m);
    return sum;
}

struct CcrDefect {
    std::vector<long> sites;       // interior sites |m| <= M - W
    std::vector<Complex> profile;  // <m|([x,k] - i)|psi>
    double max_defect = 0.0;
    Complex overlap{0.0};          // S_psi
    /// max_m |profile_m - (-i (-1)^m S_psi)|, the deviation from the
    /// infinite-lattice identity (truncation plus rounding).
    double identity_tail = 0.0;
};

/// Commutator defect ([x,k] - i) psi on the interior of the window, evaluated
/// with the truncated matrices as x(k psi) - k(x psi) - i psi.
inline CcrDefect ccr_defect(const StateVector& psi, const LatticeSpec& spec, int margin) {
    if (psi.half_width() != spec.half_width()) throw DimensionError("state and lattice windows differ");
    if (margin < 0 || margin >= spec.half_width()) {
        throw PreconditionError("ccr_defect: margin W must satisfy 0 <= W < M");
    }
    const long inner = spec.half_width() - margin;
    for (long m = -spec.half_width(); m <= spec.half_width(); ++m) {
        if (std::labs(m) > inner && std::abs(psi.at(m)) > 1e-12) {
            throw PreconditionError("ccr_defect: state has amplitude " +
                                    std::to_string(std::abs(psi.at(m))) + " at site " +
                                    std::to_string(m) + " outside the interior |m| <= " +
                                    std::to_string(inner));
        }
    }

    const OperatorMatrix k = build_momentum(spec);
    const ComplexVector& v = psi.amplitudes();
    RealVector x(spec.size());
    for (Eigen::Index i = 0; i < spec.size(); ++i) x(i) = spec.position(spec.site(i));

    const ComplexVector kv = k.entries() * v;
    const ComplexVector kxv = k.entries() * (x.cast<Complex>().cwiseProduct(v));
    const ComplexVector defect = x.cast<Complex>().cwiseProduct(kv) - kxv - kI * v;

    CcrDefect out;
    out.overlap = alternating_overlap(psi);
    for (long m = -inner; m <= inner; ++m) {
        const Complex d = defect(spec.index(m));
        out.sites.push_back(m);
        out.profile.push_back(d);
        out.max_defect = std::max(out.max_defect, std::abs(d));
        const Complex predicted = -kI * detail::alternating_sign(m) * out.overlap;
        out.identity_tail = std::max(out.identity_tail, std::abs(d - predicted));
    }
    return out;
}

}  // namespace latticeccr
