#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "latticeccr/types.hpp"

namespace latticeccr {

/// Euler transformation of a series sum_j terms[j] whose terms behave like
/// ratio^j times a smooth sequence (ratio = -1 is the alternating case).
///
/// Builds the iterated-mean table on the partial sums,
///     S^{(d+1)}_k = (S^{(d)}_{k+1} - ratio * S^{(d)}_k) / (1 - ratio),
/// which for ratio = -1 is the repeated average of neighbouring partial sums
/// (binomial forward differences). The returned value is the newest entry
/// S^{(d)}_{last} at the depth d where it changes least relative to depth d-1;
/// the full triangle amplifies the last terms when |1 - ratio| is small.
inline Complex euler_accelerate(std::span<const Complex> terms, Complex ratio = -1.0) {
    if (terms.empty()) throw PreconditionError("euler_accelerate: empty term sequence");
    if (std::abs(1.0 - ratio) < 1e-12) {
        throw PreconditionError("euler_accelerate: ratio 1 is not an oscillating series");
    }

    std::vector<Complex> row(terms.size());
    Complex running{0.0};
    for (std::size_t j = 0; j < terms.size(); ++j) {
        running += terms[j];
        row[j] = running;
    }
    if (row.size() == 1) return row.front();

    const Complex scale = 1.0 / (1.0 - ratio);
    Complex previous = row.back();
    Complex best = row.back();
    double best_change = std::numeric_limits<double>::infinity();
    while (row.size() > 1) {
        for (std::size_t k = 0; k + 1 < row.size(); ++k) {
            row[k] = (row[k + 1] - ratio * row[k]) * scale;
        }
        row.pop_back();
        const Complex corner = row.back();
        const double change = std::abs(corner - previous);
        if (!std::isfinite(change)) break;
        if (change < best_change) {
            best_change = change;
            best = corner;
        }
        previous = corner;
    }
    return best;
}

inline double euler_accelerate(std::span<const double> terms) {
    std::vector<Complex> z(terms.begin(), terms.end());
    return euler_accelerate(std::span<const Complex>(z)).real();
}

/// <n|i k|psi> = sum_{j=1}^{j_max} (-1)^(j+1) / (j a) (psi_{n+j} - psi_{n-j}),
/// optionally Euler-accelerated. For psi_m = f(a m) with smooth f this tends
/// to f'(a n).
inline Complex discrete_derivative(const StateVector& psi, const LatticeSpec& spec, long site,
                                   int j_max, bool accelerate) {
    if (psi.half_width() != spec.half_width()) throw DimensionError("state and lattice windows differ");
    if (j_max < 1) throw PreconditionError("discrete_derivative: j_max must be >= 1");
    if (!spec.contains(site + j_max) || !spec.contains(site - j_max)) {
        throw RangeError("discrete_derivative: stencil n +- j_max = " + std::to_string(site) + " +- " +
                         std::to_string(j_max) + " leaves the window");
    }
    const double a = spec.spacing();
    std::vector<Complex> terms;
    terms.reserve(static_cast<std::size_t>(j_max));
    for (int j = 1; j <= j_max; ++j) {
        const double sign = (j % 2 == 1) ? 1.0 : -1.0;
        terms.push_back(sign / (j * a) * (psi.at(site + j) - psi.at(site - j)));
    }
    if (accelerate) return euler_accelerate(std::span<const Complex>(terms));
    Complex sum{0.0};
    for (const Complex& t : terms) sum += t;
    return sum;
}

/// Band energy eps_k = -t0 - 2 sum_{n>=1} t_n cos(a k n).
///
/// Quadratic hopping is an infinite series and is cut at j_max terms; with
/// `accelerate` the tail is Euler-transformed with ratio -e^{i a k}. At the
/// zone edge that ratio is 1, the terms no longer oscillate and the plain
/// partial sum is returned. Cosine and custom hopping have finite range and
/// are summed exactly (j_max ignored).
inline double dispersion_eval(const HoppingSpec& hop, double k, const LatticeSpec& spec, int j_max,
                              bool accelerate) {
    const double a = spec.spacing();
    const double edge = std::numbers::pi / a;
    if (!(k > -edge && k <= edge)) {
        throw RangeError("dispersion_eval: k outside the first Brillouin zone");
    }

    if (hop.kind != HoppingKind::Quadratic) {
        const HoppingAmplitudes amps = hopping_amplitudes(hop, spec);
        double eps = -amps.t0;
        for (int n = 1; n <= amps.range(); ++n) {
            eps -= 2.0 * amps.tn[static_cast<std::size_t>(n - 1)] * std::cos(a * k * n);
        }
        return eps;
    }

    if (j_max < 1) throw PreconditionError("dispersion_eval: quadratic hopping needs j_max >= 1");
    const double t0 = -std::numbers::pi * std::numbers::pi / (6.0 * a * a);
    // -2 t_n e^{i a k n} with t_n = (-1)^(n+1) / (a n)^2
    std::vector<Complex> terms;
    terms.reserve(static_cast<std::size_t>(j_max));
    for (int n = 1; n <= j_max; ++n) {
        const double tn = ((n % 2 == 1) ? 1.0 : -1.0) / (a * a * n * n);
        terms.push_back(-2.0 * tn * std::exp(kI * (a * k * n)));
    }
    const Complex ratio = -std::exp(kI * (a * k));
    Complex sum{0.0};
    if (accelerate && std::abs(1.0 - ratio) > 1e-8) {
        sum = euler_accelerate(std::span<const Complex>(terms), ratio);
    } else {
        for (const Complex& t : terms) sum += t;
    }
    return -t0 + sum.real();
}

}  // namespace latticeccr
