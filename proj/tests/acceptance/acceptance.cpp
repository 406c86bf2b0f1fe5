// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <cstdarg>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "jacobi.hpp"
#include "latticeccr/latticeccr.hpp"

using namespace latticeccr;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const char* fmt, ...) __attribute__((format(printf, 3, 4))) {
        char buf[512];
        va_list args;
        va_start(args, fmt);
        std::vsnprintf(buf, sizeof buf, fmt, args);
        va_end(args);
        if (!detail.empty()) detail += "; ";
        detail += buf;
        if (!ok) {
            detail += " [x]";
            pass = false;
        }
    }
};

double sign_of(long d) { return (d % 2 == 0) ? 1.0 : -1.0; }

// column tail of [x,k] against -i(-1)^(m-n) (m != n), 0 (m == n) on the interior block
double commutator_tail(int half_width, int margin) {
    const LatticeSpec spec(half_width, 1.0);
    const OperatorMatrix c = commutator(build_position(spec), build_momentum(spec));
    const long inner = half_width - margin;
    double tail = 0.0;
    for (long n = -inner; n <= inner; ++n) {
        for (long m = -inner; m <= inner; ++m) {
            const Complex expected = m == n ? Complex(0.0) : Complex(0.0, -sign_of(m - n));
            tail = std::max(tail, std::abs(c(spec.index(m), spec.index(n)) - expected));
        }
    }
    return tail;
}

Outcome ac1() {
    Outcome o;
    double k2_err = 0.0;
    bool theta_exact = true;
    for (double a : {1.0, 0.37, 2.5}) {
        const LatticeSpec spec(40, a);
        const OperatorMatrix k2 = build_k_squared(spec);
        const OperatorMatrix theta = build_phase_operator(spec);
        for (long m = -40; m <= 40; ++m) {
            for (long n = -40; n <= 40; ++n) {
                const long d = m - n;
                const double expected = d == 0 ? kPi * kPi / 3.0 / (a * a)
                                               : 2.0 * sign_of(d) / static_cast<double>(d * d) / (a * a);
                const Complex got = k2(spec.index(m), spec.index(n));
                k2_err = std::max(k2_err, std::abs(got - expected) / std::abs(expected));
                const Complex th = d == 0 ? Complex(0.0) : sign_of(d) * (Complex(0.0, -1.0) / static_cast<double>(d));
                theta_exact = theta_exact && theta(spec.index(m), spec.index(n)) == th;
            }
        }
    }
    o.require(k2_err <= 1e-14, "k^2 max rel err %.1e (<= 1e-14)", k2_err);
    o.require(theta_exact, "theta entries %s", theta_exact ? "exact" : "NOT exact");
    return o;
}

Outcome ac2() {
    Outcome o;
    double cov = 0.0;
    for (double a : {1.0, 0.6}) {
        const LatticeSpec spec(20, a);
        const OperatorMatrix x = build_position(spec);
        for (long n = -40; n <= 40; ++n) {
            const OperatorMatrix t = build_translation(spec, n);
            const ComplexMatrix diff = commutator(x, t).entries() - Complex(a * n) * t.entries();
            cov = std::max(cov, diff.cwiseAbs().maxCoeff() / (1.0 + std::abs(a * n)));
        }
    }
    o.require(cov <= 1e-13, "[x,T_n] - a n T_n max %.1e", cov);
    const double tail400 = commutator_tail(400, 100);
    const double tail800 = commutator_tail(800, 200);
    o.require(tail400 < 5e-3, "Eq.5 tail M=400,W=100: %.2e (< 5e-3)", tail400);
    o.require(tail800 <= std::max(0.5 * tail400, 1e-13), "M=800,W=200: %.2e (<= max(tail/2, 1e-13))", tail800);
    return o;
}

Outcome ac3() {
    Outcome o;
    const LatticeSpec spec(200, 1.0);
    const int margin = 50;
    const double tail = commutator_tail(200, margin);
    std::mt19937_64 rng(31337);
    std::normal_distribution<double> nd;
    double worst_excess = 0.0;
    double worst_dev = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        ComplexVector v = ComplexVector::Zero(spec.size());
        for (long m = -150; m <= 150; ++m) v(spec.index(m)) = Complex(nd(rng), nd(rng));
        const StateVector psi = StateVector(spec.half_width(), v).normalized_copy();
        const CcrDefect d = ccr_defect(psi, spec, margin);
        const double bound = std::max(tail * psi.amplitudes().cwiseAbs().sum(), 1e-12);
        worst_dev = std::max(worst_dev, d.identity_tail);
        worst_excess = std::max(worst_excess, d.identity_tail / bound);
    }
    o.require(worst_excess <= 1.0, "20 states: max |defect + i(-1)^m S| = %.1e, within tail bound (ratio %.2f)",
              worst_dev, worst_excess);
    return o;
}

Outcome ac4() {
    Outcome o;
    const LatticeSpec spec(200, 0.1);
    ComplexVector v(spec.size());
    for (Eigen::Index i = 0; i < spec.size(); ++i) {
        const double x = spec.position(spec.site(i));
        v(i) = std::exp(-0.5 * x * x);
    }
    const StateVector psi(spec.half_width(), v);
    const double target = -0.5 * std::exp(-0.125);
    const double err = std::abs(discrete_derivative(psi, spec, 5, 40, true).real() - target);
    o.require(err <= 1e-6, "f'(0.5) with 40 accelerated terms: err %.1e (<= 1e-6)", err);
    o.require(std::abs(target - (-0.4412485)) < 5e-8, "reference -0.4412485");
    return o;
}

Outcome ac5() {
    Outcome o;
    const double c = 0.01;
    const LatticeSpec spec(100, 1.0);
    const SpectrumResult sr = eigensolve(build_hamiltonian(spec, HoppingSpec::quadratic(), PotentialSpec::harmonic(c)));
    double worst = 0.0;
    for (int n = 0; n <= 10; ++n) {
        worst = std::max(worst, std::abs(sr.eigenvalues(n) / std::sqrt(c) / (n + 0.5) - 1.0));
    }
    o.require(worst <= 0.01, "max |E_n/sqrt(c)/(n+1/2) - 1| for n<=10: %.1e", worst);
    const double thr = threshold_estimate(1.0, c);
    o.require(std::abs(thr - 30.0) < 1e-12, "threshold_estimate = %.6g", thr);
    return o;
}

Outcome ac6() {
    Outcome o;
    const double c = 1.0;
    const LatticeSpec spec(100, 3.0);
    const SpectrumResult sr = eigensolve(build_hamiltonian(spec, HoppingSpec::quadratic(), PotentialSpec::harmonic(c)));
    const double thr = threshold_estimate(3.0, c);
    const auto pairs = degenerate_pairs(sr, spec, 0.1 * std::sqrt(c));
    int tight = 0;
    for (const auto& p : pairs) {
        if (p.lower > thr && p.gap / std::sqrt(c) < 1e-3) ++tight;
    }
    const double floor = 1e-12 * sr.eigenvalues.cwiseAbs().maxCoeff();
    int violations = 0;
    std::size_t checked = 0;
    for (std::size_t i = 0; i + 1 < pairs.size(); ++i) {
        if (pairs[i + 1].gap < floor) break;
        ++checked;
        if (!(pairs[i + 1].gap < pairs[i].gap)) ++violations;
    }
    o.require(tight >= 1, "%d pairs above threshold with gap/sqrt(c) < 1e-3", tight);
    o.require(violations == 0 && checked > 0, "%zu pair gaps monotone (%.1e -> %.1e), %d violations", checked,
              pairs.empty() ? 0.0 : pairs.front().gap, pairs.empty() ? 0.0 : pairs[checked].gap, violations);
    return o;
}

Outcome ac7() {
    Outcome o;
    const LatticeSpec spec(100, 1.0);
    const SpectrumResult sr =
        eigensolve(build_hamiltonian(spec, HoppingSpec::quadratic(), PotentialSpec::harmonic(0.01)));
    double low = 0.0, high = 0.0;
    for (const auto& d : diagnose_states(sr, spec)) {
        if (d.parity != Parity::Even) continue;
        if (d.index <= 20) low = std::max(low, d.overlap);
        if (d.index >= 40 && d.index <= 60) high = std::max(high, d.overlap);
    }
    o.require(low < 1e-6, "max S_n (even, n<=20) %.1e (< 1e-6)", low);
    o.require(high > 0.05, "max S_n (even, 40<=n<=60) %.2f (> 0.05)", high);
    return o;
}

Outcome ac8() {
    Outcome o;
    const LatticeSpec spec(100, 1.0);
    const double force = 0.4;
    const SpectrumResult sr =
        eigensolve(build_hamiltonian(spec, HoppingSpec::quadratic(), PotentialSpec::linear(force)));
    const LadderReport r = wannier_stark_analysis(sr, spec, force);
    o.require(r.max_spacing_deviation <= 1e-8, "%zu interior spacings, max |dE - 0.4| %.1e (<= 1e-8)",
              r.interior_spacings.size(), r.max_spacing_deviation);
    o.require(r.max_translation_residual < 1e-8, "translation residual %.1e (< 1e-8)", r.max_translation_residual);
    o.require(r.tail_amplitude < 1e-8, "amplitude at >= %.0f sites from center %.1e (< 1e-8)", r.tail_distance,
              r.tail_amplitude);
    return o;
}

Outcome ac9() {
    Outcome o;
    const double force = 0.4;
    const HamiltonianInputs in{LatticeSpec(128, 1.0), HoppingSpec::quadratic(), PotentialSpec::linear(force)};
    const SpectrumResult sr = eigensolve(build_hamiltonian(in.spec, in.hop, in.pot));
    const StateVector psi0 = make_gaussian(in.spec, {0, 0.02, 0.0});
    const double bloch = 2.0 * kPi / force;
    const TimeSeries ts = run_timeseries(in, sr, psi0, uniform_grid(2.0 * bloch, 0.05 / force), CcrModel::LinearCCR);

    double oracle = 0.0;
    for (std::size_t i = 0; i < ts.times.size(); ++i) {
        oracle = std::max(oracle, std::abs(ts.x_mean[i] - (*ts.x_exact_oracle)[i]));
    }
    o.require(oracle <= 1e-6, "oracle dev over 2 T_B %.1e (<= 1e-6)", oracle);

    const double x0 = ts.x_mean.front();
    const double x_tb = mean_position(propagate(psi0, sr, bloch), in.spec);
    o.require(std::abs(x_tb - x0) <= 1e-5, "|x(T_B) - x(0)| %.1e (T_B = %.5f)", std::abs(x_tb - x0), bloch);

    double early = 0.0;
    for (std::size_t i = 1; i < ts.times.size() && ts.times[i] < 0.5 * kPi / force; ++i) {
        early = std::max(early, std::abs(ts.x_ccr[i] - ts.x_mean[i]) / std::abs(ts.x_mean[i] - x0));
    }
    o.require(early <= 0.02, "CCR rel dev for t < pi/(2aF) %.1e (<= 2%%)", early);

    const auto [lo, hi] = std::minmax_element(ts.x_mean.begin(), ts.x_mean.end());
    const double range = *hi - *lo;
    const double late = std::abs(ccr_position_linear(psi0, in.spec, force, bloch) - x_tb);
    o.require(late > 0.5 * range, "CCR dev at T_B %.2f vs amplitude %.2f", late, range);

    std::size_t peak = 0;
    for (std::size_t i = 0; i < ts.times.size() && ts.times[i] <= bloch; ++i) {
        if (ts.s_abs[i] > ts.s_abs[peak]) peak = i;
    }
    const double t_peak = ts.times[peak];
    o.require(std::abs(t_peak - kPi / force) <= 0.1 * kPi / force, "|S| peak at t = %.3f (pi/aF = %.3f)", t_peak,
              kPi / force);
    return o;
}

Outcome ac10() {
    Outcome o;
    const double force = 0.4;
    const HamiltonianInputs in{LatticeSpec(128, 1.0), HoppingSpec::cosine(), PotentialSpec::linear(force)};
    const SpectrumResult sr = eigensolve(build_hamiltonian(in.spec, in.hop, in.pot));
    double worst = 0.0;
    std::size_t samples = 0;
    for (double b : {0.2, 0.02}) {
        const StateVector psi0 = make_gaussian(in.spec, {0, b, 0.0});
        const TimeSeries ts = run_timeseries(in, sr, psi0, uniform_grid(4.0 * kPi / force, 0.05 / force),
                                             CcrModel::PeriodicKineticCCR);
        for (std::size_t i = 0; i < ts.times.size(); ++i) worst = std::max(worst, std::abs(ts.x_ccr[i] - ts.x_mean[i]));
        samples += ts.times.size();
    }
    o.require(worst <= 1e-6, "%zu samples, max |x_ccr - x| %.1e (<= 1e-6)", samples, worst);
    return o;
}

Outcome ac11() {
    Outcome o;
    const double c = 0.01;
    const double w = std::sqrt(c);
    const HamiltonianInputs in{LatticeSpec(128, 1.0), HoppingSpec::quadratic(), PotentialSpec::harmonic(c)};
    const SpectrumResult sr = eigensolve(build_hamiltonian(in.spec, in.hop, in.pot));
    const std::vector<double> grid = uniform_grid(25.0 / w, 0.25);
    auto series = [&](long n0) {
        return run_timeseries(in, sr, make_gaussian(in.spec, {-n0, 0.2, 0.0}), grid, CcrModel::HarmonicCCR);
    };
    const double period = 2.0 * kPi / w;

    const TimeSeries s20 = series(20);
    double dev20 = 0.0;
    for (std::size_t i = 0; i < grid.size() && grid[i] <= period; ++i) {
        dev20 = std::max(dev20, std::abs(s20.x_mean[i] + 20.0 * std::cos(w * grid[i])) / 20.0);
    }
    o.require(dev20 <= 0.05, "n0=20: max dev from -20cos(0.1t) %.1e of amplitude (<= 5%%)", dev20);

    const TimeSeries s30 = series(30);
    double dev30 = 0.0;
    for (std::size_t i = 0; i < grid.size() && grid[i] < period; ++i) {
        dev30 = std::max(dev30, std::abs(s30.x_mean[i] - s30.x_ccr[i]) / 30.0);
    }
    o.require(dev30 > 0.2, "n0=30: max rel dev %.0f%% (> 20%%)", 100.0 * dev30);

    const TimeSeries s40 = series(40);
    double excursion = 0.0, t_ex = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double e = std::abs(s40.x_mean[i] - s40.x_mean.front());
        if (e > excursion) {
            excursion = e;
            t_ex = grid[i];
        }
    }
    o.require(excursion < 10.0, "n0=40: max |x(t) - x(0)| %.2f at t = %.2f (< 10)", excursion, t_ex);
    return o;
}

Outcome ac12() {
    Outcome o;
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> ud(-1.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        ComplexMatrix m(6, 6);
        std::vector<double> flat(36);
        for (int r = 0; r < 6; ++r) {
            for (int c = r; c < 6; ++c) {
                const double v = ud(rng);
                m(r, c) = m(c, r) = v;
                flat[static_cast<std::size_t>(r * 6 + c)] = flat[static_cast<std::size_t>(c * 6 + r)] = v;
            }
        }
        const SpectrumResult sr = eigensolve(OperatorMatrix(m));
        const std::vector<double> ref = oracle::jacobi_eigenvalues(flat, 6);
        for (int i = 0; i < 6; ++i) worst = std::max(worst, std::abs(sr.eigenvalues(i) - ref[static_cast<std::size_t>(i)]));
    }
    o.require(worst <= 1e-10, "50 random 6x6: max eigenvalue diff vs Jacobi %.1e (<= 1e-10)", worst);
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"AC1  matrix-element exactness", ac1},
        {"AC2  commutator identities", ac2},
        {"AC3  CCR-defect/overlap identity", ac3},
        {"AC4  discrete derivative + Euler", ac4},
        {"AC5  harmonic spectrum", ac5},
        {"AC6  near-degeneracy", ac6},
        {"AC7  overlap threshold", ac7},
        {"AC8  Wannier-Stark ladder", ac8},
        {"AC9  Bloch oscillations", ac9},
        {"AC10 accidental CCR exactness", ac10},
        {"AC11 harmonic dynamics", ac11},
        {"AC12 eigensolver oracle", ac12},
    };
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = run();
        } catch (const std::exception& e) {
            out.pass = false;
            out.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s  %-34s %s (%.1fs)\n", out.pass ? "PASS" : "FAIL", name, out.detail.c_str(), secs);
        std::fflush(stdout);
        if (!out.pass) ++failed;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
