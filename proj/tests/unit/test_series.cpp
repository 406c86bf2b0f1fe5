#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "latticeccr/latticeccr.hpp"

using namespace latticeccr;
using Catch::Matchers::WithinAbs;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> alternating_harmonic(int count, int power) {
    std::vector<double> terms;
    for (int j = 1; j <= count; ++j) terms.push_back(((j % 2 == 1) ? 1.0 : -1.0) / std::pow(j, power));
    return terms;
}

StateVector sampled(const LatticeSpec& spec, double (*f)(double)) {
    ComplexVector v(spec.size());
    for (Eigen::Index i = 0; i < spec.size(); ++i) v(i) = f(spec.position(spec.site(i)));
    return StateVector(spec.half_width(), v);
}

}  // namespace

TEST_CASE("Euler transform of alternating series", "[series]") {
    const double ln2 = std::log(2.0);
    const auto ten = alternating_harmonic(10, 1);
    double plain = 0.0;
    for (double t : ten) plain += t;
    const double accelerated = euler_accelerate(std::span<const double>(ten));
    CHECK(std::abs(plain - ln2) > 1e-2);
    CHECK_THAT(accelerated, WithinAbs(ln2, 5e-6));
    const auto fourteen = alternating_harmonic(14, 1);
    CHECK_THAT(euler_accelerate(std::span<const double>(fourteen)), WithinAbs(ln2, 1e-6));

    const auto squares = alternating_harmonic(12, 2);
    CHECK_THAT(euler_accelerate(std::span<const double>(squares)), WithinAbs(kPi * kPi / 12.0, 1e-6));
}

TEST_CASE("Euler transform edge cases", "[series]") {
    const std::vector<double> one{0.37};
    CHECK(euler_accelerate(std::span<const double>(one)) == 0.37);
    const std::vector<double> none;
    CHECK_THROWS_AS(euler_accelerate(std::span<const double>(none)), PreconditionError);
    const std::vector<Complex> z{1.0, 2.0};
    CHECK_THROWS_AS(euler_accelerate(std::span<const Complex>(z), Complex(1.0)), PreconditionError);
}

TEST_CASE("Euler transform with a complex ratio", "[series]") {
    // sum_{n>=1} z^n / n = -log(1 - z)
    const Complex z = -std::exp(Complex(0.0, 0.6));
    std::vector<Complex> terms;
    Complex power = 1.0;
    for (int n = 1; n <= 30; ++n) {
        power *= z;
        terms.push_back(power / static_cast<double>(n));
    }
    const Complex exact = -std::log(1.0 - z);
    CHECK(std::abs(euler_accelerate(std::span<const Complex>(terms), z) - exact) < 1e-8);
}

TEST_CASE("discrete derivative of a sampled Gaussian", "[series]") {
    const LatticeSpec spec(120, 0.1);
    const StateVector psi = sampled(spec, [](double x) { return std::exp(-0.5 * x * x); });
    const double exact = -0.5 * std::exp(-0.125);
    const Complex d30 = discrete_derivative(psi, spec, 5, 30, true);
    CHECK_THAT(d30.real(), WithinAbs(exact, 1e-6));
    CHECK_THAT(d30.real(), WithinAbs(-0.4412485, 1e-6));
    CHECK(std::abs(d30.imag()) < 1e-15);
    CHECK_THAT(discrete_derivative(psi, spec, 5, 40, true).real(), WithinAbs(exact, 1e-6));
    CHECK(std::abs(discrete_derivative(psi, spec, 5, 30, false).real() - exact) > 1e-4);
}

TEST_CASE("discrete derivative of constants and ramps", "[series]") {
    const LatticeSpec spec(50, 0.5);
    const StateVector constant = sampled(spec, [](double) { return 3.0; });
    CHECK(std::abs(discrete_derivative(constant, spec, 0, 20, true)) < 1e-15);
    CHECK(std::abs(discrete_derivative(constant, spec, 7, 20, false)) < 1e-15);

    const StateVector ramp = sampled(spec, [](double x) { return x; });
    CHECK_THAT(discrete_derivative(ramp, spec, 0, 20, true).real(), WithinAbs(1.0, 1e-12));
    CHECK_THAT(discrete_derivative(ramp, spec, 10, 20, true).real(), WithinAbs(1.0, 1e-12));
}

TEST_CASE("discrete derivative range checks", "[series]") {
    const LatticeSpec spec(10, 1.0);
    const StateVector psi = StateVector::site(spec, 0);
    CHECK_THROWS_AS(discrete_derivative(psi, spec, 0, 11, true), RangeError);
    CHECK_THROWS_AS(discrete_derivative(psi, spec, 5, 6, true), RangeError);
    CHECK_NOTHROW(discrete_derivative(psi, spec, 5, 5, true));
    CHECK_THROWS_AS(discrete_derivative(psi, spec, 0, 0, true), PreconditionError);
}

TEST_CASE("discrete derivative agrees with the momentum operator", "[series]") {
    const LatticeSpec spec(40, 1.0);
    const StateVector psi = make_gaussian(spec, {0, 0.1, 0.0});
    const ComplexVector ik = kI * (build_momentum(spec).entries() * psi.amplitudes());
    for (long n : {-5L, 0L, 3L}) {
        const Complex stencil = discrete_derivative(psi, spec, n, 40 - static_cast<int>(std::labs(n)), false);
        const auto i = spec.index(n);
        // the matrix row also carries the one-sided tail beyond the stencil
        CHECK(std::abs(stencil - ik(i)) < 1e-12);
    }
}

TEST_CASE("dispersion of quadratic hopping", "[series]") {
    for (double a : {1.0, 0.5}) {
        const LatticeSpec spec(10, a);
        CHECK_THAT(dispersion_eval(HoppingSpec::quadratic(), 0.0, spec, 40, true), WithinAbs(0.0, 1e-6));
        const double edge = kPi / a;
        const double k = 0.3 * edge;
        CHECK_THAT(dispersion_eval(HoppingSpec::quadratic(), k, spec, 40, true), WithinAbs(0.5 * k * k, 1e-6));
        // zone edge: plain sum, error ~ 1/j_max
        const double at_edge = dispersion_eval(HoppingSpec::quadratic(), edge, spec, 4000, true);
        CHECK_THAT(at_edge, WithinAbs(0.5 * edge * edge, 2e-3 / (a * a)));
    }
}

TEST_CASE("accelerated dispersion converges to k^2/2", "[series][property]") {
    const LatticeSpec spec(10, 1.0);
    double worst_08 = 0.0;
    double worst_09 = 0.0;
    for (int i = -90; i <= 90; ++i) {
        const double k = kPi * i / 100.0;
        const double err = std::abs(dispersion_eval(HoppingSpec::quadratic(), k, spec, 40, true) - 0.5 * k * k);
        worst_09 = std::max(worst_09, err);
        if (std::abs(i) <= 80) worst_08 = std::max(worst_08, err);
    }
    CHECK(worst_08 < 1e-6);
    CHECK(worst_09 < 2e-6);
}

TEST_CASE("dispersion of cosine and custom hopping", "[series]") {
    const LatticeSpec spec(5, 0.8);
    for (double k : {-3.0, 0.0, 1.1, kPi / 0.8}) {
        const double expected = (1.0 - std::cos(0.8 * k)) / (0.8 * 0.8);
        CHECK_THAT(dispersion_eval(HoppingSpec::cosine(), k, spec, 0, false), WithinAbs(expected, 1e-15));
    }
    const HoppingSpec custom = HoppingSpec::custom(0.5, {0.25, -0.1});
    const double k = 0.7;
    const double expected = -0.5 - 2.0 * (0.25 * std::cos(0.8 * k) - 0.1 * std::cos(1.6 * k));
    CHECK_THAT(dispersion_eval(custom, k, spec, 0, false), WithinAbs(expected, 1e-15));

    CHECK_THROWS_AS(dispersion_eval(HoppingSpec::cosine(), -kPi / 0.8, spec, 0, false), RangeError);
    CHECK_THROWS_AS(dispersion_eval(HoppingSpec::quadratic(), 0.1, spec, 0, true), PreconditionError);
}
